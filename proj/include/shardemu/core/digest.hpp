#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shardemu/core/types.hpp"

namespace shardemu {

// SHA-256 is the single digest used for tx hashes, block hashes and Merkle nodes.
Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

// Incremental builder for canonical byte encodings fed into sha256.
class DigestWriter {
public:
    DigestWriter& u8(std::uint8_t v);
    DigestWriter& u32(std::uint32_t v);
    DigestWriter& u64(std::uint64_t v);
    DigestWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
    DigestWriter& amount(const Amount& v);    // 16 bytes big-endian
    DigestWriter& balance(const Balance& v);  // 32 bytes two's complement big-endian
    DigestWriter& bytes(std::span<const std::uint8_t> b);
    DigestWriter& digest(const Digest& d) { return bytes(d.bytes); }
    DigestWriter& address(const Address& a) { return bytes(a.bytes); }

    Digest finish() const { return sha256(buf_); }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

}  // namespace shardemu
