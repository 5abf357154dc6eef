#include "shardemu/core/digest.hpp"

#include <openssl/sha.h>

namespace shardemu {

Digest sha256(std::span<const std::uint8_t> data) {
    Digest d;
    SHA256(data.data(), data.size(), d.bytes.data());
    return d;
}

Digest sha256(std::string_view data) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

DigestWriter& DigestWriter::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

DigestWriter& DigestWriter::u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
}

DigestWriter& DigestWriter::u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
}

DigestWriter& DigestWriter::amount(const Amount& v) {
    for (int s = 120; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
    return *this;
}

DigestWriter& DigestWriter::balance(const Balance& v) {
    // Two's complement over 256 bits.
    using U = boost::multiprecision::uint256_t;
    U mag = static_cast<U>(v < 0 ? Balance(-v) : v);
    U twos = v < 0 ? U(~mag + 1) : mag;
    for (int s = 248; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>((twos >> s) & 0xff));
    return *this;
}

DigestWriter& DigestWriter::bytes(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
    return *this;
}

}  // namespace shardemu
