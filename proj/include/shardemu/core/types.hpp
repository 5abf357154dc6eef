#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace shardemu {

using ShardId = std::uint32_t;
using NodeIndex = std::uint32_t;
using Height = std::uint64_t;
using ViewNumber = std::uint64_t;

// Virtual milliseconds in sim mode, wall milliseconds since run start in tcp mode.
using VirtualMs = std::int64_t;

using Amount = boost::multiprecision::uint128_t;
using Balance = boost::multiprecision::int256_t;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string to_hex(const std::uint8_t* data, std::size_t len);
// Accepts an optional 0x prefix; throws ParseError on bad length or digits.
void from_hex(std::string_view text, std::uint8_t* out, std::size_t len);

struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    std::string hex() const { return "0x" + to_hex(bytes.data(), bytes.size()); }
    static Digest from_hex(std::string_view text);

    auto operator<=>(const Digest&) const = default;
    bool operator==(const Digest&) const = default;
};

struct Address {
    std::array<std::uint8_t, 20> bytes{};

    std::string hex() const { return "0x" + to_hex(bytes.data(), bytes.size()); }
    static Address from_hex(std::string_view text);

    // Last 8 bytes read as a big-endian unsigned integer.
    std::uint64_t suffix64() const;

    auto operator<=>(const Address&) const = default;
    bool operator==(const Address&) const = default;
};

Amount parse_amount(std::string_view decimal);
Balance parse_balance(std::string_view decimal);
std::string to_decimal(const Amount& v);
std::string to_decimal(const Balance& v);

}  // namespace shardemu

template <>
struct std::hash<shardemu::Digest> {
    std::size_t operator()(const shardemu::Digest& d) const noexcept {
        std::size_t h = 0;
        for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes[i];
        return h;
    }
};

template <>
struct std::hash<shardemu::Address> {
    std::size_t operator()(const shardemu::Address& a) const noexcept {
        return static_cast<std::size_t>(a.suffix64() * 0x9E3779B97F4A7C15ULL);
    }
};
