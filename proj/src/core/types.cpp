#include "shardemu/core/types.hpp"

#include <cctype>

namespace shardemu {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

template <typename Int>
Int parse_unsigned_decimal(std::string_view text) {
    if (text.empty()) throw ParseError("empty decimal");
    Int out = 0;
    for (char c : text) {
        if (c < '0' || c > '9') throw ParseError("bad decimal digit in '" + std::string(text) + "'");
        Int next = out * 10 + (c - '0');
        if (next / 10 != out) throw ParseError("decimal overflow: " + std::string(text));
        out = next;
    }
    return out;
}

}  // namespace

std::string to_hex(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(kHexDigits[data[i] >> 4]);
        out.push_back(kHexDigits[data[i] & 0x0f]);
    }
    return out;
}

void from_hex(std::string_view text, std::uint8_t* out, std::size_t len) {
    if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) text.remove_prefix(2);
    if (text.size() != len * 2) {
        throw ParseError("expected " + std::to_string(len * 2) + " hex digits, got " + std::to_string(text.size()));
    }
    for (std::size_t i = 0; i < len; ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("bad hex digit");
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
}

Digest Digest::from_hex(std::string_view text) {
    Digest d;
    shardemu::from_hex(text, d.bytes.data(), d.bytes.size());
    return d;
}

Address Address::from_hex(std::string_view text) {
    Address a;
    shardemu::from_hex(text, a.bytes.data(), a.bytes.size());
    return a;
}

std::uint64_t Address::suffix64() const {
    std::uint64_t v = 0;
    for (std::size_t i = bytes.size() - 8; i < bytes.size(); ++i) v = (v << 8) | bytes[i];
    return v;
}

Amount parse_amount(std::string_view decimal) {
    if (decimal.size() > 39) throw ParseError("decimal overflow: " + std::string(decimal));
    return parse_unsigned_decimal<Amount>(decimal);
}

Balance parse_balance(std::string_view decimal) {
    bool negative = !decimal.empty() && decimal.front() == '-';
    if (negative) decimal.remove_prefix(1);
    if (decimal.size() > 76) throw ParseError("decimal overflow");
    Balance magnitude = parse_unsigned_decimal<Balance>(decimal);
    return negative ? Balance(-magnitude) : magnitude;
}

std::string to_decimal(const Amount& v) { return v.str(); }
std::string to_decimal(const Balance& v) { return v.str(); }

}  // namespace shardemu
