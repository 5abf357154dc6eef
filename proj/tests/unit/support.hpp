#pragma once

#include <string>

#include "shardemu/core/transaction.hpp"

namespace shardemu::testing {

// Address whose last 8 bytes hold `suffix` (so suffix mod N picks the shard)
// and whose first byte disambiguates otherwise equal suffixes.
inline Address addr(std::uint64_t suffix, std::uint8_t tag = 0) {
    Address a;
    a.bytes[0] = tag;
    for (int i = 0; i < 8; ++i) a.bytes[19 - i] = static_cast<std::uint8_t>(suffix >> (8 * i));
    return a;
}

inline Transaction pay(const Address& from, const Address& to, std::uint64_t value, std::uint64_t nonce = 0,
                       TxKind kind = TxKind::Regular) {
    return Transaction::make(from, to, value, nonce, kind);
}

}  // namespace shardemu::testing
