#pragma once

#include <optional>
#include <string_view>

#include "shardemu/core/types.hpp"

namespace shardemu {

enum class TxKind : std::uint8_t {
    Regular,
    OriginalCTX,
    IntraRelay,
    InterRelay,
    BrokerPayerHalf,
    BrokerPayeeHalf,
};

std::string_view to_string(TxKind kind);
TxKind tx_kind_from_string(std::string_view text);

// Derived kinds are the halves a cross-shard payment is split into; they always
// carry the hash of the original they came from.
constexpr bool is_derived(TxKind k) {
    return k == TxKind::IntraRelay || k == TxKind::InterRelay || k == TxKind::BrokerPayerHalf ||
           k == TxKind::BrokerPayeeHalf;
}
constexpr bool is_raw(TxKind k) { return k == TxKind::Regular || k == TxKind::OriginalCTX; }
// Debit half (executes in the payer's shard).
constexpr bool is_first_half(TxKind k) { return k == TxKind::IntraRelay || k == TxKind::BrokerPayerHalf; }
// Credit half (executes in the payee's shard).
constexpr bool is_second_half(TxKind k) { return k == TxKind::InterRelay || k == TxKind::BrokerPayeeHalf; }

struct Transaction {
    Digest hash;
    Address payer;
    Address payee;
    Amount value = 0;
    std::uint64_t nonce = 0;
    TxKind kind = TxKind::Regular;
    std::optional<Digest> origin_hash;
    VirtualMs inject_time = 0;
    std::optional<VirtualMs> confirm_time;
    // Only consulted by the fee-priority pool policy; not part of the hash.
    std::uint64_t fee = 0;

    // Builds a transaction and computes its hash. Throws std::invalid_argument when
    // the kind/origin pairing is inconsistent.
    static Transaction make(const Address& payer, const Address& payee, Amount value, std::uint64_t nonce,
                            TxKind kind, std::optional<Digest> origin_hash = std::nullopt);

    Digest compute_hash() const;
    bool hash_valid() const { return compute_hash() == hash; }

    // Same payment re-stamped with another kind (new hash); timing fields are kept.
    Transaction rekind(TxKind new_kind, std::optional<Digest> new_origin) const;
};

}  // namespace shardemu
