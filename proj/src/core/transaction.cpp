#include "shardemu/core/transaction.hpp"

#include "shardemu/core/digest.hpp"

namespace shardemu {

std::string_view to_string(TxKind kind) {
    switch (kind) {
        case TxKind::Regular: return "regular";
        case TxKind::OriginalCTX: return "original_ctx";
        case TxKind::IntraRelay: return "intra_relay";
        case TxKind::InterRelay: return "inter_relay";
        case TxKind::BrokerPayerHalf: return "broker_payer_half";
        case TxKind::BrokerPayeeHalf: return "broker_payee_half";
    }
    return "unknown";
}

TxKind tx_kind_from_string(std::string_view text) {
    for (auto k : {TxKind::Regular, TxKind::OriginalCTX, TxKind::IntraRelay, TxKind::InterRelay,
                   TxKind::BrokerPayerHalf, TxKind::BrokerPayeeHalf}) {
        if (to_string(k) == text) return k;
    }
    throw ParseError("unknown tx kind: " + std::string(text));
}

Digest Transaction::compute_hash() const {
    DigestWriter w;
    w.u8('T').address(payer).address(payee).amount(value).u64(nonce).u8(static_cast<std::uint8_t>(kind));
    if (origin_hash) {
        w.u8(1).digest(*origin_hash);
    } else {
        w.u8(0);
    }
    return w.finish();
}

Transaction Transaction::make(const Address& payer, const Address& payee, Amount value, std::uint64_t nonce,
                              TxKind kind, std::optional<Digest> origin_hash) {
    if (is_derived(kind) != origin_hash.has_value()) {
        throw std::invalid_argument("derived kinds need an origin hash and raw kinds must not carry one");
    }
    Transaction tx;
    tx.payer = payer;
    tx.payee = payee;
    tx.value = value;
    tx.nonce = nonce;
    tx.kind = kind;
    tx.origin_hash = origin_hash;
    tx.hash = tx.compute_hash();
    return tx;
}

Transaction Transaction::rekind(TxKind new_kind, std::optional<Digest> new_origin) const {
    Transaction tx = make(payer, payee, value, nonce, new_kind, new_origin);
    tx.inject_time = inject_time;
    tx.confirm_time = confirm_time;
    tx.fee = fee;
    return tx;
}

}  // namespace shardemu
