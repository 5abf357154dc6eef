#include "shardemu/mechanisms/broker.hpp"

namespace shardemu {

std::pair<Transaction, Transaction> broker_split(const Transaction& tx, const Address& broker) {
    auto stamp = [&](Transaction t) {
        t.inject_time = tx.inject_time;
        t.fee = tx.fee;
        return t;
    };
    Transaction payer_half =
        stamp(Transaction::make(tx.payer, broker, tx.value, tx.nonce, TxKind::BrokerPayerHalf, tx.hash));
    Transaction payee_half =
        stamp(Transaction::make(broker, tx.payee, tx.value, tx.nonce, TxKind::BrokerPayeeHalf, tx.hash));
    return {std::move(payer_half), std::move(payee_half)};
}

std::vector<Transaction> broker_transform(const Transaction& tx, const PartitionMap& pmap) {
    switch (classify_transaction(tx, pmap)) {
        case TxClass::Regular:
        case TxClass::BrokerInvolved:
            if (tx.kind == TxKind::Regular) return {tx};
            return {tx.rekind(TxKind::Regular, std::nullopt)};
        case TxClass::CrossShard:
            break;
    }
    if (pmap.brokers.empty()) {
        throw MechanismError(MechanismErrc::NoBrokers, "broker mechanism active but no brokers are configured");
    }
    auto [payer_half, payee_half] = broker_split(tx, *pmap.brokers.begin());
    return {std::move(payer_half), std::move(payee_half)};
}

}  // namespace shardemu
