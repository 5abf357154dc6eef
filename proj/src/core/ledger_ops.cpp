#include "shardemu/core/ledger_ops.hpp"

#include <unordered_map>

namespace shardemu {

std::string_view to_string(TxClass c) {
    switch (c) {
        case TxClass::Regular: return "regular";
        case TxClass::CrossShard: return "cross_shard";
        case TxClass::BrokerInvolved: return "broker_involved";
    }
    return "unknown";
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::BadShard: return "BadShard";
        case RejectReason::BadHeight: return "BadHeight";
        case RejectReason::BadParent: return "BadParent";
        case RejectReason::Oversize: return "Oversize";
        case RejectReason::BadBlockKind: return "BadBlockKind";
        case RejectReason::BadTxHash: return "BadTxHash";
        case RejectReason::WrongShard: return "WrongShard";
        case RejectReason::BadMigrationPayload: return "BadMigrationPayload";
        case RejectReason::BadStateRoot: return "BadStateRoot";
    }
    return "Unknown";
}

TxClass classify_transaction(const Transaction& tx, const PartitionMap& pmap) {
    if (pmap.is_broker(tx.payer) || pmap.is_broker(tx.payee)) return TxClass::BrokerInvolved;
    return address_to_shard(tx.payer, pmap) == address_to_shard(tx.payee, pmap) ? TxClass::Regular
                                                                                  : TxClass::CrossShard;
}

ShardId owner_shard(const Transaction& tx, const PartitionMap& pmap) {
    switch (tx.kind) {
        case TxKind::InterRelay:
        case TxKind::BrokerPayeeHalf:
            return address_to_shard(tx.payee, pmap);
        case TxKind::IntraRelay:
        case TxKind::BrokerPayerHalf:
            return address_to_shard(tx.payer, pmap);
        case TxKind::Regular:
        case TxKind::OriginalCTX:
            if (pmap.is_broker(tx.payer) && !pmap.is_broker(tx.payee)) return address_to_shard(tx.payee, pmap);
            return address_to_shard(tx.payer, pmap);
    }
    return 0;
}

bool locally_executable(const Transaction& tx, ShardId shard, const PartitionMap& pmap) {
    auto here = [&](const Address& a) { return pmap.is_broker(a) || address_to_shard(a, pmap) == shard; };
    switch (tx.kind) {
        case TxKind::IntraRelay:
        case TxKind::BrokerPayerHalf:
            return here(tx.payer);
        case TxKind::InterRelay:
        case TxKind::BrokerPayeeHalf:
            return here(tx.payee);
        case TxKind::Regular:
            return here(tx.payer) && here(tx.payee);
        case TxKind::OriginalCTX:
            return false;
    }
    return false;
}

StateTree apply_block_to_state(const StateTree& state, const Block& block) {
    StateTree next = state;
    if (block.kind == BlockKind::MigrationBlock) {
        for (const auto& a : block.migrated_out) next.erase(a);
        next.put_many(block.migration_payload);
        return next;
    }

    // Accumulate per-account deltas in block order, then write back in one merge.
    std::unordered_map<Address, AccountState> touched;
    auto account = [&](const Address& a) -> AccountState& {
        auto it = touched.find(a);
        if (it == touched.end()) it = touched.emplace(a, state.get_or_default(a)).first;
        return it->second;
    };
    for (const auto& tx : block.txs) {
        const Balance v = static_cast<Balance>(tx.value);
        switch (tx.kind) {
            case TxKind::Regular:
            case TxKind::OriginalCTX: {
                auto& payer = account(tx.payer);
                payer.balance -= v;
                payer.nonce += 1;
                account(tx.payee).balance += v;
                break;
            }
            case TxKind::IntraRelay:
            case TxKind::BrokerPayerHalf: {
                auto& payer = account(tx.payer);
                payer.balance -= v;
                payer.nonce += 1;
                break;
            }
            case TxKind::InterRelay:
            case TxKind::BrokerPayeeHalf:
                account(tx.payee).balance += v;
                break;
        }
    }
    std::vector<AccountState> updates;
    updates.reserve(touched.size());
    for (auto& [_, s] : touched) updates.push_back(s);
    next.put_many(std::move(updates));
    return next;
}

VerifyResult verify_block(const Block& block, const Block& head, const StateTree& state, const PartitionMap& pmap,
                          std::size_t max_txs, StateTree* post_state) {
    if (block.shard_id != head.shard_id) return VerifyResult::rejected(RejectReason::BadShard);
    if (block.height != head.height + 1) return VerifyResult::rejected(RejectReason::BadHeight);
    if (block.parent_hash != head.hash()) return VerifyResult::rejected(RejectReason::BadParent);
    if (block.txs.size() > max_txs) return VerifyResult::rejected(RejectReason::Oversize);

    if (block.kind == BlockKind::TxBlock) {
        if (!block.migration_payload.empty() || !block.migrated_out.empty()) {
            return VerifyResult::rejected(RejectReason::BadBlockKind);
        }
        for (const auto& tx : block.txs) {
            if (!tx.hash_valid()) return VerifyResult::rejected(RejectReason::BadTxHash);
            if (!locally_executable(tx, block.shard_id, pmap)) return VerifyResult::rejected(RejectReason::WrongShard);
        }
    } else {
        if (!block.txs.empty()) return VerifyResult::rejected(RejectReason::BadBlockKind);
        if (block.pmap_version != pmap.version) return VerifyResult::rejected(RejectReason::BadMigrationPayload);
        for (const auto& s : block.migration_payload) {
            if (address_to_shard(s.address, pmap) != block.shard_id) {
                return VerifyResult::rejected(RejectReason::BadMigrationPayload);
            }
        }
        for (const auto& a : block.migrated_out) {
            if (address_to_shard(a, pmap) == block.shard_id) {
                return VerifyResult::rejected(RejectReason::BadMigrationPayload);
            }
        }
    }

    StateTree next = apply_block_to_state(state, block);
    if (next.root() != block.state_root) return VerifyResult::rejected(RejectReason::BadStateRoot);
    if (post_state) *post_state = std::move(next);
    return VerifyResult::accept();
}

}  // namespace shardemu
