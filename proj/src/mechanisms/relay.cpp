#include "shardemu/mechanisms/relay.hpp"

#include <map>

#include "shardemu/core/serialize.hpp"

namespace shardemu {

Transaction make_intra_relay(const Transaction& raw) {
    return raw.rekind(TxKind::IntraRelay, raw.hash);
}

Transaction inter_relay_for(const Transaction& intra) {
    return intra.rekind(TxKind::InterRelay, intra.origin_hash);
}

std::pair<Transaction, Transaction> relay_split(const Transaction& ctx, const PartitionMap& pmap) {
    if (!is_raw(ctx.kind) || classify_transaction(ctx, pmap) != TxClass::CrossShard) {
        throw MechanismError(MechanismErrc::NotCrossShard, "transaction " + ctx.hash.hex() + " is not cross-shard");
    }
    Transaction intra = make_intra_relay(ctx);
    Transaction inter = inter_relay_for(intra);
    return {std::move(intra), std::move(inter)};
}

Outbounds relay_on_commit(const Block& block, const PartitionMap& pmap, const Endpoint& sender) {
    std::map<ShardId, std::vector<Transaction>> by_dest;
    for (const auto& tx : block.txs) {
        if (tx.kind != TxKind::IntraRelay) continue;
        ShardId dest = address_to_shard(tx.payee, pmap);
        if (dest == block.shard_id) continue;
        by_dest[dest].push_back(inter_relay_for(tx));
    }
    Outbounds out;
    for (auto& [dest, txs] : by_dest) {
        nlohmann::json body{{"source_shard", block.shard_id}, {"height", block.height}, {"txs", txs_to_json(txs)}};
        out.push_back({ShardBroadcast{dest}, MessageEnvelope{MsgType::RelayCtx, sender, std::move(body)}});
    }
    return out;
}

RelayBatch relay_validate(const MessageEnvelope& env, ShardId local_shard, std::uint32_t n_shards) {
    auto bad = [](const std::string& why) { return MechanismError(MechanismErrc::BadProof, why); };
    if (env.type != MsgType::RelayCtx) throw bad("not a relay_ctx");
    RelayBatch batch;
    try {
        batch.source_shard = env.body.at("source_shard").get<ShardId>();
        batch.height = env.body.at("height").get<Height>();
        batch.txs = txs_from_json(env.body.at("txs"));
    } catch (const std::exception& e) {
        throw bad(std::string("malformed relay_ctx: ") + e.what());
    }
    if (batch.source_shard >= n_shards) throw bad("relay claims nonexistent shard " + std::to_string(batch.source_shard));
    if (batch.source_shard == local_shard) throw bad("relay claims to come from the receiving shard");
    if (env.sender.supervisor || env.sender.shard != batch.source_shard) {
        throw bad("relay sender " + env.sender.str() + " is not a node of shard " + std::to_string(batch.source_shard));
    }
    if (batch.height == 0) throw bad("relay proof names the genesis height");
    for (const auto& tx : batch.txs) {
        if (tx.kind != TxKind::InterRelay || !tx.origin_hash) throw bad("relay batch carries a non-relay transaction");
    }
    return batch;
}

}  // namespace shardemu
