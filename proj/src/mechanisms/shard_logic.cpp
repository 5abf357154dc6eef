#include "shardemu/mechanisms/shard_logic.hpp"

#include <iostream>

#include "shardemu/core/serialize.hpp"

namespace shardemu {

std::string_view to_string(Mechanism m) { return m == Mechanism::Relay ? "relay" : "broker"; }

namespace {

struct Placement {
    std::optional<Transaction> keep;
    std::map<ShardId, std::vector<Transaction>> away;
};

bool here(const Address& a, ShardId shard, const PartitionMap& pmap) {
    return pmap.is_broker(a) || address_to_shard(a, pmap) == shard;
}

// Decides where a queued or arriving tx belongs under `pmap`. In broker mode a
// Regular tx that has become cross-shard is split through the lowest broker.
Placement place(const Transaction& tx, Mechanism mech, ShardId shard, const PartitionMap& pmap) {
    Placement p;
    if (mech == Mechanism::Relay) {
        ShardId owner = owner_shard(tx, pmap);
        if (owner == shard) {
            p.keep = tx;
        } else {
            p.away[owner].push_back(tx);
        }
        return p;
    }
    if (locally_executable(tx, shard, pmap)) {
        p.keep = tx;
        return p;
    }
    if (is_raw(tx.kind) && !pmap.brokers.empty() && classify_transaction(tx, pmap) == TxClass::CrossShard) {
        auto [payer_half, payee_half] = broker_split(tx, *pmap.brokers.begin());
        for (auto* half : {&payer_half, &payee_half}) {
            ShardId owner = owner_shard(*half, pmap);
            if (owner == shard) {
                p.keep = std::move(*half);
            } else {
                p.away[owner].push_back(std::move(*half));
            }
        }
        return p;
    }
    p.away[owner_shard(tx, pmap)].push_back(tx);
    return p;
}

}  // namespace

const PartitionMap& ShardLogic::latest_pmap(const NodeContext& ctx) const {
    return session_ ? session_->next_pmap : ctx.pmap;
}

bool ShardLogic::seen(const Transaction& tx) const {
    if (tx.kind == TxKind::InterRelay) return relay_origins_.contains(*tx.origin_hash);
    return committed_.contains(tx.hash);
}

void ShardLogic::mark_committed(const Transaction& tx) {
    switch (tx.kind) {
        case TxKind::IntraRelay:
            committed_.insert(*tx.origin_hash);
            break;
        case TxKind::InterRelay:
            relay_origins_.insert(*tx.origin_hash);
            break;
        default:
            committed_.insert(tx.hash);
    }
}

std::optional<Proposal> ShardLogic::op_mining(NodeContext& ctx) {
    if (session_) {
        if (session_->complete()) return build_migration_block(*session_, ctx);
        return std::nullopt;
    }
    if (ctx.pool.locked() || ctx.pool.empty()) return std::nullopt;

    std::vector<Transaction> used, back, txs;
    for (auto& tx : ctx.pool.pack_block_txs(ctx.block_size)) {
        std::optional<Transaction> exec;
        if (locally_executable(tx, ctx.shard, ctx.pmap)) {
            exec = tx;
        } else if (params_.mechanism == Mechanism::Relay && is_raw(tx.kind) && here(tx.payer, ctx.shard, ctx.pmap)) {
            exec = make_intra_relay(tx);
        }
        if (exec) {
            txs.push_back(std::move(*exec));
            used.push_back(std::move(tx));
        } else {
            back.push_back(std::move(tx));
        }
    }
    if (!back.empty()) ctx.pool.requeue(std::move(back));
    if (txs.empty()) return std::nullopt;

    Block b;
    b.shard_id = ctx.shard;
    b.height = ctx.head.height + 1;
    b.parent_hash = ctx.head.hash();
    b.proposer = ctx.index;
    b.kind = BlockKind::TxBlock;
    b.txs = std::move(txs);
    b.pmap_version = ctx.pmap.version;
    b.timestamp = ctx.now;
    StateTree post = apply_block_to_state(ctx.state, b);
    b.state_root = post.root();
    return Proposal{std::move(b), std::move(post), std::move(used)};
}

VerifyResult ShardLogic::op_verification(const Block& block, const NodeContext& ctx, StateTree* post_state) {
    if (block.kind == BlockKind::MigrationBlock) {
        if (!session_ || session_->version != block.pmap_version) {
            return VerifyResult::rejected(RejectReason::BadMigrationPayload);
        }
        return verify_migration_block(block, *session_, ctx, post_state);
    }
    return verify_block(block, ctx.head, ctx.state, ctx.pmap, ctx.block_size, post_state);
}

bool ShardLogic::defer_block(const Block& block, const NodeContext& ctx) {
    if (block.kind != BlockKind::MigrationBlock || block.pmap_version <= ctx.pmap.version) return false;
    return !session_ || session_->version < block.pmap_version;
}

Outbounds ShardLogic::op_confirmation(const Block& block, StateTree post_state, NodeContext& ctx) {
    ctx.state = std::move(post_state);
    Outbounds out;
    if (block.kind == BlockKind::MigrationBlock) {
        out = finish_migration(ctx);
    } else {
        std::vector<Digest> done;
        std::vector<Transaction> local_relays;
        for (const auto& tx : block.txs) {
            done.push_back(tx.kind == TxKind::IntraRelay ? *tx.origin_hash : tx.hash);
            mark_committed(tx);
            if (tx.kind == TxKind::IntraRelay && address_to_shard(tx.payee, ctx.pmap) == ctx.shard) {
                if (relay_origins_.insert(*tx.origin_hash).second) local_relays.push_back(inter_relay_for(tx));
            }
        }
        ctx.pool.remove(done);
        if (!local_relays.empty()) ctx.pool.append_relays(std::move(local_relays), ctx.pmap);
        if (params_.mechanism == Mechanism::Relay && ctx.is_leader()) {
            out = relay_on_commit(block, ctx.pmap, ctx.self());
        }
    }
    for (auto& o : block_info(block, ctx)) out.push_back(std::move(o));
    return out;
}

Outbounds ShardLogic::block_info(const Block& block, const NodeContext& ctx) const {
    if (!ctx.is_leader()) return {};
    nlohmann::json txs = nlohmann::json::array();
    for (const auto& tx : block.txs) {
        txs.push_back({{"hash", tx.hash.hex()},
                       {"kind", to_string(tx.kind)},
                       {"origin_hash", tx.origin_hash ? nlohmann::json(tx.origin_hash->hex()) : nlohmann::json()},
                       {"inject_time", tx.inject_time}});
    }
    nlohmann::json body{{"shard", ctx.shard},
                        {"height", block.height},
                        {"commit_time", ctx.now},
                        {"pool_size", ctx.pool.size()},
                        {"block_kind", to_string(block.kind)},
                        {"txs", std::move(txs)}};
    Outbounds out;
    out.push_back({Endpoint::the_supervisor(), MessageEnvelope{MsgType::BlockInfo, ctx.self(), std::move(body)}});
    return out;
}

Outbounds ShardLogic::finish_migration(NodeContext& ctx) {
    MigrationSession s = std::move(*session_);
    session_.reset();
    ctx.pmap = s.next_pmap;
    auto arrivals = screen_arrivals(std::move(s.received_pending), ctx);
    ctx.pool.requeue(std::move(arrivals.keep));
    ctx.pool.set_locked(false);
    ++migrations_committed_;
    for (auto it = early_transfers_.begin(); it != early_transfers_.end();) {
        it = it->first <= ctx.pmap.version ? early_transfers_.erase(it) : std::next(it);
    }
    Outbounds out = std::move(arrivals.forward);
    for (auto& o : sweep_misrouted(ctx)) out.push_back(std::move(o));
    return out;
}

Outbounds ShardLogic::sweep_misrouted(NodeContext& ctx) {
    std::map<ShardId, std::vector<Transaction>> away;
    std::vector<Digest> drop;
    for (const auto& tx : ctx.pool.snapshot()) {
        auto p = place(tx, params_.mechanism, ctx.shard, ctx.pmap);
        if (p.keep && p.keep->hash == tx.hash) continue;
        if (p.keep) {
            ctx.pool.replace(tx.hash, std::move(*p.keep));
        } else {
            drop.push_back(tx.hash);
        }
        if (tx.kind == TxKind::InterRelay) relay_origins_.erase(*tx.origin_hash);
        for (auto& [k, txs] : p.away) {
            for (auto& t : txs) away[k].push_back(std::move(t));
        }
    }
    ctx.pool.remove(drop);
    return forward(std::move(away), ctx);
}

Outbounds ShardLogic::forward(std::map<ShardId, std::vector<Transaction>> by_shard, const NodeContext& ctx) const {
    Outbounds out;
    if (!ctx.is_leader()) return out;
    for (auto& [dest, txs] : by_shard) {
        if (txs.empty()) continue;
        out.push_back({ShardBroadcast{dest},
                       MessageEnvelope{MsgType::InjectTxs, ctx.self(), {{"txs", txs_to_json(txs)}}}});
    }
    return out;
}

Arrivals ShardLogic::screen_arrivals(std::vector<Transaction> txs, NodeContext& ctx) {
    Arrivals result;
    std::map<ShardId, std::vector<Transaction>> away;
    const PartitionMap& pmap = latest_pmap(ctx);
    for (auto& tx : txs) {
        if (seen(tx) || ctx.pool.contains(tx.hash)) continue;
        auto p = place(tx, params_.mechanism, ctx.shard, pmap);
        if (p.keep) {
            if (p.keep->kind == TxKind::InterRelay) relay_origins_.insert(*p.keep->origin_hash);
            result.keep.push_back(std::move(*p.keep));
        }
        for (auto& [k, list] : p.away) {
            for (auto& t : list) away[k].push_back(std::move(t));
        }
    }
    result.forward = forward(std::move(away), ctx);
    return result;
}

Outbounds ShardLogic::on_round_boundary(NodeContext& ctx) {
    if (!session_ || session_->locked) return {};
    auto by_target = lock_and_extract(*session_, ctx);
    for (const auto& [_, transfers] : by_target) {
        for (const auto& t : transfers) {
            for (const auto& tx : t.pending_txs) {
                if (tx.kind == TxKind::InterRelay) relay_origins_.erase(*tx.origin_hash);
            }
        }
    }
    Outbounds out;
    if (!ctx.is_leader()) return out;
    for (const auto& [target, transfers] : by_target) {
        out.push_back({ShardBroadcast{target}, MessageEnvelope{MsgType::AccountMigrate, ctx.self(),
                                                               account_migrate_body(session_->version, transfers)}});
    }
    return out;
}

void ShardLogic::on_abandon(NodeContext& ctx, std::vector<Transaction> packed) {
    ctx.pool.requeue_front(std::move(packed));
}

bool ShardLogic::has_work(const NodeContext& ctx) const {
    if (session_) return session_->complete();
    return !ctx.pool.empty() && !ctx.pool.locked();
}

Outbounds ShardLogic::handle_inter_shard(const MessageEnvelope& env, NodeContext& ctx) {
    try {
        switch (env.type) {
            case MsgType::RelayCtx: return on_relay(env, ctx);
            case MsgType::PartitionResult: return on_partition_result(env, ctx);
            case MsgType::AccountMigrate: return on_account_migrate(env, ctx);
            default: break;
        }
    } catch (const ParseError& e) {
        std::cerr << "node " << ctx.self().str() << ": malformed " << to_string(env.type) << ": " << e.what() << "\n";
        return {};
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "node " << ctx.self().str() << ": malformed " << to_string(env.type) << ": " << e.what() << "\n";
        return {};
    }
    return {};
}

Outbounds ShardLogic::on_relay(const MessageEnvelope& env, NodeContext& ctx) {
    RelayBatch batch;
    try {
        batch = relay_validate(env, ctx.shard, ctx.n_shards);
    } catch (const MechanismError& e) {
        ++relays_rejected_;
        std::cerr << "node " << ctx.self().str() << ": relay rejected: " << e.what() << "\n";
        return {};
    }
    const PartitionMap& pmap = latest_pmap(ctx);
    std::vector<Transaction> local;
    std::map<ShardId, std::vector<Transaction>> away;
    for (auto& tx : batch.txs) {
        if (relay_origins_.contains(*tx.origin_hash)) continue;
        ShardId owner = address_to_shard(tx.payee, pmap);
        if (owner == ctx.shard) {
            relay_origins_.insert(*tx.origin_hash);
            local.push_back(std::move(tx));
        } else {
            away[owner].push_back(std::move(tx));
        }
    }
    ctx.pool.append_relays(std::move(local), pmap);
    return forward(std::move(away), ctx);
}

Outbounds ShardLogic::on_partition_result(const MessageEnvelope& env, NodeContext& ctx) {
    if (!env.sender.supervisor) return {};
    PartitionUpdate update = partition_update_from_json(env.body);
    if (update.version <= ctx.pmap.version) return {};
    if (session_) {
        std::cerr << "node " << ctx.self().str() << ": partition result " << update.version
                  << " while migration " << session_->version << " is unresolved; ignored\n";
        return {};
    }
    bool moves = false;
    for (const auto& [a, k] : update.overrides) moves = moves || address_to_shard(a, ctx.pmap) != k;
    if (!moves) {
        ctx.pmap = ctx.pmap.with_overrides(update.overrides, update.version);
        ctx.pmap.brokers = update.brokers;
        return {};
    }
    session_ = open_session(update, ctx.pmap, ctx.shard);
    auto early = early_transfers_.find(update.version);
    if (early != early_transfers_.end()) {
        for (const auto& e : early->second) {
            if (!session_->received_sources.contains(e.sender.shard)) absorb_transfer(*session_, e.sender.shard, e.body);
        }
        early_transfers_.erase(early);
    }
    return {};
}

Outbounds ShardLogic::on_account_migrate(const MessageEnvelope& env, NodeContext& ctx) {
    if (env.sender.supervisor || env.sender.shard == ctx.shard) return {};
    std::uint64_t version = env.body.at("version").get<std::uint64_t>();
    if (session_ && session_->version == version) {
        if (!session_->received_sources.contains(env.sender.shard)) absorb_transfer(*session_, env.sender.shard, env.body);
        return {};
    }
    if (version <= ctx.pmap.version) {
        // The migration block already landed; only the queued txs are still owed.
        std::vector<Transaction> pending;
        for (const auto& entry : env.body.at("accounts")) {
            for (auto& tx : txs_from_json(entry.at("pending_txs"))) pending.push_back(std::move(tx));
        }
        auto arrivals = screen_arrivals(std::move(pending), ctx);
        ctx.pool.requeue(std::move(arrivals.keep));
        return std::move(arrivals.forward);
    }
    early_transfers_[version].push_back(env);
    return {};
}

std::optional<VirtualMs> ShardLogic::migration_deadline() const {
    if (!session_ || !session_->locked || session_->complete() || session_->stalled) return std::nullopt;
    return session_->locked_at + params_.migration_timeout_ms;
}

void ShardLogic::check_migration_timeout(const NodeContext& ctx) {
    auto deadline = migration_deadline();
    if (!deadline || ctx.now < *deadline) return;
    session_->stalled = true;
    stalled_ = true;
    std::cerr << "node " << ctx.self().str() << ": migration " << session_->version << " stalled waiting for "
              << session_->expected_sources.size() - session_->received_sources.size() << " source shard(s)\n";
}

}  // namespace shardemu
