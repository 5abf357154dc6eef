#include "shardemu/mechanisms/migration.hpp"

#include <algorithm>

#include "shardemu/core/serialize.hpp"

namespace shardemu {

nlohmann::json partition_update_to_json(const PartitionUpdate& u) {
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [a, k] : u.overrides) overrides[a.hex()] = k;
    nlohmann::json brokers = nlohmann::json::array();
    for (const auto& b : u.brokers) brokers.push_back(b.hex());
    return {{"version", u.version}, {"overrides", std::move(overrides)}, {"brokers", std::move(brokers)}};
}

PartitionUpdate partition_update_from_json(const nlohmann::json& j) {
    PartitionUpdate u;
    try {
        u.version = j.at("version").get<std::uint64_t>();
        for (const auto& [addr, k] : j.at("overrides").items()) u.overrides[Address::from_hex(addr)] = k.get<ShardId>();
        for (const auto& b : j.at("brokers")) u.brokers.insert(Address::from_hex(b.get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed partition_result: ") + e.what());
    }
    return u;
}

MigrationSession open_session(const PartitionUpdate& update, const PartitionMap& current, ShardId shard) {
    MigrationSession s;
    s.version = update.version;
    s.next_pmap = current.with_overrides(update.overrides, update.version);
    s.next_pmap.brokers = update.brokers;
    for (const auto& [a, target] : update.overrides) {
        ShardId from = address_to_shard(a, current);
        if (from == target) continue;
        s.dirty.insert(a);
        if (from == shard) s.outbound.insert(a);
        if (target == shard) {
            s.inbound.insert(a);
            s.expected_sources.insert(from);
        }
    }
    return s;
}

nlohmann::json account_migrate_body(std::uint64_t version, const std::vector<AccountTransfer>& accounts) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : accounts) list.push_back({{"state", to_json(t.state)}, {"pending_txs", txs_to_json(t.pending_txs)}});
    return {{"version", version}, {"accounts", std::move(list)}};
}

namespace {

// The account whose placement decides which shard executes the tx.
const Address& owning_account(const Transaction& tx, const PartitionMap& pmap) {
    if (is_second_half(tx.kind)) return tx.payee;
    if (is_raw(tx.kind) && pmap.is_broker(tx.payer) && !pmap.is_broker(tx.payee)) return tx.payee;
    return tx.payer;
}

}  // namespace

std::map<ShardId, std::vector<AccountTransfer>> lock_and_extract(MigrationSession& session, NodeContext& ctx) {
    session.locked = true;
    session.locked_at = ctx.now;
    ctx.pool.set_locked(true);

    std::map<Address, AccountTransfer> leaving;
    for (const auto& a : session.outbound) leaving[a].state = ctx.state.get_or_default(a);

    std::vector<Transaction> stay;
    for (auto& tx : ctx.pool.extract_for_migration(session.dirty, ctx.pmap)) {
        if (owner_shard(tx, session.next_pmap) == ctx.shard) {
            stay.push_back(std::move(tx));
            continue;
        }
        auto it = leaving.find(owning_account(tx, session.next_pmap));
        if (it != leaving.end()) {
            it->second.pending_txs.push_back(std::move(tx));
        } else {
            // Owned elsewhere but not through an account we hold: the post-commit sweep forwards it.
            stay.push_back(std::move(tx));
        }
    }
    ctx.pool.requeue(std::move(stay));

    std::map<ShardId, std::vector<AccountTransfer>> by_target;
    for (auto& [a, t] : leaving) by_target[address_to_shard(a, session.next_pmap)].push_back(std::move(t));
    return by_target;
}

void absorb_transfer(MigrationSession& session, ShardId source, const nlohmann::json& body) {
    for (const auto& entry : body.at("accounts")) {
        AccountState st = account_from_json(entry.at("state"));
        auto txs = txs_from_json(entry.at("pending_txs"));
        session.received_states[st.address] = st;
        for (auto& tx : txs) session.received_pending.push_back(std::move(tx));
    }
    session.received_sources.insert(source);
}

Proposal build_migration_block(const MigrationSession& session, const NodeContext& ctx) {
    Block b;
    b.shard_id = ctx.shard;
    b.height = ctx.head.height + 1;
    b.parent_hash = ctx.head.hash();
    b.proposer = ctx.index;
    b.kind = BlockKind::MigrationBlock;
    b.pmap_version = session.version;
    b.timestamp = ctx.now;
    for (const auto& [a, st] : session.received_states) {
        if (session.inbound.contains(a)) b.migration_payload.push_back(st);
    }
    b.migrated_out.assign(session.outbound.begin(), session.outbound.end());
    StateTree post = apply_block_to_state(ctx.state, b);
    b.state_root = post.root();
    return Proposal{std::move(b), std::move(post), {}};
}

VerifyResult verify_migration_block(const Block& block, const MigrationSession& session, const NodeContext& ctx,
                                    StateTree* post_state) {
    if (block.kind != BlockKind::MigrationBlock) return VerifyResult::rejected(RejectReason::BadBlockKind);
    if (block.pmap_version != session.version) return VerifyResult::rejected(RejectReason::BadMigrationPayload);
    std::vector<Address> expected_out(session.outbound.begin(), session.outbound.end());
    if (block.migrated_out != expected_out) return VerifyResult::rejected(RejectReason::BadMigrationPayload);
    std::set<Address> seen;
    for (const auto& st : block.migration_payload) {
        if (!session.inbound.contains(st.address) || !seen.insert(st.address).second) {
            return VerifyResult::rejected(RejectReason::BadMigrationPayload);
        }
    }
    return verify_block(block, ctx.head, ctx.state, session.next_pmap, ctx.block_size, post_state);
}

}  // namespace shardemu
