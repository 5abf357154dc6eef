#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "shardemu/pbft/hooks.hpp"

namespace shardemu {

// Parsed partition_result body.
struct PartitionUpdate {
    std::uint64_t version = 0;
    std::map<Address, ShardId> overrides;
    std::set<Address> brokers;
};

nlohmann::json partition_update_to_json(const PartitionUpdate& u);
PartitionUpdate partition_update_from_json(const nlohmann::json& j);

// The shard-local view of one reconfiguration.
struct MigrationSession {
    std::uint64_t version = 0;
    PartitionMap next_pmap;
    std::set<Address> dirty;
    std::set<Address> outbound;  // held here, leaving
    std::set<Address> inbound;   // arriving here
    std::set<ShardId> expected_sources;
    std::set<ShardId> received_sources;
    std::map<Address, AccountState> received_states;
    std::vector<Transaction> received_pending;
    bool locked = false;
    VirtualMs locked_at = 0;
    bool stalled = false;

    MigrationSession() : next_pmap(1) {}

    bool complete() const { return locked && received_sources == expected_sources; }
};

MigrationSession open_session(const PartitionUpdate& update, const PartitionMap& current, ShardId shard);

struct AccountTransfer {
    AccountState state;
    std::vector<Transaction> pending_txs;
};

nlohmann::json account_migrate_body(std::uint64_t version, const std::vector<AccountTransfer>& accounts);

// Locks the pool and pulls every queued tx that touches a dirty account. Txs
// this shard still owns afterwards go back to the tail; the rest ride along
// with the outbound account that determines their owner. Returns the transfers
// grouped by target shard (outbound accounts with no state here travel as a
// zero state).
std::map<ShardId, std::vector<AccountTransfer>> lock_and_extract(MigrationSession& session, NodeContext& ctx);

// Records one source shard's account_migrate.
void absorb_transfer(MigrationSession& session, ShardId source, const nlohmann::json& body);

// Leader side: the migration block for a complete session, with its post state.
Proposal build_migration_block(const MigrationSession& session, const NodeContext& ctx);

VerifyResult verify_migration_block(const Block& block, const MigrationSession& session, const NodeContext& ctx,
                                    StateTree* post_state);

}  // namespace shardemu
