#pragma once

#include <map>
#include <optional>
#include <unordered_set>

#include "shardemu/mechanisms/broker.hpp"
#include "shardemu/mechanisms/migration.hpp"
#include "shardemu/mechanisms/relay.hpp"

namespace shardemu {

enum class Mechanism : std::uint8_t { Relay, Broker };

std::string_view to_string(Mechanism m);

struct ShardLogicParams {
    Mechanism mechanism = Mechanism::Relay;
    VirtualMs migration_timeout_ms = 60'000;
};

// Mechanism behaviour of one worker node, plugged into its replica through both
// hook interfaces: cross-shard handling (relay or broker) and the lock-based
// account migration that follows a partition result.
class ShardLogic final : public ConsensusHooks, public InterShardHooks {
public:
    explicit ShardLogic(ShardLogicParams params) : params_(params) {}

    std::optional<Proposal> op_mining(NodeContext& ctx) override;
    VerifyResult op_verification(const Block& block, const NodeContext& ctx, StateTree* post_state) override;
    Outbounds op_confirmation(const Block& block, StateTree post_state, NodeContext& ctx) override;
    bool defer_block(const Block& block, const NodeContext& ctx) override;
    Outbounds on_round_boundary(NodeContext& ctx) override;
    void on_abandon(NodeContext& ctx, std::vector<Transaction> packed) override;
    bool has_work(const NodeContext& ctx) const override;

    Outbounds handle_inter_shard(const MessageEnvelope& env, NodeContext& ctx) override;
    Arrivals screen_arrivals(std::vector<Transaction> txs, NodeContext& ctx) override;

    // Marks the session stalled when the inbound transfers are overdue.
    void check_migration_timeout(const NodeContext& ctx);
    std::optional<VirtualMs> migration_deadline() const;
    bool stalled() const { return stalled_; }
    const std::optional<MigrationSession>& session() const { return session_; }
    std::uint64_t migrations_committed() const { return migrations_committed_; }
    std::uint64_t relays_rejected() const { return relays_rejected_; }

private:
    Outbounds on_relay(const MessageEnvelope& env, NodeContext& ctx);
    Outbounds on_partition_result(const MessageEnvelope& env, NodeContext& ctx);
    Outbounds on_account_migrate(const MessageEnvelope& env, NodeContext& ctx);
    Outbounds finish_migration(NodeContext& ctx);
    Outbounds sweep_misrouted(NodeContext& ctx);
    Outbounds forward(std::map<ShardId, std::vector<Transaction>> by_shard, const NodeContext& ctx) const;
    Outbounds block_info(const Block& block, const NodeContext& ctx) const;

    const PartitionMap& latest_pmap(const NodeContext& ctx) const;
    bool seen(const Transaction& tx) const;
    void mark_committed(const Transaction& tx);

    ShardLogicParams params_;
    std::optional<MigrationSession> session_;
    std::map<std::uint64_t, std::vector<MessageEnvelope>> early_transfers_;
    std::unordered_set<Digest> committed_;     // raw payments and broker halves
    std::unordered_set<Digest> relay_origins_;  // credit halves queued or committed, by origin
    bool stalled_ = false;
    std::uint64_t migrations_committed_ = 0;
    std::uint64_t relays_rejected_ = 0;
};

}  // namespace shardemu
