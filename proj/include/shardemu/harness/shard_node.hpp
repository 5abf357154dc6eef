#pragma once

#include <memory>

#include "shardemu/mechanisms/shard_logic.hpp"
#include "shardemu/pbft/replica.hpp"
#include "shardemu/transport/runtime.hpp"

namespace shardemu {

struct ShardNodeConfig {
    ShardId shard = 0;
    NodeIndex index = 0;
    std::uint32_t nodes_per_shard = 4;
    std::uint32_t n_shards = 1;
    std::size_t block_size = 200;
    VirtualMs block_interval_ms = 1000;
    PoolPolicy pool_policy = PoolPolicy::Fifo;
    PbftParams pbft;
    ShardLogicParams logic;
    std::set<Address> brokers;
};

// A worker node: one replica plus its mechanism hooks, driven by transport events.
class ShardNode final : public Actor {
public:
    enum Timer : TimerKind { BlockTimer = 1, ViewChangeTimer = 2, MigrationTimer = 3 };

    explicit ShardNode(const ShardNodeConfig& cfg);

    void on_start(Runtime& rt) override;
    void on_message(Runtime& rt, const MessageEnvelope& env) override;
    void on_timer(Runtime& rt, TimerKind kind) override;

    const NodeContext& context() const { return ctx_; }
    const Replica& replica() const { return replica_; }
    const ShardLogic& logic() const { return logic_; }
    bool stopped() const { return stopped_; }
    void set_commit_observer(Replica::CommitObserver obs) { replica_.set_commit_observer(std::move(obs)); }

private:
    void emit(Runtime& rt, Outbounds out);
    void refresh_timers(Runtime& rt);

    ShardNodeConfig cfg_;
    NodeContext ctx_;
    ShardLogic logic_;
    Replica replica_;
    bool stopped_ = false;
    std::optional<VirtualMs> vc_armed_;
    std::optional<VirtualMs> migration_armed_;
};

}  // namespace shardemu
