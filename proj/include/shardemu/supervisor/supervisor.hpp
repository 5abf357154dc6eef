#pragma once

#include <atomic>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "shardemu/mechanisms/clpa.hpp"
#include "shardemu/mechanisms/shard_logic.hpp"
#include "shardemu/metrics/ledger.hpp"
#include "shardemu/transport/runtime.hpp"

namespace shardemu {

struct InjectionSchedule {
    bool prefill = false;
    double base_rate = 0;  // txs per second
    double ramp = 0;       // extra txs per second per epoch
    VirtualMs batch_interval_ms = 250;

    double rate(std::int64_t epoch) const { return base_rate + static_cast<double>(epoch) * ramp; }
    // Fractional batch sizes accumulate in `carry`.
    std::size_t batch_size(std::int64_t epoch, double& carry) const;
};

struct SupervisorConfig {
    std::uint32_t n_shards = 1;
    VirtualMs epoch_ms = 80'000;
    Mechanism mechanism = Mechanism::Relay;
    bool clpa = false;
    ClpaParams clpa_params;
    InjectionSchedule injection;
    bool stop_on_drain = true;
    std::optional<VirtualMs> wall_ms;
    std::set<Address> brokers;
};

enum class StopReason { None, Drained, WallClock };

// Injects the dataset, observes committed blocks and drives reconfiguration.
class Supervisor final : public Actor {
public:
    enum Timer : TimerKind { InjectTimer = 1, EpochTimer = 2, WallTimer = 3 };

    Supervisor(SupervisorConfig cfg, std::vector<Transaction> dataset);

    void on_start(Runtime& rt) override;
    void on_message(Runtime& rt, const MessageEnvelope& env) override;
    void on_timer(Runtime& rt, TimerKind kind) override;

    // Pure steps, exposed for tests.
    Outbounds inject_batch(std::size_t count, VirtualMs now);
    void handle_block_info(const BlockInfoEvent& ev);
    Outbounds epoch_reconfigure(VirtualMs now);
    bool stop_condition_met() const;

    // Safe to poll from another thread.
    bool finished() const { return done_.load(); }
    StopReason stop_reason() const { return stop_; }
    VirtualMs finished_at() const { return finished_at_; }
    const MetricsLedger& ledger() const { return ledger_; }
    const PartitionMap& pmap() const { return pmap_; }
    const AccountGraph& graph() const { return graph_; }
    bool reconfig_pending() const { return pending_version_.has_value(); }
    std::uint64_t reconfigurations() const { return reconfigurations_; }
    std::size_t cursor() const { return cursor_; }
    bool dataset_drained() const { return cursor_ >= dataset_.size(); }
    std::int64_t current_epoch(VirtualMs now) const { return now / cfg_.epoch_ms; }

private:
    void finish(Runtime& rt, StopReason why);

    SupervisorConfig cfg_;
    std::vector<Transaction> dataset_;
    std::size_t cursor_ = 0;
    double carry_ = 0;
    PartitionMap pmap_;
    MetricsLedger ledger_;
    AccountGraph graph_;
    // Endpoints of every injected original, for graph folding.
    std::unordered_map<Digest, std::pair<Address, Address>> parties_;
    std::vector<std::size_t> pool_estimate_;
    std::optional<std::uint64_t> pending_version_;
    std::set<ShardId> migrated_shards_;
    std::uint64_t reconfigurations_ = 0;
    StopReason stop_ = StopReason::None;
    std::atomic<bool> done_{false};
    VirtualMs finished_at_ = 0;
};

}  // namespace shardemu
