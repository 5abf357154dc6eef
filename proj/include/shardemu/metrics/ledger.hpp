#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "shardemu/core/block.hpp"

namespace shardemu {

struct TxSummary {
    Digest hash;
    TxKind kind = TxKind::Regular;
    std::optional<Digest> origin_hash;
    VirtualMs inject_time = 0;
};

struct BlockInfoEvent {
    ShardId shard = 0;
    Height height = 0;
    VirtualMs commit_time = 0;
    std::size_t pool_size = 0;
    BlockKind kind = BlockKind::TxBlock;
    std::vector<TxSummary> txs;
};

nlohmann::json to_json(const BlockInfoEvent& ev);
BlockInfoEvent block_info_from_json(const nlohmann::json& j);
BlockInfoEvent block_info_from_block(const Block& block, VirtualMs commit_time, std::size_t pool_size = 0);

// Transaction counts of one committed block, by kind.
struct BlockTally {
    VirtualMs commit_time = 0;
    ShardId shard = 0;
    std::uint64_t regular = 0;
    std::uint64_t intra = 0;
    std::uint64_t inter = 0;
    std::uint64_t payer_half = 0;
    std::uint64_t payee_half = 0;

    std::uint64_t total() const { return regular + intra + inter + payer_half + payee_half; }
    double credit() const { return static_cast<double>(regular) + 0.5 * static_cast<double>(total() - regular); }
};

struct PoolSample {
    VirtualMs time = 0;
    ShardId shard = 0;
    std::size_t size = 0;
};

struct CrossRecord {
    VirtualMs inject_time = 0;
    std::optional<VirtualMs> first_half;   // debit half commit time
    std::optional<VirtualMs> second_half;  // credit half commit time
};

// Set sizes over originals and committed txs: X injected originals, Z committed
// Regular, V committed debit halves, U committed credit halves, Y distinct
// originals with a committed half, W everything packed into tx blocks.
struct SetCounters {
    std::uint64_t U = 0, V = 0, W = 0, X = 0, Y = 0, Z = 0;
};

class MetricsLedger {
public:
    explicit MetricsLedger(std::uint32_t n_shards);

    std::uint32_t n_shards() const { return n_shards_; }

    void note_injected(std::uint64_t originals, std::uint64_t cross_shard);
    void note_pool_size(VirtualMs time, ShardId shard, std::size_t size);
    // Returns false for a repeated (shard, height).
    bool record_block(const BlockInfoEvent& ev);

    const SetCounters& counters() const { return counters_; }
    std::uint64_t injected_cross_shard() const { return injected_ctx_; }
    const std::vector<BlockTally>& blocks() const { return blocks_; }
    const std::vector<PoolSample>& pool_samples() const { return pool_; }
    const std::vector<std::uint64_t>& packed_per_shard() const { return packed_; }
    const std::unordered_map<Digest, std::pair<VirtualMs, VirtualMs>>& regular_confirms() const { return regular_; }
    const std::unordered_map<Digest, CrossRecord>& cross_records() const { return cross_; }
    std::uint64_t migration_blocks() const { return migration_blocks_; }
    std::optional<VirtualMs> commit_time(ShardId shard, Height height) const;

    // Originals whose every piece is on chain.
    std::uint64_t confirmed_originals() const;

private:
    std::uint32_t n_shards_;
    SetCounters counters_;
    std::uint64_t injected_ctx_ = 0;
    std::uint64_t migration_blocks_ = 0;
    std::map<std::pair<ShardId, Height>, VirtualMs> seen_;
    std::vector<BlockTally> blocks_;
    std::vector<PoolSample> pool_;
    std::vector<std::uint64_t> packed_;
    std::unordered_map<Digest, std::pair<VirtualMs, VirtualMs>> regular_;
    std::unordered_map<Digest, CrossRecord> cross_;
    std::uint64_t both_halves_ = 0;
};

struct EpochTps {
    std::int64_t epoch = 0;
    VirtualMs start_ms = 0;
    VirtualMs end_ms = 0;
    double credit = 0;
    double tps = 0;
    BlockTally kinds;  // summed counts (commit_time unused)
};

// Epochs run from 0 through the epoch of the last committed block.
std::vector<EpochTps> compute_epoch_tps(const MetricsLedger& ledger, VirtualMs epoch_len);

struct TclRow {
    Digest hash;
    std::string kind;  // "regular" or "cross_shard"
    VirtualMs inject_ms = 0;
    VirtualMs confirm_ms = 0;
    VirtualMs tcl_ms() const { return confirm_ms - inject_ms; }
};

struct TclSummary {
    std::uint64_t count = 0;
    double mean = 0, min = 0, max = 0, p50 = 0, p90 = 0, p99 = 0;
};

struct TclStats {
    std::vector<TclRow> rows;  // ordered by (confirm_ms, hash)
    std::map<std::string, TclSummary> by_kind;
    std::uint64_t unconfirmed = 0;
};

TclStats compute_tcl_stats(const MetricsLedger& ledger);
double compute_ctx_ratio(const MetricsLedger& ledger);

struct WorkloadReport {
    struct Row {
        ShardId shard = 0;
        std::uint64_t packed = 0;
        double share = 0;
    };
    std::vector<Row> rows;                           // by shard id
    std::vector<std::pair<double, double>> cdf;      // (fraction of shards, cumulative share), ascending share
};

WorkloadReport workload_cdf(const MetricsLedger& ledger);

// Observed phase durations for the relay correctness protocol: phase 1 ends with
// the last block carrying raw or debit-half txs, phase 3 with the last tx block.
struct PhaseStats {
    VirtualMs t1_ms = 0, t2_ms = 0, t3_ms = 0;
    std::uint64_t r1 = 0, r2 = 0, r3 = 0;
};

PhaseStats compute_phase_stats(const MetricsLedger& ledger, VirtualMs start_ms = 0);

void write_tps_csv(const std::filesystem::path& path, const std::vector<EpochTps>& epochs);
void write_tcl_csv(const std::filesystem::path& path, const TclStats& stats);
void write_pool_csv(const std::filesystem::path& path, const std::vector<PoolSample>& samples);
void write_workload_csv(const std::filesystem::path& path, const WorkloadReport& report);

nlohmann::json counters_to_json(const SetCounters& c);
nlohmann::json tcl_summary_to_json(const TclStats& stats);
nlohmann::json phase_stats_to_json(const PhaseStats& p);

}  // namespace shardemu
