#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "shardemu/harness/config.hpp"
#include "shardemu/supervisor/supervisor.hpp"

namespace shardemu {

enum ExitCode : int { ExitOk = 0, ExitConfigError = 2, ExitDegraded = 3 };

struct CommitRecord {
    Height height = 0;
    VirtualMs commit_time = 0;
    BlockKind kind = BlockKind::TxBlock;
    Digest state_root;
    std::size_t tx_count = 0;
};

struct RunAudit {
    // Replication: heights where two healthy replicas of a shard committed
    // different state roots, and how far the slowest replica trails.
    std::uint64_t divergent_heights = 0;
    std::uint64_t max_lag = 0;
    // Commits whose header root disagrees with the state the replica computed.
    std::uint64_t bad_root_commits = 0;
    std::uint64_t rejected_blocks = 0;
    std::uint64_t view_changes = 0;
    std::uint64_t stalled_nodes = 0;
    // Final states: accounts held by more than one shard or by a shard that
    // does not own them under the final partition map.
    std::uint64_t duplicated_accounts = 0;
    std::uint64_t misplaced_accounts = 0;
    std::uint64_t dirty_accounts = 0;
    std::uint64_t queued_txs = 0;
    std::uint64_t confirmed_originals = 0;
    bool no_tx_loss = false;
    // Broker runs: queued txs sampled at commits and how many were not local.
    std::uint64_t pool_txs_checked = 0;
    std::uint64_t pool_txs_not_local = 0;
    std::uint64_t migrations = 0;
};

nlohmann::json to_json(const RunAudit& a);

struct RunResult {
    int exit_code = ExitOk;
    bool degraded = false;
    std::vector<std::string> degraded_reasons;
    StopReason stop = StopReason::None;
    VirtualMs end_time = 0;
    double wall_seconds = 0;
    RunAudit audit;
    SetCounters counters;
    double ctx_ratio = 0;
    std::uint64_t reconfigurations = 0;
    // Per shard, what one healthy replica committed.
    std::vector<std::vector<CommitRecord>> commits;
    nlohmann::json summary;
};

// Resolves "top:K" against the dataset.
std::vector<Address> resolve_brokers(const RunConfig& cfg, const std::vector<Transaction>& dataset);

RunResult run(const RunConfig& cfg);
RunResult run(const RunConfig& cfg, std::vector<Transaction> dataset);

// Recomputes tps_epochs.csv, tcl.csv and workload.csv from the stored blocks of
// a finished run into `out_dir`; returns the recomputed summary fields.
nlohmann::json report_from_run_dir(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

// Checks the set identities on a summary's counters.
struct IdentityCheck {
    bool eq2_first = false;   // Z + Y == X
    bool eq2_second = false;  // Z + 2Y == W
    bool eq1 = false;         // Y == U == V
    bool all() const { return eq2_first && eq2_second && eq1; }
};
IdentityCheck check_identities(const SetCounters& c);

}  // namespace shardemu
