#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shardemu/metrics/ledger.hpp"

namespace shardemu {

struct AnalyticInput {
    double theta = 0;     // block size, txs
    double delta_s = 0;   // block interval, seconds
    double n_shards = 0;
    double x = 0;         // injected originals
};

struct Interval {
    double lo = 0, hi = 0;
    double mid() const { return (lo + hi) / 2; }
};

struct AnalyticExpectation {
    double phi = 0;
    double e1 = 0, e2 = 0, e3 = 0;
    double e3_printed = 0;  // N²Θ/(2δ), kept for comparison only
    double t1_s = 0, t3_s = 0;
    double boundary_s = 0;
    Interval tcl_z;  // seconds
    Interval tcl_y;
};

AnalyticExpectation expected_metrics(const AnalyticInput& in);
nlohmann::json to_json(const AnalyticExpectation& e);

class MismatchedProtocol : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Run settings the closed forms assume.
struct ProtocolFlags {
    bool prefill = false;
    bool fifo = false;
    bool relay = false;
    bool static_partition = false;
};

enum class EpochPhase { Phase1, Phase2, Mixed, Partial, Empty };
std::string_view to_string(EpochPhase p);

// >95% raw or debit-half txs is phase 1, >95% credit halves phase 2.
EpochPhase classify_epoch(const BlockTally& kinds);

struct EpochProximity {
    std::int64_t epoch = 0;
    EpochPhase phase = EpochPhase::Empty;
    double observed_tps = 0;
    double expected_tps = 0;    // 0 when no single phase applies
    double distance_pct = 0;
    bool excluded = false;      // first epoch, mixed, partial or empty
};

struct UniformFit {
    std::uint64_t samples = 0;
    Interval interval;
    double mean = 0;
    double mean_dev_pct = 0;  // |mean - midpoint| / midpoint
    double ks_d = 0;
};

struct ProximityReport {
    std::vector<EpochProximity> epochs;
    double max_phase1_pct = 0;
    double max_phase2_pct = 0;
    std::uint64_t phase1_epochs = 0;
    std::uint64_t phase2_epochs = 0;
    UniformFit tcl_regular;
    UniformFit tcl_cross;
};

double percent_distance(double observed, double expected);

// Kolmogorov-Smirnov D of a sample against the uniform distribution on iv.
double ks_uniform(std::vector<double> sample, Interval iv);
UniformFit fit_uniform(std::vector<double> sample, Interval iv);

// Earliest time at which some shard committed its last non-empty block; epochs
// reaching past it are tagged partial.
VirtualMs drain_start(const MetricsLedger& ledger);

ProximityReport proximity_report(const std::vector<EpochTps>& epochs, const TclStats& tcl,
                                 const AnalyticExpectation& expected, const ProtocolFlags& flags,
                                 VirtualMs drain_start_ms);
nlohmann::json to_json(const ProximityReport& r);

}  // namespace shardemu
