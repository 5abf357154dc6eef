#include "shardemu/oracle/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace shardemu {

using nlohmann::json;

AnalyticExpectation expected_metrics(const AnalyticInput& in) {
    if (in.theta <= 0 || in.delta_s <= 0 || in.n_shards <= 0 || in.x <= 0) {
        throw std::invalid_argument("analytic input must be positive");
    }
    const double th = in.theta, d = in.delta_s, n = in.n_shards, x = in.x;
    AnalyticExpectation e;
    e.phi = th * n / d;
    e.e1 = th * (n + 1) / (2 * d);
    e.e2 = th * n / (2 * d);
    e.e3 = n * n * th / ((2 * n - 1) * d);
    e.e3_printed = n * n * th / (2 * d);
    e.boundary_s = x * d / (n * th);
    e.t1_s = e.boundary_s;
    e.t3_s = d * (2 * n - 1) * x / (n * n * th);
    e.tcl_z = {0, e.boundary_s};
    e.tcl_y = {e.boundary_s, e.boundary_s + x * d * (n - 1) / (th * n * n)};
    return e;
}

json to_json(const AnalyticExpectation& e) {
    return {{"phi", e.phi},
            {"E1", e.e1},
            {"E2", e.e2},
            {"E3", e.e3},
            {"E3_printed", e.e3_printed},
            {"t1_s", e.t1_s},
            {"t3_s", e.t3_s},
            {"phase_boundary_s", e.boundary_s},
            {"tcl_regular_s", {e.tcl_z.lo, e.tcl_z.hi}},
            {"tcl_cross_shard_s", {e.tcl_y.lo, e.tcl_y.hi}}};
}

std::string_view to_string(EpochPhase p) {
    switch (p) {
        case EpochPhase::Phase1: return "phase1";
        case EpochPhase::Phase2: return "phase2";
        case EpochPhase::Mixed: return "mixed";
        case EpochPhase::Partial: return "partial";
        case EpochPhase::Empty: return "empty";
    }
    return "?";
}

EpochPhase classify_epoch(const BlockTally& k) {
    auto total = k.total();
    if (total == 0) return EpochPhase::Empty;
    double first = static_cast<double>(k.regular + k.intra + k.payer_half) / static_cast<double>(total);
    double second = static_cast<double>(k.inter + k.payee_half) / static_cast<double>(total);
    if (first > 0.95) return EpochPhase::Phase1;
    if (second > 0.95) return EpochPhase::Phase2;
    return EpochPhase::Mixed;
}

double percent_distance(double observed, double expected) {
    if (expected == 0) return observed == 0 ? 0 : std::numeric_limits<double>::infinity();
    return std::abs(observed - expected) / expected * 100.0;
}

double ks_uniform(std::vector<double> sample, Interval iv) {
    if (sample.empty()) return 1.0;
    if (iv.hi <= iv.lo) throw std::invalid_argument("empty interval");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = std::clamp((sample[i] - iv.lo) / (iv.hi - iv.lo), 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

UniformFit fit_uniform(std::vector<double> sample, Interval iv) {
    UniformFit fit;
    fit.interval = iv;
    fit.samples = sample.size();
    if (sample.empty()) {
        fit.ks_d = 1.0;
        return fit;
    }
    double sum = 0;
    for (double v : sample) sum += v;
    fit.mean = sum / static_cast<double>(sample.size());
    fit.mean_dev_pct = percent_distance(fit.mean, iv.mid());
    fit.ks_d = ks_uniform(std::move(sample), iv);
    return fit;
}

VirtualMs drain_start(const MetricsLedger& ledger) {
    std::map<ShardId, VirtualMs> last;
    for (const auto& b : ledger.blocks()) {
        if (b.total() == 0) continue;
        auto& t = last[b.shard];
        t = std::max(t, b.commit_time);
    }
    if (last.empty()) return 0;
    VirtualMs first_done = std::numeric_limits<VirtualMs>::max();
    for (const auto& [shard, t] : last) first_done = std::min(first_done, t);
    return first_done;
}

ProximityReport proximity_report(const std::vector<EpochTps>& epochs, const TclStats& tcl,
                                 const AnalyticExpectation& expected, const ProtocolFlags& flags,
                                 VirtualMs drain_start_ms) {
    if (!flags.prefill || !flags.fifo || !flags.relay || !flags.static_partition) {
        throw MismatchedProtocol("proximity needs a prefilled, FIFO, relay, static-partition run");
    }
    ProximityReport rep;
    for (const auto& e : epochs) {
        EpochProximity p;
        p.epoch = e.epoch;
        p.observed_tps = e.tps;
        p.phase = classify_epoch(e.kinds);
        if (p.phase != EpochPhase::Empty && e.end_ms > drain_start_ms) p.phase = EpochPhase::Partial;
        p.excluded = e.epoch == 0 || p.phase == EpochPhase::Mixed || p.phase == EpochPhase::Partial ||
                     p.phase == EpochPhase::Empty;
        if (p.phase == EpochPhase::Phase1) p.expected_tps = expected.e1;
        if (p.phase == EpochPhase::Phase2) p.expected_tps = expected.e2;
        if (p.expected_tps > 0) p.distance_pct = percent_distance(p.observed_tps, p.expected_tps);
        if (!p.excluded) {
            if (p.phase == EpochPhase::Phase1) {
                ++rep.phase1_epochs;
                rep.max_phase1_pct = std::max(rep.max_phase1_pct, p.distance_pct);
            } else {
                ++rep.phase2_epochs;
                rep.max_phase2_pct = std::max(rep.max_phase2_pct, p.distance_pct);
            }
        }
        rep.epochs.push_back(p);
    }
    std::vector<double> reg, cross;
    for (const auto& r : tcl.rows) {
        (r.kind == "regular" ? reg : cross).push_back(static_cast<double>(r.tcl_ms()) / 1000.0);
    }
    rep.tcl_regular = fit_uniform(std::move(reg), expected.tcl_z);
    rep.tcl_cross = fit_uniform(std::move(cross), expected.tcl_y);
    return rep;
}

namespace {

json fit_json(const UniformFit& f) {
    return {{"samples", f.samples},
            {"interval_s", {f.interval.lo, f.interval.hi}},
            {"mean_s", f.mean},
            {"mean_vs_midpoint_pct", f.mean_dev_pct},
            {"ks_d", f.ks_d}};
}

}  // namespace

json to_json(const ProximityReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"phase", to_string(e.phase)},
                          {"observed_tps", e.observed_tps},
                          {"expected_tps", e.expected_tps},
                          {"distance_pct", e.distance_pct},
                          {"excluded", e.excluded}});
    }
    return {{"epochs", std::move(epochs)},
            {"phase1_epochs", r.phase1_epochs},
            {"phase2_epochs", r.phase2_epochs},
            {"max_phase1_pct", r.max_phase1_pct},
            {"max_phase2_pct", r.max_phase2_pct},
            {"tcl_regular", fit_json(r.tcl_regular)},
            {"tcl_cross_shard", fit_json(r.tcl_cross)}};
}

}  // namespace shardemu
