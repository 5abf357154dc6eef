#include "shardemu/metrics/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace shardemu {

using nlohmann::json;

json to_json(const BlockInfoEvent& ev) {
    json txs = json::array();
    for (const auto& t : ev.txs) {
        txs.push_back({{"hash", t.hash.hex()},
                       {"kind", to_string(t.kind)},
                       {"origin_hash", t.origin_hash ? json(t.origin_hash->hex()) : json()},
                       {"inject_time", t.inject_time}});
    }
    return {{"shard", ev.shard},
            {"height", ev.height},
            {"commit_time", ev.commit_time},
            {"pool_size", ev.pool_size},
            {"block_kind", to_string(ev.kind)},
            {"txs", std::move(txs)}};
}

BlockInfoEvent block_info_from_json(const json& j) {
    BlockInfoEvent ev;
    ev.shard = j.at("shard").get<ShardId>();
    ev.height = j.at("height").get<Height>();
    ev.commit_time = j.at("commit_time").get<VirtualMs>();
    ev.pool_size = j.value("pool_size", std::size_t{0});
    if (j.contains("block_kind")) ev.kind = block_kind_from_string(j.at("block_kind").get<std::string>());
    for (const auto& t : j.at("txs")) {
        TxSummary s;
        s.hash = Digest::from_hex(t.at("hash").get<std::string>());
        s.kind = tx_kind_from_string(t.at("kind").get<std::string>());
        if (t.contains("origin_hash") && !t.at("origin_hash").is_null()) {
            s.origin_hash = Digest::from_hex(t.at("origin_hash").get<std::string>());
        }
        s.inject_time = t.at("inject_time").get<VirtualMs>();
        ev.txs.push_back(std::move(s));
    }
    return ev;
}

BlockInfoEvent block_info_from_block(const Block& block, VirtualMs commit_time, std::size_t pool_size) {
    BlockInfoEvent ev;
    ev.shard = block.shard_id;
    ev.height = block.height;
    ev.commit_time = commit_time;
    ev.pool_size = pool_size;
    ev.kind = block.kind;
    for (const auto& tx : block.txs) ev.txs.push_back({tx.hash, tx.kind, tx.origin_hash, tx.inject_time});
    return ev;
}

MetricsLedger::MetricsLedger(std::uint32_t n_shards) : n_shards_(n_shards), packed_(n_shards, 0) {}

void MetricsLedger::note_injected(std::uint64_t originals, std::uint64_t cross_shard) {
    counters_.X += originals;
    injected_ctx_ += cross_shard;
}

void MetricsLedger::note_pool_size(VirtualMs time, ShardId shard, std::size_t size) {
    pool_.push_back({time, shard, size});
}

bool MetricsLedger::record_block(const BlockInfoEvent& ev) {
    if (!seen_.emplace(std::make_pair(ev.shard, ev.height), ev.commit_time).second) return false;
    note_pool_size(ev.commit_time, ev.shard, ev.pool_size);
    if (ev.kind == BlockKind::MigrationBlock) {
        ++migration_blocks_;
        return true;
    }
    BlockTally tally;
    tally.commit_time = ev.commit_time;
    tally.shard = ev.shard;
    for (const auto& t : ev.txs) {
        ++counters_.W;
        switch (t.kind) {
            case TxKind::Regular:
            case TxKind::OriginalCTX:
                // An OriginalCTX only lands on chain in a degenerate single-shard
                // setup; it is then a plain local payment.
                ++tally.regular;
                ++counters_.Z;
                regular_.emplace(t.hash, std::make_pair(t.inject_time, ev.commit_time));
                continue;
            case TxKind::IntraRelay: ++tally.intra; break;
            case TxKind::BrokerPayerHalf: ++tally.payer_half; break;
            case TxKind::InterRelay: ++tally.inter; break;
            case TxKind::BrokerPayeeHalf: ++tally.payee_half; break;
        }
        if (!t.origin_hash) throw std::invalid_argument("derived tx without origin_hash");
        auto [it, fresh] = cross_.try_emplace(*t.origin_hash);
        if (fresh) {
            ++counters_.Y;
            it->second.inject_time = t.inject_time;
        }
        auto& slot = is_first_half(t.kind) ? it->second.first_half : it->second.second_half;
        bool had_both = it->second.first_half && it->second.second_half;
        if (is_first_half(t.kind)) ++counters_.V; else ++counters_.U;
        slot = slot ? std::max(*slot, ev.commit_time) : ev.commit_time;
        if (!had_both && it->second.first_half && it->second.second_half) ++both_halves_;
    }
    if (ev.shard < packed_.size()) packed_[ev.shard] += tally.total();
    blocks_.push_back(tally);
    return true;
}

std::optional<VirtualMs> MetricsLedger::commit_time(ShardId shard, Height height) const {
    auto it = seen_.find({shard, height});
    if (it == seen_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t MetricsLedger::confirmed_originals() const { return counters_.Z + both_halves_; }

std::vector<EpochTps> compute_epoch_tps(const MetricsLedger& ledger, VirtualMs epoch_len) {
    if (epoch_len <= 0) throw std::invalid_argument("epoch_len must be positive");
    std::vector<EpochTps> out;
    for (const auto& b : ledger.blocks()) {
        auto e = static_cast<std::size_t>(b.commit_time / epoch_len);
        while (out.size() <= e) {
            EpochTps row;
            row.epoch = static_cast<std::int64_t>(out.size());
            row.start_ms = row.epoch * epoch_len;
            row.end_ms = row.start_ms + epoch_len;
            out.push_back(row);
        }
        auto& k = out[e].kinds;
        k.regular += b.regular;
        k.intra += b.intra;
        k.inter += b.inter;
        k.payer_half += b.payer_half;
        k.payee_half += b.payee_half;
    }
    for (auto& row : out) {
        row.credit = row.kinds.credit();
        row.tps = row.credit * 1000.0 / static_cast<double>(epoch_len);
    }
    return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0;
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

TclSummary summarize(std::vector<double> v) {
    TclSummary s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.count = v.size();
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.min = v.front();
    s.max = v.back();
    s.p50 = quantile(v, 0.5);
    s.p90 = quantile(v, 0.9);
    s.p99 = quantile(v, 0.99);
    return s;
}

}  // namespace

TclStats compute_tcl_stats(const MetricsLedger& ledger) {
    TclStats st;
    for (const auto& [hash, times] : ledger.regular_confirms()) {
        st.rows.push_back({hash, "regular", times.first, times.second});
    }
    for (const auto& [origin, rec] : ledger.cross_records()) {
        if (!rec.first_half || !rec.second_half) continue;
        st.rows.push_back({origin, "cross_shard", rec.inject_time, std::max(*rec.first_half, *rec.second_half)});
    }
    std::sort(st.rows.begin(), st.rows.end(), [](const TclRow& a, const TclRow& b) {
        return std::tie(a.confirm_ms, a.hash) < std::tie(b.confirm_ms, b.hash);
    });
    std::map<std::string, std::vector<double>> samples;
    samples["regular"];
    samples["cross_shard"];
    for (const auto& r : st.rows) samples[r.kind].push_back(static_cast<double>(r.tcl_ms()));
    for (auto& [kind, v] : samples) st.by_kind[kind] = summarize(std::move(v));
    std::uint64_t confirmed = ledger.confirmed_originals();
    std::uint64_t x = ledger.counters().X;
    st.unconfirmed = x > confirmed ? x - confirmed : 0;
    return st;
}

double compute_ctx_ratio(const MetricsLedger& ledger) {
    auto x = ledger.counters().X;
    if (x == 0) return 0;
    return static_cast<double>(ledger.injected_cross_shard()) / static_cast<double>(x);
}

WorkloadReport workload_cdf(const MetricsLedger& ledger) {
    WorkloadReport rep;
    const auto& packed = ledger.packed_per_shard();
    std::uint64_t total = 0;
    for (auto p : packed) total += p;
    for (ShardId s = 0; s < packed.size(); ++s) {
        double share = total ? static_cast<double>(packed[s]) / static_cast<double>(total) : 0.0;
        rep.rows.push_back({s, packed[s], share});
    }
    std::vector<double> shares;
    for (const auto& r : rep.rows) shares.push_back(r.share);
    std::sort(shares.begin(), shares.end());
    double cum = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        cum += shares[i];
        rep.cdf.emplace_back(static_cast<double>(i + 1) / static_cast<double>(shares.size()), cum);
    }
    return rep;
}

PhaseStats compute_phase_stats(const MetricsLedger& ledger, VirtualMs start_ms) {
    PhaseStats p;
    VirtualMs end1 = start_ms, end3 = start_ms;
    for (const auto& b : ledger.blocks()) {
        if (b.total() == 0) continue;
        end3 = std::max(end3, b.commit_time);
        if (b.regular + b.intra + b.payer_half > 0) end1 = std::max(end1, b.commit_time);
    }
    p.t1_ms = end1 - start_ms;
    p.t3_ms = end3 - start_ms;
    p.t2_ms = p.t3_ms - p.t1_ms;
    for (const auto& b : ledger.blocks()) {
        if (b.commit_time <= end1) p.r1 += b.total(); else p.r2 += b.total();
    }
    p.r3 = p.r1 + p.r2;
    return p;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << header << "\n";
    return f;
}

// Fixed formatting so identical runs produce identical bytes.
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void write_tps_csv(const std::filesystem::path& path, const std::vector<EpochTps>& epochs) {
    auto f = open_csv(path, "epoch,start_ms,end_ms,credit,tps");
    for (const auto& e : epochs) {
        f << e.epoch << ',' << e.start_ms << ',' << e.end_ms << ',' << fmt_double(e.credit) << ','
          << fmt_double(e.tps) << "\n";
    }
}

void write_tcl_csv(const std::filesystem::path& path, const TclStats& stats) {
    auto f = open_csv(path, "tx_hash,kind,inject_ms,confirm_ms,tcl_ms");
    for (const auto& r : stats.rows) {
        f << r.hash.hex() << ',' << r.kind << ',' << r.inject_ms << ',' << r.confirm_ms << ',' << r.tcl_ms() << "\n";
    }
}

void write_pool_csv(const std::filesystem::path& path, const std::vector<PoolSample>& samples) {
    auto sorted = samples;
    std::stable_sort(sorted.begin(), sorted.end(), [](const PoolSample& a, const PoolSample& b) {
        return std::tie(a.time, a.shard) < std::tie(b.time, b.shard);
    });
    auto f = open_csv(path, "time_ms,shard,size");
    for (const auto& s : sorted) f << s.time << ',' << s.shard << ',' << s.size << "\n";
}

void write_workload_csv(const std::filesystem::path& path, const WorkloadReport& report) {
    auto f = open_csv(path, "shard,packed_txs,share");
    for (const auto& r : report.rows) f << r.shard << ',' << r.packed << ',' << fmt_double(r.share) << "\n";
}

json counters_to_json(const SetCounters& c) {
    return {{"U", c.U}, {"V", c.V}, {"W", c.W}, {"X", c.X}, {"Y", c.Y}, {"Z", c.Z}};
}

json tcl_summary_to_json(const TclStats& stats) {
    json j = json::object();
    for (const auto& [kind, s] : stats.by_kind) {
        j[kind] = {{"count", s.count}, {"mean_ms", s.mean}, {"min_ms", s.min}, {"max_ms", s.max},
                   {"p50_ms", s.p50},  {"p90_ms", s.p90},   {"p99_ms", s.p99}};
    }
    j["unconfirmed"] = stats.unconfirmed;
    return j;
}

json phase_stats_to_json(const PhaseStats& p) {
    return {{"t1_ms", p.t1_ms}, {"t2_ms", p.t2_ms}, {"t3_ms", p.t3_ms},
            {"R1", p.r1},       {"R2", p.r2},       {"R3", p.r3}};
}

}  // namespace shardemu
