#include "shardemu/harness/run.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "shardemu/core/serialize.hpp"
#include "shardemu/harness/dataset.hpp"
#include "shardemu/harness/shard_node.hpp"
#include "shardemu/oracle/analytic.hpp"

namespace shardemu {

using nlohmann::json;

namespace {

struct StoredBlock {
    Block block;
    VirtualMs commit_time = 0;
    std::size_t pool_size = 0;
};

struct NodeTrace {
    std::vector<CommitRecord> commits;
    std::vector<StoredBlock> blocks;  // store node only
    std::uint64_t bad_roots = 0;
    std::uint64_t pool_checked = 0;
    std::uint64_t pool_not_local = 0;
};

// Drops every event at or after `at`; the tcp transport has no crash primitive.
class CrashGate final : public Actor {
public:
    CrashGate(Actor& inner, VirtualMs at) : inner_(inner), at_(at) {}
    void on_start(Runtime& rt) override {
        if (rt.now() < at_) inner_.on_start(rt);
    }
    void on_message(Runtime& rt, const MessageEnvelope& env) override {
        if (rt.now() < at_) inner_.on_message(rt, env);
    }
    void on_timer(Runtime& rt, TimerKind kind) override {
        if (rt.now() < at_) inner_.on_timer(rt, kind);
    }

private:
    Actor& inner_;
    VirtualMs at_;
};

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::None: return "none";
        case StopReason::Drained: return "drained";
        case StopReason::WallClock: return "wall_clock";
    }
    return "?";
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

double total_credit(const std::vector<EpochTps>& epochs) {
    double c = 0;
    for (const auto& e : epochs) c += e.credit;
    return c;
}

json workload_json(const WorkloadReport& w) {
    json rows = json::array();
    for (const auto& r : w.rows) rows.push_back({{"shard", r.shard}, {"packed_txs", r.packed}, {"share", r.share}});
    json cdf = json::array();
    for (const auto& [x, y] : w.cdf) cdf.push_back({x, y});
    return {{"shards", rows}, {"cdf", cdf}};
}

json identities_json(const IdentityCheck& c) {
    return {{"Z_plus_Y_eq_X", c.eq2_first}, {"Z_plus_2Y_eq_W", c.eq2_second}, {"Y_eq_U_eq_V", c.eq1}};
}

// Metrics shared by the live run and the report subcommand.
json metric_fields(const MetricsLedger& ledger, VirtualMs epoch_ms, const std::filesystem::path& out_dir) {
    auto epochs = compute_epoch_tps(ledger, epoch_ms);
    auto tcl = compute_tcl_stats(ledger);
    auto workload = workload_cdf(ledger);
    std::filesystem::create_directories(out_dir);
    write_tps_csv(out_dir / "tps_epochs.csv", epochs);
    write_tcl_csv(out_dir / "tcl.csv", tcl);
    write_workload_csv(out_dir / "workload.csv", workload);
    return {{"counters", counters_to_json(ledger.counters())},
            {"injected_cross_shard", ledger.injected_cross_shard()},
            {"identities", identities_json(check_identities(ledger.counters()))},
            {"ctx_ratio", compute_ctx_ratio(ledger)},
            {"tcl", tcl_summary_to_json(tcl)},
            {"phase_stats", phase_stats_to_json(compute_phase_stats(ledger))},
            {"epochs", epochs.size()},
            {"total_credit", total_credit(epochs)},
            {"workload", workload_json(workload)},
            {"migration_blocks", ledger.migration_blocks()}};
}

json oracle_section(const RunConfig& cfg, const MetricsLedger& ledger) {
    json j;
    if (ledger.counters().X == 0) {
        j["skipped"] = "no transactions injected";
        return j;
    }
    AnalyticInput in{static_cast<double>(cfg.block_size), static_cast<double>(cfg.block_interval_ms) / 1000.0,
                     static_cast<double>(cfg.n_shards), static_cast<double>(ledger.counters().X)};
    auto expected = expected_metrics(in);
    j["expected"] = to_json(expected);
    ProtocolFlags flags{cfg.prefill, cfg.pool_policy == PoolPolicy::Fifo, cfg.mechanism == Mechanism::Relay,
                        cfg.partition == Partition::Static};
    try {
        j["proximity"] = to_json(proximity_report(compute_epoch_tps(ledger, cfg.epoch_ms), compute_tcl_stats(ledger),
                                                  expected, flags, drain_start(ledger)));
    } catch (const MismatchedProtocol& e) {
        j["proximity_skipped"] = e.what();
    }
    return j;
}

}  // namespace

json to_json(const RunAudit& a) {
    return {{"divergent_heights", a.divergent_heights},
            {"max_lag", a.max_lag},
            {"bad_root_commits", a.bad_root_commits},
            {"rejected_blocks", a.rejected_blocks},
            {"view_changes", a.view_changes},
            {"stalled_nodes", a.stalled_nodes},
            {"duplicated_accounts", a.duplicated_accounts},
            {"misplaced_accounts", a.misplaced_accounts},
            {"dirty_accounts", a.dirty_accounts},
            {"queued_txs", a.queued_txs},
            {"confirmed_originals", a.confirmed_originals},
            {"no_tx_loss", a.no_tx_loss},
            {"pool_txs_checked", a.pool_txs_checked},
            {"pool_txs_not_local", a.pool_txs_not_local},
            {"migrations", a.migrations}};
}

IdentityCheck check_identities(const SetCounters& c) {
    IdentityCheck r;
    r.eq2_first = c.Z + c.Y == c.X;
    r.eq2_second = c.Z + 2 * c.Y == c.W;
    r.eq1 = c.Y == c.U && c.U == c.V;
    return r;
}

std::vector<Address> resolve_brokers(const RunConfig& cfg, const std::vector<Transaction>& dataset) {
    if (cfg.brokers_top_k) return top_accounts(dataset, *cfg.brokers_top_k);
    return cfg.brokers;
}

RunResult run(const RunConfig& cfg) {
    std::vector<Transaction> dataset;
    if (cfg.dataset_path) dataset = load_dataset(*cfg.dataset_path, cfg.dataset_limit);
    return run(cfg, std::move(dataset));
}

RunResult run(const RunConfig& cfg, std::vector<Transaction> dataset) {
    const auto wall_start = std::chrono::steady_clock::now();
    const auto broker_list = resolve_brokers(cfg, dataset);
    const std::set<Address> brokers(broker_list.begin(), broker_list.end());
    const std::uint32_t n = cfg.n_shards, m = cfg.nodes_per_shard;
    auto idx = [m](ShardId s, NodeIndex i) { return static_cast<std::size_t>(s) * m + i; };

    std::set<Endpoint> faulty;
    std::map<Endpoint, Height> invalid_at;
    std::map<Endpoint, VirtualMs> crash_at;
    for (const auto& f : cfg.faults) {
        auto ep = Endpoint::node(f.shard, f.node);
        faulty.insert(ep);
        if (f.type == FaultSpec::Type::Crash) {
            crash_at[ep] = crash_at.contains(ep) ? std::min(crash_at[ep], f.at_ms) : f.at_ms;
        } else {
            invalid_at[ep] = f.height;
        }
    }
    std::vector<NodeIndex> store_node(n, 0);
    for (ShardId s = 0; s < n; ++s) {
        for (NodeIndex i = 0; i < m; ++i) {
            if (!faulty.contains(Endpoint::node(s, i))) {
                store_node[s] = i;
                break;
            }
        }
    }

    std::vector<std::unique_ptr<ShardNode>> nodes;
    std::vector<NodeTrace> traces(static_cast<std::size_t>(n) * m);
    for (ShardId s = 0; s < n; ++s) {
        for (NodeIndex i = 0; i < m; ++i) {
            ShardNodeConfig nc;
            nc.shard = s;
            nc.index = i;
            nc.nodes_per_shard = m;
            nc.n_shards = n;
            nc.block_size = cfg.block_size;
            nc.block_interval_ms = cfg.block_interval_ms;
            nc.pool_policy = cfg.pool_policy;
            nc.pbft.view_change_timeout_ms = cfg.view_change_timeout_ms;
            if (auto it = invalid_at.find(Endpoint::node(s, i)); it != invalid_at.end()) {
                nc.pbft.invalid_block_height = it->second;
            }
            nc.logic.mechanism = cfg.mechanism;
            nc.logic.migration_timeout_ms = cfg.migration_timeout_ms;
            nc.brokers = brokers;
            auto node = std::make_unique<ShardNode>(nc);
            NodeTrace* trace = &traces[idx(s, i)];
            const bool keep_blocks = store_node[s] == i;
            const bool check_pool = cfg.mechanism == Mechanism::Broker && keep_blocks;
            node->set_commit_observer([trace, keep_blocks, check_pool](const Block& b, const NodeContext& ctx) {
                trace->commits.push_back({b.height, ctx.now, b.kind, b.state_root, b.txs.size()});
                if (b.state_root != ctx.state.root()) ++trace->bad_roots;
                if (keep_blocks) trace->blocks.push_back({b, ctx.now, ctx.pool.size()});
                if (check_pool) {
                    for (const auto& tx : ctx.pool.snapshot()) {
                        ++trace->pool_checked;
                        if (!locally_executable(tx, ctx.shard, ctx.pmap)) ++trace->pool_not_local;
                    }
                }
            });
            nodes.push_back(std::move(node));
        }
    }

    SupervisorConfig sc;
    sc.n_shards = n;
    sc.epoch_ms = cfg.epoch_ms;
    sc.mechanism = cfg.mechanism;
    sc.clpa = cfg.partition == Partition::Clpa;
    sc.clpa_params = cfg.clpa;
    sc.injection.prefill = cfg.prefill;
    sc.injection.base_rate = cfg.base_rate;
    sc.injection.ramp = cfg.ramp;
    sc.injection.batch_interval_ms = cfg.batch_interval_ms;
    sc.stop_on_drain = cfg.stop_on_drain;
    sc.wall_ms = cfg.wall_ms;
    sc.brokers = brokers;
    Supervisor sup(sc, std::move(dataset));

    RunResult res;
    if (const auto* sim = std::get_if<SimTransportConfig>(&cfg.transport)) {
        SimNetwork net(sim->latency, sim->seed);
        for (ShardId s = 0; s < n; ++s) {
            for (NodeIndex i = 0; i < m; ++i) net.add_actor(Endpoint::node(s, i), nodes[idx(s, i)].get());
        }
        net.add_actor(Endpoint::the_supervisor(), &sup);
        for (const auto& [ep, at] : crash_at) net.schedule_crash(ep, at);
        net.start();
        while (!sup.finished()) {
            if (net.step().kind == SimNetwork::StepKind::Idle) break;
        }
        net.run();
        res.end_time = sup.finished() ? sup.finished_at() : net.now();
    } else {
        TcpMesh mesh(std::get<TcpTransportConfig>(cfg.transport).table);
        std::vector<std::unique_ptr<CrashGate>> gates;
        for (ShardId s = 0; s < n; ++s) {
            for (NodeIndex i = 0; i < m; ++i) {
                auto ep = Endpoint::node(s, i);
                Actor* actor = nodes[idx(s, i)].get();
                if (auto it = crash_at.find(ep); it != crash_at.end()) {
                    gates.push_back(std::make_unique<CrashGate>(*actor, it->second));
                    actor = gates.back().get();
                }
                mesh.add_actor(ep, actor);
            }
        }
        mesh.add_actor(Endpoint::the_supervisor(), &sup);
        mesh.start();
        while (!sup.finished()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        mesh.stop();
        res.end_time = sup.finished_at();
    }

    const MetricsLedger& ledger = sup.ledger();
    RunAudit& a = res.audit;
    for (ShardId s = 0; s < n; ++s) {
        std::map<Height, Digest> roots;
        std::size_t longest = 0, shortest = SIZE_MAX;
        for (NodeIndex i = 0; i < m; ++i) {
            const auto& node = *nodes[idx(s, i)];
            a.rejected_blocks += node.replica().rejected_blocks();
            a.view_changes = std::max<std::uint64_t>(a.view_changes, node.replica().view_changes());
            if (node.logic().stalled()) ++a.stalled_nodes;
            if (faulty.contains(Endpoint::node(s, i))) continue;
            const auto& tr = traces[idx(s, i)];
            a.bad_root_commits += tr.bad_roots;
            longest = std::max(longest, tr.commits.size());
            shortest = std::min(shortest, tr.commits.size());
            for (const auto& c : tr.commits) {
                auto [it, fresh] = roots.emplace(c.height, c.state_root);
                if (!fresh && it->second != c.state_root) ++a.divergent_heights;
            }
        }
        if (shortest != SIZE_MAX) a.max_lag = std::max<std::uint64_t>(a.max_lag, longest - shortest);
    }

    std::map<Address, std::vector<ShardId>> holders;
    for (ShardId s = 0; s < n; ++s) {
        const auto& node = *nodes[idx(s, store_node[s])];
        const auto& tr = traces[idx(s, store_node[s])];
        a.queued_txs += node.context().pool.size();
        a.pool_txs_checked += tr.pool_checked;
        a.pool_txs_not_local += tr.pool_not_local;
        a.migrations = std::max(a.migrations, node.logic().migrations_committed());
        for (const auto& acct : node.context().state.entries()) {
            if (!brokers.contains(acct.address)) holders[acct.address].push_back(s);
        }
        res.commits.push_back(tr.commits);
    }
    for (const auto& [addr, shards] : holders) {
        if (shards.size() > 1) {
            ++a.duplicated_accounts;
        } else if (address_to_shard(addr, sup.pmap()) != shards.front()) {
            ++a.misplaced_accounts;
        }
    }
    a.dirty_accounts = sup.pmap().overrides.size();
    a.confirmed_originals = ledger.confirmed_originals();
    a.no_tx_loss = sup.stop_reason() == StopReason::Drained && a.confirmed_originals == ledger.counters().X &&
                   a.queued_txs == 0;

    res.stop = sup.stop_reason();
    res.counters = ledger.counters();
    res.ctx_ratio = compute_ctx_ratio(ledger);
    res.reconfigurations = sup.reconfigurations();
    auto reason = [&res](std::string r) { res.degraded_reasons.push_back(std::move(r)); };
    if (cfg.stop_on_drain && res.stop != StopReason::Drained) reason("stopped before the dataset drained");
    if (a.stalled_nodes > 0) reason("migration stalled");
    if (a.divergent_heights > 0) reason("replica divergence");
    if (a.bad_root_commits > 0) reason("committed block with a wrong state root");
    if (res.stop == StopReason::Drained && (a.duplicated_accounts > 0 || a.misplaced_accounts > 0)) {
        reason("account held outside its shard");
    }
    if (res.stop == StopReason::Drained && !a.no_tx_loss) reason("transactions lost");
    res.degraded = !res.degraded_reasons.empty();
    res.exit_code = res.degraded ? ExitDegraded : ExitOk;

    std::filesystem::create_directories(cfg.output_dir);
    json summary = metric_fields(ledger, cfg.epoch_ms, cfg.output_dir);
    write_pool_csv(cfg.output_dir / "pool_size.csv", ledger.pool_samples());
    json blist = json::array();
    for (const auto& b : broker_list) blist.push_back(b.hex());
    summary["config"] = config_to_json(cfg);
    summary["resolved_brokers"] = blist;
    summary["stop_reason"] = to_string(res.stop);
    summary["end_time_ms"] = res.end_time;
    summary["reconfigurations"] = res.reconfigurations;
    summary["audit"] = to_json(a);
    summary["degraded"] = res.degraded;
    summary["degraded_reasons"] = res.degraded_reasons;
    summary["oracle"] = oracle_section(cfg, ledger);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    summary["wall_seconds"] = res.wall_seconds;
    write_json(cfg.output_dir / "summary.json", summary);

    for (ShardId s = 0; s < n; ++s) {
        std::ofstream f(cfg.output_dir / ("blocks_shard" + std::to_string(s) + ".jsonl"), std::ios::trunc);
        for (const auto& sb : traces[idx(s, store_node[s])].blocks) {
            VirtualMs t = ledger.commit_time(s, sb.block.height).value_or(sb.commit_time);
            f << json{{"type", "block"}, {"commit_time", t}, {"pool_size", sb.pool_size}, {"block", to_json(sb.block)}}
                     .dump()
              << "\n";
        }
    }
    res.summary = std::move(summary);
    return res;
}

json report_from_run_dir(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir) {
    std::ifstream sf(run_dir / "summary.json");
    if (!sf) throw std::runtime_error("no summary.json in " + run_dir.string());
    json summary = json::parse(sf);
    const auto n = summary.at("config").at("n_shards").get<std::uint32_t>();
    const auto epoch_ms = summary.at("config").at("epoch_ms").get<VirtualMs>();
    MetricsLedger ledger(n);
    ledger.note_injected(summary.at("counters").at("X").get<std::uint64_t>(),
                         summary.at("injected_cross_shard").get<std::uint64_t>());
    for (ShardId s = 0; s < n; ++s) {
        auto path = run_dir / ("blocks_shard" + std::to_string(s) + ".jsonl");
        std::ifstream f(path);
        if (!f) throw std::runtime_error("missing " + path.string());
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (j.value("type", "") != "block") continue;
            ledger.record_block(block_info_from_block(block_from_json(j.at("block")), j.at("commit_time").get<VirtualMs>(),
                                                      j.value("pool_size", std::size_t{0})));
        }
    }
    return metric_fields(ledger, epoch_ms, out_dir);
}

}  // namespace shardemu
