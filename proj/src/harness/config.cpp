#include "shardemu/harness/config.hpp"

#include <fstream>
#include <set>

namespace shardemu {

using nlohmann::json;

namespace {

std::string_view errc_name(ConfigErrc c) {
    switch (c) {
        case ConfigErrc::MissingKey: return "missing key";
        case ConfigErrc::BadValue: return "bad value";
        case ConfigErrc::UnknownKey: return "unknown key";
    }
    return "?";
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw ConfigError(ConfigErrc::BadValue, key, why);
}

// Walks one JSON object, remembering which keys were consumed.
class Section {
public:
    Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j.is_object()) bad(prefix_.empty() ? "<root>" : prefix_, "expected an object");
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(ConfigErrc::MissingKey, path(key), "required");
        used_.insert(key);
        return j_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        const json& v = at(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            bad(path(key), "wrong type");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    std::int64_t positive(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
        if (!has(key) && fallback) return *fallback;
        const json& v = at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) bad(path(key), "must be a positive integer");
        return v.get<std::int64_t>();
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.contains(k)) throw ConfigError(ConfigErrc::UnknownKey, path(k), "not recognised");
        }
    }

private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> used_;
};

Address parse_address(const std::string& key, const std::string& text) {
    try {
        return Address::from_hex(text);
    } catch (const std::exception& e) {
        bad(key, e.what());
    }
}

SimTransportConfig parse_sim(const json& j) {
    Section s(j, "transport.sim");
    SimTransportConfig sim;
    if (s.has("latency_ms")) {
        const json& lat = s.at("latency_ms");
        if (lat.is_number_integer()) {
            if (lat.get<std::int64_t>() < 0) bad("transport.sim.latency_ms", "negative");
            sim.latency = LatencyModel::fixed(lat.get<VirtualMs>());
        } else if (lat.is_object()) {
            Section l(lat, "transport.sim.latency_ms");
            auto lo = l.get<VirtualMs>("min");
            auto hi = l.get<VirtualMs>("max");
            l.finish();
            if (lo < 0 || hi < lo) bad("transport.sim.latency_ms", "need 0 <= min <= max");
            sim.latency = LatencyModel::uniform(lo, hi);
        } else {
            bad("transport.sim.latency_ms", "integer or {min, max}");
        }
    }
    sim.seed = s.get_or<std::uint64_t>("seed", 1);
    s.finish();
    return sim;
}

FaultSpec parse_fault(const json& j, std::size_t i) {
    std::string prefix = "faults[" + std::to_string(i) + "]";
    Section s(j, prefix);
    FaultSpec f;
    auto type = s.get<std::string>("type");
    f.shard = s.get<ShardId>("shard");
    f.node = s.get<NodeIndex>("node");
    if (type == "crash") {
        f.type = FaultSpec::Type::Crash;
        f.at_ms = s.get<VirtualMs>("at_ms");
        if (f.at_ms < 0) bad(s.path("at_ms"), "negative");
    } else if (type == "invalid_block") {
        f.type = FaultSpec::Type::InvalidBlock;
        f.height = static_cast<Height>(s.positive("height"));
    } else {
        bad(s.path("type"), "expected crash or invalid_block");
    }
    s.finish();
    return f;
}

}  // namespace

ConfigError::ConfigError(ConfigErrc code, std::string key, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + " '" + key + "': " + detail), code_(code), key_(std::move(key)) {}

std::string_view to_string(Partition p) { return p == Partition::Clpa ? "clpa" : "static"; }
std::string_view to_string(PoolPolicy p) { return p == PoolPolicy::FeePriority ? "fee" : "fifo"; }

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    Section s(j, "");
    RunConfig c;
    c.n_shards = static_cast<std::uint32_t>(s.positive("n_shards"));
    c.nodes_per_shard = static_cast<std::uint32_t>(s.positive("nodes_per_shard"));
    c.block_size = static_cast<std::size_t>(s.positive("block_size"));
    c.block_interval_ms = s.positive("block_interval_ms");
    c.epoch_ms = s.positive("epoch_ms", c.epoch_ms);

    auto mech = s.get<std::string>("mechanism");
    if (mech == "relay") {
        c.mechanism = Mechanism::Relay;
    } else if (mech == "broker") {
        c.mechanism = Mechanism::Broker;
    } else {
        bad("mechanism", "expected relay or broker");
    }
    auto part = s.get<std::string>("partition");
    if (part == "static") {
        c.partition = Partition::Static;
    } else if (part == "clpa") {
        c.partition = Partition::Clpa;
    } else {
        bad("partition", "expected static or clpa");
    }

    if (s.has("brokers")) {
        const json& b = s.at("brokers");
        if (b.is_string()) {
            auto text = b.get<std::string>();
            if (text.rfind("top:", 0) != 0) bad("brokers", "expected a list or \"top:K\"");
            try {
                auto k = std::stoll(text.substr(4));
                if (k <= 0) bad("brokers", "K must be positive");
                c.brokers_top_k = static_cast<std::size_t>(k);
            } catch (const std::logic_error&) {
                bad("brokers", "bad K in top:K");
            }
        } else if (b.is_array()) {
            for (const auto& a : b) {
                if (!a.is_string()) bad("brokers", "addresses must be strings");
                c.brokers.push_back(parse_address("brokers", a.get<std::string>()));
            }
        } else {
            bad("brokers", "expected a list or \"top:K\"");
        }
    }
    if (c.mechanism == Mechanism::Broker && c.brokers.empty() && !c.brokers_top_k) {
        throw ConfigError(ConfigErrc::MissingKey, "brokers", "required by the broker mechanism");
    }

    c.prefill = s.get_or<bool>("prefill", false);
    if (s.has("injection")) {
        if (c.prefill) bad("injection", "cannot be combined with prefill");
        Section inj(s.at("injection"), "injection");
        c.base_rate = inj.get_or<double>("base_rate", c.base_rate);
        c.ramp = inj.get_or<double>("ramp", c.ramp);
        c.batch_interval_ms = inj.positive("batch_interval_ms", c.batch_interval_ms);
        inj.finish();
        if (c.base_rate < 0 || c.ramp < 0) bad("injection", "rates must be non-negative");
    }

    c.view_change_timeout_ms = s.positive("pbft_view_change_timeout_ms", 10 * c.block_interval_ms);
    c.migration_timeout_ms = s.positive("migration_timeout_ms", c.migration_timeout_ms);

    if (s.has("clpa")) {
        Section cl(s.at("clpa"), "clpa");
        c.clpa.beta = cl.get_or<double>("beta", c.clpa.beta);
        c.clpa.rho = static_cast<int>(cl.positive("rho", c.clpa.rho));
        cl.finish();
        if (c.clpa.beta < 0) bad("clpa.beta", "must be non-negative");
    }

    {
        Section t(s.at("transport"), "transport");
        bool sim = t.has("sim"), tcp = t.has("tcp");
        if (sim && tcp) bad("transport", "exactly one of sim and tcp");
        if (!sim && !tcp) throw ConfigError(ConfigErrc::MissingKey, "transport.sim", "one transport is required");
        if (sim) {
            c.transport = parse_sim(t.at("sim"));
        } else {
            Section tc(t.at("tcp"), "transport.tcp");
            const json& table = tc.at("ip_table");
            tc.finish();
            TcpTransportConfig cfg;
            try {
                if (table.is_string()) {
                    std::filesystem::path p = table.get<std::string>();
                    cfg.table = load_node_table(p.is_relative() ? base_dir / p : p);
                } else {
                    cfg.table = parse_node_table(table);
                }
            } catch (const std::exception& e) {
                bad("transport.tcp.ip_table", e.what());
            }
            c.transport = std::move(cfg);
        }
        t.finish();
    }

    if (s.has("dataset_path")) {
        std::filesystem::path p = s.get<std::string>("dataset_path");
        c.dataset_path = p.is_relative() ? base_dir / p : p;
    }
    if (s.has("dataset_limit")) c.dataset_limit = static_cast<std::size_t>(s.positive("dataset_limit"));
    if (s.has("output_dir")) {
        std::filesystem::path p = s.get<std::string>("output_dir");
        c.output_dir = p.is_relative() ? base_dir / p : p;
    } else {
        c.output_dir = base_dir / c.output_dir;
    }

    if (s.has("stop")) {
        Section st(s.at("stop"), "stop");
        c.stop_on_drain = st.get_or<bool>("drain", c.stop_on_drain);
        c.wall_ms = st.positive("wall_ms", c.wall_ms);
        st.finish();
    }

    auto policy = s.get_or<std::string>("pool_policy", "fifo");
    if (policy == "fifo") {
        c.pool_policy = PoolPolicy::Fifo;
    } else if (policy == "fee") {
        c.pool_policy = PoolPolicy::FeePriority;
    } else {
        bad("pool_policy", "expected fifo or fee");
    }

    if (s.has("faults")) {
        const json& faults = s.at("faults");
        if (!faults.is_array()) bad("faults", "expected a list");
        for (std::size_t i = 0; i < faults.size(); ++i) c.faults.push_back(parse_fault(faults[i], i));
    }
    for (const auto& f : c.faults) {
        if (f.shard >= c.n_shards || f.node >= c.nodes_per_shard) bad("faults", "target node does not exist");
    }
    if (!c.faults.empty() && c.nodes_per_shard < 4) bad("nodes_per_shard", "faults need at least 4 nodes (f >= 1)");
    s.finish();
    return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrc::BadValue, path.string(), "cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigErrc::BadValue, path.string(), e.what());
    }
    return parse_config(j, path.parent_path());
}

json config_to_json(const RunConfig& c) {
    json j{{"n_shards", c.n_shards},
           {"nodes_per_shard", c.nodes_per_shard},
           {"block_size", c.block_size},
           {"block_interval_ms", c.block_interval_ms},
           {"epoch_ms", c.epoch_ms},
           {"mechanism", to_string(c.mechanism)},
           {"partition", to_string(c.partition)},
           {"prefill", c.prefill},
           {"pbft_view_change_timeout_ms", c.view_change_timeout_ms},
           {"migration_timeout_ms", c.migration_timeout_ms},
           {"clpa", {{"beta", c.clpa.beta}, {"rho", c.clpa.rho}}},
           {"stop", {{"drain", c.stop_on_drain}, {"wall_ms", c.wall_ms}}},
           {"pool_policy", to_string(c.pool_policy)},
           {"output_dir", c.output_dir.string()}};
    if (c.brokers_top_k) {
        j["brokers"] = "top:" + std::to_string(*c.brokers_top_k);
    } else {
        json list = json::array();
        for (const auto& a : c.brokers) list.push_back(a.hex());
        j["brokers"] = list;
    }
    if (!c.prefill) {
        j["injection"] = {{"base_rate", c.base_rate}, {"ramp", c.ramp}, {"batch_interval_ms", c.batch_interval_ms}};
    }
    if (const auto* sim = std::get_if<SimTransportConfig>(&c.transport)) {
        json lat = sim->latency.min_ms == sim->latency.max_ms
                       ? json(sim->latency.min_ms)
                       : json{{"min", sim->latency.min_ms}, {"max", sim->latency.max_ms}};
        j["transport"] = {{"sim", {{"latency_ms", lat}, {"seed", sim->seed}}}};
    } else {
        j["transport"] = {{"tcp", {{"ip_table", node_table_to_json(std::get<TcpTransportConfig>(c.transport).table)}}}};
    }
    if (c.dataset_path) j["dataset_path"] = c.dataset_path->string();
    if (c.dataset_limit) j["dataset_limit"] = *c.dataset_limit;
    json faults = json::array();
    for (const auto& f : c.faults) {
        if (f.type == FaultSpec::Type::Crash) {
            faults.push_back({{"type", "crash"}, {"shard", f.shard}, {"node", f.node}, {"at_ms", f.at_ms}});
        } else {
            faults.push_back({{"type", "invalid_block"}, {"shard", f.shard}, {"node", f.node}, {"height", f.height}});
        }
    }
    j["faults"] = faults;
    return j;
}

}  // namespace shardemu
