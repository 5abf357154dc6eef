#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "shardemu/harness/config.hpp"
#include "shardemu/harness/dataset.hpp"
#include "shardemu/harness/run.hpp"
#include "shardemu/metrics/ledger.hpp"

using namespace shardemu;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({"n_shards": 2, "nodes_per_shard": 4, "block_size": 200, "block_interval_ms": 1000,
                           "mechanism": "relay", "partition": "static", "transport": {"sim": {}}})");
}

ConfigErrc parse_error(const json& j, std::string* key = nullptr) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        if (key) *key = e.key();
        return e.code();
    }
    ADD_FAILURE() << "config accepted: " << j.dump();
    return ConfigErrc::BadValue;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("shardemu_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, MinimalIsValidWithDefaults) {
    auto c = parse_config(minimal());
    EXPECT_EQ(c.n_shards, 2u);
    EXPECT_EQ(c.epoch_ms, 80000);
    EXPECT_EQ(c.view_change_timeout_ms, 10000);
    EXPECT_EQ(c.pool_policy, PoolPolicy::Fifo);
    EXPECT_TRUE(c.is_sim());
    EXPECT_FALSE(c.prefill);
    EXPECT_DOUBLE_EQ(c.base_rate, 4000);
    auto echo = config_to_json(c);
    EXPECT_EQ(parse_config(echo).block_size, 200u);
}

TEST(Config, FaultsNeedFourNodes) {
    auto j = minimal();
    j["nodes_per_shard"] = 3;
    j["faults"] = json::array({{{"type", "crash"}, {"shard", 0}, {"node", 0}, {"at_ms", 5000}}});
    std::string key;
    EXPECT_EQ(parse_error(j, &key), ConfigErrc::BadValue);
    EXPECT_EQ(key, "nodes_per_shard");
}

TEST(Config, OneTransportOnly) {
    auto j = minimal();
    j["transport"]["tcp"] = {{"ip_table", {{"supervisor", "127.0.0.1:9000"}}}};
    EXPECT_EQ(parse_error(j), ConfigErrc::BadValue);
}

TEST(Config, UnknownKeyRejected) {
    auto j = minimal();
    j["shards"] = 4;
    EXPECT_EQ(parse_error(j), ConfigErrc::UnknownKey);
}

TEST(Config, MissingRequiredKey) {
    auto j = minimal();
    j.erase("block_size");
    EXPECT_EQ(parse_error(j), ConfigErrc::MissingKey);
    auto b = minimal();
    b["mechanism"] = "broker";
    EXPECT_EQ(parse_error(b), ConfigErrc::MissingKey);
}

TEST(Config, BrokersTopK) {
    auto j = minimal();
    j["mechanism"] = "broker";
    j["brokers"] = "top:10";
    EXPECT_EQ(parse_config(j).brokers_top_k, 10u);
}

TEST(Dataset, RowsInFileOrder) {
    std::stringstream ss;
    ss << "from,to,value\n"
       << "0x" << std::string(40, '1') << ",0x" << std::string(40, '2') << ",5\n"
       << "0x" << std::string(40, '2') << ",0x" << std::string(40, '3') << ",6\n"
       << "0x" << std::string(40, '3') << ",0x" << std::string(40, '1') << ",7\n";
    auto txs = parse_dataset(ss);
    ASSERT_EQ(txs.size(), 3u);
    EXPECT_EQ(txs[0].value, Amount(5));
    EXPECT_EQ(txs[2].value, Amount(7));
    EXPECT_EQ(txs[1].nonce, 1u);
}

TEST(Dataset, ShortAddressIsBadRow) {
    std::stringstream ss;
    ss << "from,to,value\n0x" << std::string(39, 'a') << ",0x" << std::string(40, 'b') << ",1\n";
    try {
        parse_dataset(ss);
        FAIL();
    } catch (const BadRow& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Dataset, LimitAndDeterministicGeneration) {
    auto dir = scratch("gen");
    gen_dataset_file(100, 1000, {}, 7, dir / "a.csv");
    gen_dataset_file(100, 1000, {}, 7, dir / "b.csv");
    gen_dataset_file(100, 1000, {}, 8, dir / "c.csv");
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
    EXPECT_EQ(load_dataset(dir / "a.csv", 100).size(), 100u);
    EXPECT_EQ(load_dataset(dir / "a.csv").size(), 1000u);
    std::filesystem::remove_all(dir);
}

TEST(Dataset, UniformCrossShardShare) {
    std::stringstream ss;
    gen_dataset(1000, 10000, parse_skew("uniform"), 1, ss);
    auto txs = parse_dataset(ss);
    PartitionMap p(4);
    std::size_t cross = 0;
    for (const auto& t : txs) cross += classify_transaction(t, p) == TxClass::CrossShard ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(cross) / static_cast<double>(txs.size()), 0.75, 0.02);
}

TEST(Dataset, ZipfCoverageReported) {
    std::stringstream ss;
    auto rep = gen_dataset(1000, 10000, parse_skew("zipf:1.2"), 1, ss);
    auto txs = parse_dataset(ss);
    EXPECT_NEAR(rep.top10_coverage, coverage(txs, top_accounts(txs, 10)), 1e-12);
    EXPECT_GT(rep.top10_coverage, 0.5);
    EXPECT_THROW(parse_skew("zipf:-1"), std::invalid_argument);
    EXPECT_THROW(parse_skew("pareto"), std::invalid_argument);
}

TEST(Run, ProducesReportFilesAndHoldsIdentities) {
    auto dir = scratch("run");
    gen_dataset_file(200, 2000, {}, 3, dir / "ds.csv");
    auto j = minimal();
    j["block_size"] = 100;
    j["prefill"] = true;
    j["epoch_ms"] = 5000;
    j["dataset_path"] = (dir / "ds.csv").string();
    j["output_dir"] = (dir / "out").string();
    auto res = run(parse_config(j));
    EXPECT_EQ(res.exit_code, ExitOk);
    EXPECT_EQ(res.stop, StopReason::Drained);
    for (auto f : {"tps_epochs.csv", "tcl.csv", "workload.csv", "pool_size.csv", "summary.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
    }
    EXPECT_TRUE(check_identities(res.counters).all());
    EXPECT_EQ(res.counters.X, 2000u);
    EXPECT_EQ(res.audit.divergent_heights, 0u);
    EXPECT_TRUE(res.audit.no_tx_loss);

    auto rep = dir / "report";
    report_from_run_dir(dir / "out", rep);
    for (auto f : {"tps_epochs.csv", "tcl.csv", "workload.csv"}) {
        EXPECT_EQ(slurp(rep / f), slurp(dir / "out" / f)) << f;
    }
    std::filesystem::remove_all(dir);
}

TEST(Run, NoBlocksGivesHeaderOnlyFiles) {
    auto dir = scratch("empty");
    auto j = minimal();
    j["output_dir"] = (dir / "out").string();
    auto res = run(parse_config(j), {});
    EXPECT_EQ(res.exit_code, ExitOk);
    std::ifstream tps(dir / "out" / "tps_epochs.csv");
    std::string line;
    int n = 0;
    while (std::getline(tps, line)) ++n;
    EXPECT_EQ(n, 1);
    EXPECT_EQ(res.summary.at("total_credit").get<double>(), 0.0);
    std::filesystem::remove_all(dir);
}

TEST(Run, MigrationStallMarksDegraded) {
    auto dir = scratch("stall");
    gen_dataset_file(100, 3000, parse_skew("zipf:1.1"), 4, dir / "ds.csv");
    auto j = minimal();
    j["partition"] = "clpa";
    j["epoch_ms"] = 3000;
    j["block_size"] = 50;
    j["migration_timeout_ms"] = 1;
    j["injection"] = {{"base_rate", 500}};
    j["stop"] = {{"wall_ms", 60000}};
    j["dataset_path"] = (dir / "ds.csv").string();
    j["output_dir"] = (dir / "out").string();
    auto res = run(parse_config(j));
    EXPECT_TRUE(res.degraded);
    EXPECT_EQ(res.exit_code, ExitDegraded);
    EXPECT_TRUE(res.summary.at("degraded").get<bool>());
    std::filesystem::remove_all(dir);
}
