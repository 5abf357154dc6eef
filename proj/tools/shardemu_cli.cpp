#include <iostream>

#include <CLI11.hpp>

#include "shardemu/harness/dataset.hpp"
#include "shardemu/harness/run.hpp"
#include "shardemu/oracle/analytic.hpp"

using namespace shardemu;

namespace {

int cmd_run(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    }
    RunResult res;
    try {
        res = run(cfg);
    } catch (const BadRow& e) {
        std::cerr << e.what() << "\n";
        return ExitConfigError;
    }
    const auto& c = res.counters;
    std::cout << "stop=" << (res.stop == StopReason::Drained ? "drained" : "wall_clock") << " end_ms=" << res.end_time
              << " X=" << c.X << " Z=" << c.Z << " Y=" << c.Y << " W=" << c.W << " ctx_ratio=" << res.ctx_ratio
              << " wall_s=" << res.wall_seconds << "\n";
    for (const auto& r : res.degraded_reasons) std::cout << "degraded: " << r << "\n";
    std::cout << "reports in " << cfg.output_dir.string() << "\n";
    return res.exit_code;
}

int cmd_oracle(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    }
    double x = 0;
    if (cfg.dataset_path) {
        x = static_cast<double>(load_dataset(*cfg.dataset_path, cfg.dataset_limit).size());
    }
    if (x <= 0) {
        std::cerr << "oracle needs a non-empty dataset to size |X|\n";
        return ExitConfigError;
    }
    AnalyticInput in{static_cast<double>(cfg.block_size), static_cast<double>(cfg.block_interval_ms) / 1000.0,
                     static_cast<double>(cfg.n_shards), x};
    auto j = to_json(expected_metrics(in));
    j["X"] = x;
    std::cout << j.dump(2) << "\n";
    return ExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blockchain sharding emulator"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run an emulation from a JSON config");
    run_cmd->add_option("--config", config_path, "Config file")->required();

    std::string oracle_config;
    auto* oracle_cmd = app.add_subcommand("oracle", "Print closed-form expectations for a config");
    oracle_cmd->add_option("--config", oracle_config, "Config file")->required();

    std::string run_dir, out_dir;
    auto* report_cmd = app.add_subcommand("report", "Recompute metrics from a run's stored blocks");
    report_cmd->add_option("--run-dir", run_dir, "Output directory of a finished run")->required();
    report_cmd->add_option("--out", out_dir, "Where to write the recomputed CSVs (default <run-dir>/report)");

    std::size_t accounts = 0, txs = 0;
    std::string skew = "uniform", out_path;
    std::uint64_t seed = 1;
    auto* gen_cmd = app.add_subcommand("gen-dataset", "Write a synthetic from,to,value dataset");
    gen_cmd->add_option("--accounts", accounts, "Number of accounts")->required();
    gen_cmd->add_option("--txs", txs, "Number of transactions")->required();
    gen_cmd->add_option("--skew", skew, "uniform or zipf:S");
    gen_cmd->add_option("--seed", seed, "RNG seed");
    gen_cmd->add_option("--out", out_path, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : ExitConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(config_path);
        if (*oracle_cmd) return cmd_oracle(oracle_config);
        if (*report_cmd) {
            std::filesystem::path out = out_dir.empty() ? std::filesystem::path(run_dir) / "report" : std::filesystem::path(out_dir);
            std::cout << report_from_run_dir(run_dir, out).dump(2) << "\n";
            return ExitOk;
        }
        if (*gen_cmd) {
            Skew sk;
            try {
                sk = parse_skew(skew);
            } catch (const std::invalid_argument& e) {
                std::cerr << e.what() << "\n";
                return ExitConfigError;
            }
            auto rep = gen_dataset_file(accounts, txs, sk, seed, out_path);
            std::cout << "rows=" << rep.rows << " accounts=" << rep.accounts
                      << " top10_coverage=" << rep.top10_coverage << "\n";
            return ExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return ExitOk;
}
