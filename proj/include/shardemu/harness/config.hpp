#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "shardemu/mechanisms/clpa.hpp"
#include "shardemu/mechanisms/shard_logic.hpp"
#include "shardemu/transport/sim_network.hpp"
#include "shardemu/transport/tcp_mesh.hpp"
#include "shardemu/txpool/tx_pool.hpp"

namespace shardemu {

enum class ConfigErrc : std::uint8_t { MissingKey, BadValue, UnknownKey };

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrc code, std::string key, const std::string& detail);
    ConfigErrc code() const { return code_; }
    const std::string& key() const { return key_; }

private:
    ConfigErrc code_;
    std::string key_;
};

enum class Partition : std::uint8_t { Static, Clpa };

struct FaultSpec {
    enum class Type : std::uint8_t { Crash, InvalidBlock };
    Type type = Type::Crash;
    ShardId shard = 0;
    NodeIndex node = 0;
    VirtualMs at_ms = 0;   // crash
    Height height = 0;     // invalid_block
};

struct SimTransportConfig {
    LatencyModel latency;
    std::uint64_t seed = 1;
};

struct TcpTransportConfig {
    NodeTable table;
};

struct RunConfig {
    std::uint32_t n_shards = 1;
    std::uint32_t nodes_per_shard = 4;
    std::size_t block_size = 200;
    VirtualMs block_interval_ms = 1000;
    VirtualMs epoch_ms = 80'000;
    Mechanism mechanism = Mechanism::Relay;
    Partition partition = Partition::Static;
    std::vector<Address> brokers;
    std::optional<std::size_t> brokers_top_k;
    bool prefill = false;
    double base_rate = 4000;
    double ramp = 0;
    VirtualMs batch_interval_ms = 250;
    VirtualMs view_change_timeout_ms = 10'000;
    ClpaParams clpa;
    std::variant<SimTransportConfig, TcpTransportConfig> transport;
    std::optional<std::filesystem::path> dataset_path;
    std::optional<std::size_t> dataset_limit;
    std::filesystem::path output_dir = "out";
    bool stop_on_drain = true;
    VirtualMs wall_ms = 600'000;
    PoolPolicy pool_policy = PoolPolicy::Fifo;
    std::vector<FaultSpec> faults;
    VirtualMs migration_timeout_ms = 60'000;

    bool is_sim() const { return std::holds_alternative<SimTransportConfig>(transport); }
};

// Relative paths inside the config resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig parse_config_file(const std::filesystem::path& path);

// Full echo with defaults filled in.
nlohmann::json config_to_json(const RunConfig& cfg);

std::string_view to_string(Partition p);
std::string_view to_string(PoolPolicy p);

}  // namespace shardemu
