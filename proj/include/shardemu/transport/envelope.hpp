#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "shardemu/core/types.hpp"

namespace shardemu {

enum class MsgType : std::uint8_t {
    InjectTxs,
    PrePrepare,
    Prepare,
    Commit,
    ViewChange,
    NewView,
    RelayCtx,
    PartitionResult,
    AccountMigrate,
    BlockInfo,
    Stop,
};

std::string_view to_string(MsgType t);
// nullopt for tags outside the closed set.
std::optional<MsgType> msg_type_from_string(std::string_view tag);

// A worker node (shard, index) or the single supervisor.
struct Endpoint {
    bool supervisor = false;
    ShardId shard = 0;
    NodeIndex index = 0;

    static Endpoint node(ShardId s, NodeIndex i) { return Endpoint{false, s, i}; }
    static Endpoint the_supervisor() { return Endpoint{true, 0, 0}; }

    // "shard.index" or "supervisor".
    std::string str() const;
    static Endpoint parse(std::string_view text);

    auto operator<=>(const Endpoint&) const = default;
    bool operator==(const Endpoint&) const = default;
};

struct MessageEnvelope {
    MsgType type = MsgType::Stop;
    Endpoint sender;
    nlohmann::json body = nlohmann::json::object();

    bool operator==(const MessageEnvelope&) const = default;
};

struct ShardBroadcast {
    ShardId shard = 0;
};
struct AllNodes {};

// Broadcasts never deliver back to the sender.
using Destination = std::variant<Endpoint, ShardBroadcast, AllNodes>;

struct Outbound {
    Destination to;
    MessageEnvelope env;
};

using Outbounds = std::vector<Outbound>;

}  // namespace shardemu
