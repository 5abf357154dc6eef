#include "shardemu/transport/envelope.hpp"

#include <array>
#include <charconv>

namespace shardemu {

namespace {

constexpr std::array<std::pair<MsgType, std::string_view>, 11> kTags{{
    {MsgType::InjectTxs, "inject_txs"},
    {MsgType::PrePrepare, "preprepare"},
    {MsgType::Prepare, "prepare"},
    {MsgType::Commit, "commit"},
    {MsgType::ViewChange, "view_change"},
    {MsgType::NewView, "new_view"},
    {MsgType::RelayCtx, "relay_ctx"},
    {MsgType::PartitionResult, "partition_result"},
    {MsgType::AccountMigrate, "account_migrate"},
    {MsgType::BlockInfo, "block_info"},
    {MsgType::Stop, "stop"},
}};

std::uint32_t parse_u32(std::string_view s) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("bad endpoint component: " + std::string(s));
    }
    return v;
}

}  // namespace

std::string_view to_string(MsgType t) {
    for (const auto& [type, tag] : kTags) {
        if (type == t) return tag;
    }
    return "unknown";
}

std::optional<MsgType> msg_type_from_string(std::string_view tag) {
    for (const auto& [type, name] : kTags) {
        if (name == tag) return type;
    }
    return std::nullopt;
}

std::string Endpoint::str() const {
    if (supervisor) return "supervisor";
    return std::to_string(shard) + "." + std::to_string(index);
}

Endpoint Endpoint::parse(std::string_view text) {
    if (text == "supervisor") return the_supervisor();
    auto dot = text.find('.');
    if (dot == std::string_view::npos) throw ParseError("bad endpoint: " + std::string(text));
    return node(parse_u32(text.substr(0, dot)), parse_u32(text.substr(dot + 1)));
}

}  // namespace shardemu
