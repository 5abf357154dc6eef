#pragma once

#include <json.hpp>

#include "shardemu/core/block.hpp"

namespace shardemu {

using json = nlohmann::json;

// Canonical JSON layouts shared by the wire codec and the on-disk block store.
// Decoders throw ParseError on malformed input, including a tx whose hash does
// not match its fields.
json to_json(const Transaction& tx);
Transaction tx_from_json(const json& j);

json to_json(const AccountState& s);
AccountState account_from_json(const json& j);

json to_json(const Block& b);
Block block_from_json(const json& j);

json txs_to_json(const std::vector<Transaction>& txs);
std::vector<Transaction> txs_from_json(const json& j);

}  // namespace shardemu
