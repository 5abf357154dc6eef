#pragma once

#include <vector>

#include "shardemu/mechanisms/relay.hpp"

namespace shardemu {

// Rewrites a raw payment so that every piece executes inside one shard.
// Same-shard and broker-involved payments become one Regular tx; a cross-shard
// payment becomes a payer half (payer -> broker, in the payer's shard) and a
// payee half (broker -> payee, in the payee's shard) through the lowest-address
// broker. Throws MechanismError{NoBrokers} for a cross-shard payment when the
// broker set is empty.
std::vector<Transaction> broker_transform(const Transaction& tx, const PartitionMap& pmap);

// The two halves of `tx` through `broker`, both carrying tx.hash as origin.
std::pair<Transaction, Transaction> broker_split(const Transaction& tx, const Address& broker);

}  // namespace shardemu
