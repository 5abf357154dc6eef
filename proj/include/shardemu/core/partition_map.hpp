#pragma once

#include <map>
#include <set>

#include "shardemu/core/types.hpp"

namespace shardemu {

// Versioned account-to-shard assignment. Accounts without an override fall back
// to the static suffix rule (last 8 address bytes, big-endian, mod N).
struct PartitionMap {
    std::uint64_t version = 0;
    std::uint32_t n_shards = 1;
    std::map<Address, ShardId> overrides;
    std::set<Address> brokers;

    explicit PartitionMap(std::uint32_t n = 1) : n_shards(n) {}

    bool is_broker(const Address& a) const { return brokers.contains(a); }
    ShardId default_shard(const Address& a) const;

    // Merges a pruned delta of overrides into a new map at `new_version`.
    PartitionMap with_overrides(const std::map<Address, ShardId>& delta, std::uint64_t new_version) const;

    bool operator==(const PartitionMap&) const = default;
};

ShardId address_to_shard(const Address& addr, const PartitionMap& pmap);

}  // namespace shardemu
