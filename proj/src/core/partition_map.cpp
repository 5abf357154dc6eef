#include "shardemu/core/partition_map.hpp"

namespace shardemu {

ShardId PartitionMap::default_shard(const Address& a) const {
    return static_cast<ShardId>(a.suffix64() % n_shards);
}

PartitionMap PartitionMap::with_overrides(const std::map<Address, ShardId>& delta, std::uint64_t new_version) const {
    PartitionMap next = *this;
    next.version = new_version;
    for (const auto& [addr, shard] : delta) next.overrides[addr] = shard;
    return next;
}

ShardId address_to_shard(const Address& addr, const PartitionMap& pmap) {
    if (auto it = pmap.overrides.find(addr); it != pmap.overrides.end()) return it->second;
    return pmap.default_shard(addr);
}

}  // namespace shardemu
