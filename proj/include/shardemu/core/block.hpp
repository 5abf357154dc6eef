#pragma once

#include <vector>

#include "shardemu/core/state_tree.hpp"
#include "shardemu/core/transaction.hpp"

namespace shardemu {

enum class BlockKind : std::uint8_t { TxBlock, MigrationBlock };

std::string_view to_string(BlockKind k);
BlockKind block_kind_from_string(std::string_view text);

struct Block {
    ShardId shard_id = 0;
    Height height = 0;
    Digest parent_hash;
    Digest state_root;
    NodeIndex proposer = 0;
    BlockKind kind = BlockKind::TxBlock;
    std::vector<Transaction> txs;

    // MigrationBlock only: states installed into this shard, accounts handed over
    // to other shards, and the partition-map version the block activates.
    std::vector<AccountState> migration_payload;
    std::vector<Address> migrated_out;
    std::uint64_t pmap_version = 0;

    VirtualMs timestamp = 0;

    Digest hash() const;
};

// Height-0 empty TxBlock with the empty-state root.
Block genesis_block(ShardId shard);

}  // namespace shardemu
