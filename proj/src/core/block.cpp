#include "shardemu/core/block.hpp"

#include "shardemu/core/digest.hpp"

namespace shardemu {

std::string_view to_string(BlockKind k) { return k == BlockKind::TxBlock ? "tx" : "migration"; }

BlockKind block_kind_from_string(std::string_view text) {
    if (text == "tx") return BlockKind::TxBlock;
    if (text == "migration") return BlockKind::MigrationBlock;
    throw ParseError("unknown block kind: " + std::string(text));
}

Digest Block::hash() const {
    DigestWriter w;
    w.u8('B').u32(shard_id).u64(height).digest(parent_hash).digest(state_root).u32(proposer);
    w.u8(static_cast<std::uint8_t>(kind)).u64(pmap_version).i64(timestamp);
    w.u64(txs.size());
    for (const auto& tx : txs) w.digest(tx.hash);
    w.u64(migration_payload.size());
    for (const auto& s : migration_payload) w.digest(leaf_hash(s));
    w.u64(migrated_out.size());
    for (const auto& a : migrated_out) w.address(a);
    return w.finish();
}

Block genesis_block(ShardId shard) {
    Block b;
    b.shard_id = shard;
    b.height = 0;
    b.state_root = StateTree{}.root();
    return b;
}

}  // namespace shardemu
