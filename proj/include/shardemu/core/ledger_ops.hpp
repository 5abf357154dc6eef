#pragma once

#include <optional>
#include <string_view>

#include "shardemu/core/block.hpp"
#include "shardemu/core/partition_map.hpp"

namespace shardemu {

enum class TxClass : std::uint8_t { Regular, CrossShard, BrokerInvolved };

std::string_view to_string(TxClass c);

// Pure function of (tx, pmap); only payer/payee placement matters.
TxClass classify_transaction(const Transaction& tx, const PartitionMap& pmap);

// Shard responsible for executing the transaction as currently stamped: the
// payer's shard for raw payments and debit halves, the payee's for credit halves.
// A raw payment with a broker payer executes on the non-broker payee's side.
ShardId owner_shard(const Transaction& tx, const PartitionMap& pmap);

// True when every account the transaction touches lives in `shard` (brokers are
// present in all shards).
bool locally_executable(const Transaction& tx, ShardId shard, const PartitionMap& pmap);

// Pure: the input tree is left untouched. Balances may go negative.
StateTree apply_block_to_state(const StateTree& state, const Block& block);

enum class RejectReason : std::uint8_t {
    BadShard,
    BadHeight,
    BadParent,
    Oversize,
    BadBlockKind,
    BadTxHash,
    WrongShard,
    BadMigrationPayload,
    BadStateRoot,
};

std::string_view to_string(RejectReason r);

struct VerifyResult {
    std::optional<RejectReason> reject;

    bool ok() const { return !reject.has_value(); }
    static VerifyResult accept() { return {}; }
    static VerifyResult rejected(RejectReason r) { return VerifyResult{r}; }
};

// Checks a proposed successor of `head` against the local state. For a
// MigrationBlock, `pmap` must be the assignment the block activates.
// When `post_state` is non-null and the block is accepted, it receives the
// state after applying the block.
VerifyResult verify_block(const Block& block, const Block& head, const StateTree& state, const PartitionMap& pmap,
                          std::size_t max_txs, StateTree* post_state = nullptr);

}  // namespace shardemu
