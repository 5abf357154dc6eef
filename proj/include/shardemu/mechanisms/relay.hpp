#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "shardemu/core/ledger_ops.hpp"
#include "shardemu/transport/envelope.hpp"

namespace shardemu {

enum class MechanismErrc : std::uint8_t { NotCrossShard, NoBrokers, BadProof };

class MechanismError : public std::runtime_error {
public:
    MechanismError(MechanismErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    MechanismErrc code() const { return code_; }

private:
    MechanismErrc code_;
};

// Splits a cross-shard payment into its debit half (source shard) and credit
// half (destination shard). Both carry the original's hash and value.
// Throws MechanismError{NotCrossShard}.
std::pair<Transaction, Transaction> relay_split(const Transaction& ctx, const PartitionMap& pmap);

// Debit half of a payment, without the placement check (used once the payer is
// known to be local).
Transaction make_intra_relay(const Transaction& raw);
// Credit half matching a committed debit half.
Transaction inter_relay_for(const Transaction& intra);

// One relay_ctx per destination shard for the debit halves of a committed block,
// addressed to every node of that shard. Debit halves whose payee is in the
// block's own shard are not included.
Outbounds relay_on_commit(const Block& block, const PartitionMap& pmap, const Endpoint& sender);

struct RelayBatch {
    ShardId source_shard = 0;
    Height height = 0;
    std::vector<Transaction> txs;
};

// Structural proof check of a relay_ctx. Throws MechanismError{BadProof}.
RelayBatch relay_validate(const MessageEnvelope& env, ShardId local_shard, std::uint32_t n_shards);

}  // namespace shardemu
