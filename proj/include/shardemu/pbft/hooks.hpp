#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "shardemu/core/ledger_ops.hpp"
#include "shardemu/transport/envelope.hpp"
#include "shardemu/txpool/tx_pool.hpp"

namespace shardemu {

// Everything a replica and its mechanism hooks share about one worker node.
struct NodeContext {
    ShardId shard = 0;
    NodeIndex index = 0;
    std::uint32_t nodes_per_shard = 1;
    std::uint32_t n_shards = 1;
    std::size_t block_size = 1;

    TxPool pool;
    StateTree state;
    PartitionMap pmap;
    Block head;
    ViewNumber view = 0;
    VirtualMs now = 0;

    NodeContext(ShardId s, NodeIndex i, std::uint32_t nodes, std::uint32_t shards, std::size_t theta,
                PoolPolicy policy = PoolPolicy::Fifo)
        : shard(s), index(i), nodes_per_shard(nodes), n_shards(shards), block_size(theta), pool(s, policy),
          pmap(shards), head(genesis_block(s)) {}

    NodeIndex leader() const { return static_cast<NodeIndex>(view % nodes_per_shard); }
    bool is_leader() const { return leader() == index; }
    Endpoint self() const { return Endpoint::node(shard, index); }
};

struct Proposal {
    Block block;
    StateTree post_state;
    // Pool entries consumed by this proposal, as they sat in the pool.
    std::vector<Transaction> packed;
};

class ConsensusHooks {
public:
    virtual ~ConsensusHooks() = default;

    // Leader only. nullopt when there is nothing to propose.
    virtual std::optional<Proposal> op_mining(NodeContext& ctx) = 0;
    virtual VerifyResult op_verification(const Block& block, const NodeContext& ctx, StateTree* post_state) = 0;
    // Installs the post state and returns relays, block info and similar traffic.
    virtual Outbounds op_confirmation(const Block& block, StateTree post_state, NodeContext& ctx) = 0;

    // A block this node cannot judge yet (e.g. a migration block ahead of its
    // partition result); the replica holds the preprepare back.
    virtual bool defer_block(const Block&, const NodeContext&) { return false; }
    // Called whenever no round is in flight.
    virtual Outbounds on_round_boundary(NodeContext&) { return {}; }
    // The node's own proposal was abandoned by a view change.
    virtual void on_abandon(NodeContext&, std::vector<Transaction>) {}
    virtual bool has_work(const NodeContext& ctx) const { return !ctx.pool.empty() && !ctx.pool.locked(); }
};

struct Arrivals {
    std::vector<Transaction> keep;
    Outbounds forward;
};

class InterShardHooks {
public:
    virtual ~InterShardHooks() = default;

    // relay_ctx, partition_result and account_migrate.
    virtual Outbounds handle_inter_shard(const MessageEnvelope& env, NodeContext& ctx) = 0;
    // Screens injected transactions; entries owned elsewhere are forwarded by the leader.
    virtual Arrivals screen_arrivals(std::vector<Transaction> txs, NodeContext& ctx) = 0;
};

}  // namespace shardemu
