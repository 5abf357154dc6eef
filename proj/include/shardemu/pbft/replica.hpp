#pragma once

#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "shardemu/pbft/hooks.hpp"

namespace shardemu {

class UnknownMessageType : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PbftParams {
    VirtualMs view_change_timeout_ms = 10'000;
    // Fault script: propose a block with a corrupted state root at this height.
    std::optional<Height> invalid_block_height;
};

enum class Phase : std::uint8_t { Idle, PrePrepared, Prepared, Committed };

// Per-shard PBFT replica. Quorum is 2f+1 with f = floor((n-1)/3); the leader of
// view v is node v mod n. Every entry point returns the traffic it produces.
class Replica {
public:
    using CommitObserver = std::function<void(const Block&, const NodeContext&)>;

    Replica(NodeContext& ctx, ConsensusHooks& hooks, InterShardHooks& inter, PbftParams params = {});

    std::uint32_t f() const { return (ctx_.nodes_per_shard - 1) / 3; }
    std::uint32_t quorum() const { return 2 * f() + 1; }
    ViewNumber view() const { return ctx_.view; }
    Height next_height() const { return ctx_.head.height + 1; }
    Phase phase() const;
    bool in_flight() const { return round_.block.has_value(); }
    std::uint64_t rejected_blocks() const { return rejected_; }
    std::uint64_t view_changes() const { return view_changes_; }

    void set_commit_observer(CommitObserver obs) { observer_ = std::move(obs); }

    Outbounds maybe_propose(VirtualMs now);
    // preprepare, prepare, commit, view_change, new_view.
    Outbounds on_consensus_msg(const MessageEnvelope& env, VirtualMs now);
    Outbounds on_viewchange_timeout(VirtualMs now);
    // inject_txs, relay_ctx, partition_result, account_migrate. Throws UnknownMessageType.
    Outbounds dispatch_inter_shard(const MessageEnvelope& env, VirtualMs now);

    // Re-evaluates whether the node is waiting on consensus progress.
    void note_activity(VirtualMs now);
    // nullopt when the view-change timer is idle.
    std::optional<VirtualMs> vc_deadline() const;

private:
    using VoteKey = std::tuple<Height, ViewNumber, Digest>;

    struct Round {
        std::optional<Block> block;
        Digest hash;
        std::optional<StateTree> post;
        bool prepared = false;
    };

    Outbounds on_preprepare(const MessageEnvelope& env);
    Outbounds on_vote(const MessageEnvelope& env, bool is_commit);
    Outbounds on_view_change(const MessageEnvelope& env);
    Outbounds on_new_view(const MessageEnvelope& env);

    Outbounds advance();
    Outbounds commit_round();
    Outbounds cast_vote(bool is_commit);
    Outbounds request_view(ViewNumber target);
    Outbounds install_view(ViewNumber v);
    Outbounds idle_hooks();
    Outbounds replay_future();

    bool view_changing() const { return vc_target_ > ctx_.view; }
    MessageEnvelope make(MsgType type, nlohmann::json body) const;
    static void append(Outbounds& out, Outbounds more);

    NodeContext& ctx_;
    ConsensusHooks& hooks_;
    InterShardHooks& inter_;
    PbftParams params_;
    CommitObserver observer_;

    Round round_;
    std::vector<Transaction> my_packed_;
    std::map<VoteKey, std::set<NodeIndex>> prepares_;
    std::map<VoteKey, std::set<NodeIndex>> commits_;
    std::vector<MessageEnvelope> future_;
    std::map<ViewNumber, std::set<NodeIndex>> vc_votes_;
    ViewNumber vc_target_ = 0;

    VirtualMs last_progress_ = 0;
    bool had_work_ = false;
    std::uint64_t rejected_ = 0;
    std::uint64_t view_changes_ = 0;
    bool replaying_ = false;
    bool replay_again_ = false;
};

}  // namespace shardemu
