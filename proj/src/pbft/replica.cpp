#include "shardemu/pbft/replica.hpp"

#include <iostream>

#include "shardemu/core/serialize.hpp"

namespace shardemu {

Replica::Replica(NodeContext& ctx, ConsensusHooks& hooks, InterShardHooks& inter, PbftParams params)
    : ctx_(ctx), hooks_(hooks), inter_(inter), params_(params) {}

Phase Replica::phase() const {
    if (!round_.block) return Phase::Idle;
    return round_.prepared ? Phase::Prepared : Phase::PrePrepared;
}

void Replica::append(Outbounds& out, Outbounds more) {
    for (auto& o : more) out.push_back(std::move(o));
}

MessageEnvelope Replica::make(MsgType type, nlohmann::json body) const {
    return MessageEnvelope{type, ctx_.self(), std::move(body)};
}

Outbounds Replica::maybe_propose(VirtualMs now) {
    ctx_.now = now;
    if (!ctx_.is_leader() || round_.block) return {};
    auto proposal = hooks_.op_mining(ctx_);
    if (!proposal) return {};

    Block& block = proposal->block;
    if (params_.invalid_block_height && *params_.invalid_block_height == block.height) {
        block.state_root.bytes[0] ^= 0xff;
    }
    round_.hash = block.hash();
    round_.post = std::move(proposal->post_state);
    round_.block = std::move(block);
    my_packed_ = std::move(proposal->packed);

    Outbounds out;
    out.push_back({ShardBroadcast{ctx_.shard}, make(MsgType::PrePrepare, {{"block", to_json(*round_.block)}})});
    append(out, cast_vote(false));
    append(out, advance());
    return out;
}

Outbounds Replica::on_consensus_msg(const MessageEnvelope& env, VirtualMs now) {
    ctx_.now = now;
    if (env.sender.supervisor || env.sender.shard != ctx_.shard) return {};
    try {
        switch (env.type) {
            case MsgType::PrePrepare: return on_preprepare(env);
            case MsgType::Prepare: return on_vote(env, false);
            case MsgType::Commit: return on_vote(env, true);
            case MsgType::ViewChange: return on_view_change(env);
            case MsgType::NewView: return on_new_view(env);
            default: break;
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "node " << ctx_.self().str() << ": malformed " << to_string(env.type) << ": " << e.what() << "\n";
        return {};
    } catch (const ParseError& e) {
        std::cerr << "node " << ctx_.self().str() << ": malformed " << to_string(env.type) << ": " << e.what() << "\n";
        return {};
    }
    throw UnknownMessageType("not a consensus message: " + std::string(to_string(env.type)));
}

Outbounds Replica::on_preprepare(const MessageEnvelope& env) {
    Block block = block_from_json(env.body.at("block"));
    if (block.shard_id != ctx_.shard || block.height < next_height()) return {};
    // Held back: a later height, or a proposer that is not (yet) our leader.
    if (block.height > next_height() || env.sender.index != ctx_.leader() || hooks_.defer_block(block, ctx_)) {
        future_.push_back(env);
        return {};
    }
    if (round_.block) return {};

    StateTree post;
    auto verdict = hooks_.op_verification(block, ctx_, &post);
    if (!verdict.ok()) {
        ++rejected_;
        std::cerr << "node " << ctx_.self().str() << ": rejecting block " << block.height << " from "
                  << env.sender.str() << ": " << to_string(*verdict.reject) << "\n";
        return {};
    }
    round_.hash = block.hash();
    round_.block = std::move(block);
    round_.post = std::move(post);

    Outbounds out = cast_vote(false);
    append(out, advance());
    return out;
}

Outbounds Replica::on_vote(const MessageEnvelope& env, bool is_commit) {
    Height h = env.body.at("height").get<Height>();
    ViewNumber v = env.body.at("view").get<ViewNumber>();
    Digest hash = Digest::from_hex(env.body.at("block_hash").get<std::string>());
    if (h < next_height() || v < ctx_.view) return {};
    if (h > next_height() || v > ctx_.view) {
        future_.push_back(env);
        return {};
    }
    (is_commit ? commits_ : prepares_)[{h, v, hash}].insert(env.sender.index);
    return advance();
}

Outbounds Replica::cast_vote(bool is_commit) {
    VoteKey key{next_height(), ctx_.view, round_.hash};
    (is_commit ? commits_ : prepares_)[key].insert(ctx_.index);
    nlohmann::json body{{"height", next_height()}, {"view", ctx_.view}, {"block_hash", round_.hash.hex()}};
    Outbounds out;
    out.push_back({ShardBroadcast{ctx_.shard}, make(is_commit ? MsgType::Commit : MsgType::Prepare, std::move(body))});
    return out;
}

Outbounds Replica::advance() {
    Outbounds out;
    if (!round_.block) return out;
    VoteKey key{next_height(), ctx_.view, round_.hash};
    if (!round_.prepared) {
        auto it = prepares_.find(key);
        if (it == prepares_.end() || it->second.size() < quorum()) return out;
        round_.prepared = true;
        append(out, cast_vote(true));
    }
    auto it = commits_.find(key);
    if (it != commits_.end() && it->second.size() >= quorum()) append(out, commit_round());
    return out;
}

Outbounds Replica::commit_round() {
    Block block = std::move(*round_.block);
    StateTree post = std::move(*round_.post);
    round_ = Round{};
    my_packed_.clear();
    last_progress_ = ctx_.now;
    if (vc_target_ > ctx_.view) vc_target_ = ctx_.view;

    Outbounds out = hooks_.op_confirmation(block, std::move(post), ctx_);
    ctx_.head = std::move(block);
    if (observer_) observer_(ctx_.head, ctx_);

    const Height h = ctx_.head.height;
    auto prune = [h](auto& votes) {
        for (auto it = votes.begin(); it != votes.end();) {
            it = std::get<0>(it->first) <= h ? votes.erase(it) : std::next(it);
        }
    };
    prune(prepares_);
    prune(commits_);

    append(out, idle_hooks());
    append(out, replay_future());
    return out;
}

Outbounds Replica::idle_hooks() {
    if (round_.block) return {};
    return hooks_.on_round_boundary(ctx_);
}

Outbounds Replica::replay_future() {
    if (replaying_) {
        replay_again_ = true;
        return {};
    }
    replaying_ = true;
    Outbounds out;
    do {
        replay_again_ = false;
        auto pending = std::move(future_);
        future_.clear();
        for (const auto& env : pending) append(out, on_consensus_msg(env, ctx_.now));
    } while (replay_again_);
    replaying_ = false;
    return out;
}

Outbounds Replica::on_viewchange_timeout(VirtualMs now) {
    ctx_.now = now;
    auto deadline = vc_deadline();
    if (!deadline || now < *deadline) return {};
    last_progress_ = now;
    return request_view(std::max(vc_target_, ctx_.view) + 1);
}

Outbounds Replica::request_view(ViewNumber target) {
    vc_target_ = target;
    vc_votes_[target].insert(ctx_.index);
    Outbounds out;
    out.push_back({ShardBroadcast{ctx_.shard},
                   make(MsgType::ViewChange, {{"new_view", target}, {"height", next_height()}})});
    if (vc_votes_[target].size() >= quorum() && ctx_.nodes_per_shard > 0 &&
        target % ctx_.nodes_per_shard == ctx_.index) {
        out.push_back({ShardBroadcast{ctx_.shard},
                       make(MsgType::NewView, {{"new_view", target}, {"height", next_height()}})});
        append(out, install_view(target));
    }
    return out;
}

Outbounds Replica::on_view_change(const MessageEnvelope& env) {
    ViewNumber target = env.body.at("new_view").get<ViewNumber>();
    if (target <= ctx_.view) return {};
    auto& voters = vc_votes_[target];
    voters.insert(env.sender.index);

    Outbounds out;
    if (voters.size() >= f() + 1 && vc_target_ < target) {
        return request_view(target);
    }
    if (voters.size() >= quorum() && target % ctx_.nodes_per_shard == ctx_.index) {
        out.push_back({ShardBroadcast{ctx_.shard},
                       make(MsgType::NewView, {{"new_view", target}, {"height", next_height()}})});
        append(out, install_view(target));
    }
    return out;
}

Outbounds Replica::on_new_view(const MessageEnvelope& env) {
    ViewNumber target = env.body.at("new_view").get<ViewNumber>();
    if (target <= ctx_.view || target % ctx_.nodes_per_shard != env.sender.index) return {};
    return install_view(target);
}

Outbounds Replica::install_view(ViewNumber v) {
    if (round_.block && !my_packed_.empty()) hooks_.on_abandon(ctx_, std::move(my_packed_));
    my_packed_.clear();
    round_ = Round{};
    ctx_.view = v;
    vc_target_ = std::max(vc_target_, v);
    last_progress_ = ctx_.now;
    ++view_changes_;
    for (auto it = vc_votes_.begin(); it != vc_votes_.end();) {
        it = it->first <= v ? vc_votes_.erase(it) : std::next(it);
    }
    auto prune = [v](auto& votes) {
        for (auto it = votes.begin(); it != votes.end();) {
            it = std::get<1>(it->first) < v ? votes.erase(it) : std::next(it);
        }
    };
    prune(prepares_);
    prune(commits_);

    Outbounds out = idle_hooks();
    append(out, replay_future());
    if (ctx_.is_leader()) append(out, maybe_propose(ctx_.now));
    return out;
}

Outbounds Replica::dispatch_inter_shard(const MessageEnvelope& env, VirtualMs now) {
    ctx_.now = now;
    Outbounds out;
    switch (env.type) {
        case MsgType::InjectTxs: {
            std::vector<Transaction> txs;
            try {
                txs = txs_from_json(env.body.at("txs"));
            } catch (const std::exception& e) {
                std::cerr << "node " << ctx_.self().str() << ": malformed inject_txs: " << e.what() << "\n";
                return {};
            }
            auto arrivals = inter_.screen_arrivals(std::move(txs), ctx_);
            // Supervisor batches are stamped on arrival; forwarded ones keep their stamp.
            if (env.sender.supervisor) {
                ctx_.pool.inject_batch(std::move(arrivals.keep), now);
            } else {
                ctx_.pool.requeue(std::move(arrivals.keep));
            }
            out = std::move(arrivals.forward);
            break;
        }
        case MsgType::RelayCtx:
        case MsgType::PartitionResult:
        case MsgType::AccountMigrate:
            out = inter_.handle_inter_shard(env, ctx_);
            break;
        default:
            throw UnknownMessageType("not an inter-shard message: " + std::string(to_string(env.type)));
    }
    append(out, idle_hooks());
    append(out, replay_future());
    return out;
}

void Replica::note_activity(VirtualMs now) {
    bool work = hooks_.has_work(ctx_) || round_.block.has_value();
    if (work && !had_work_) last_progress_ = now;
    had_work_ = work;
}

std::optional<VirtualMs> Replica::vc_deadline() const {
    if (!had_work_) return std::nullopt;
    return last_progress_ + params_.view_change_timeout_ms;
}

}  // namespace shardemu
