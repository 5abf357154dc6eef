#include "shardemu/harness/shard_node.hpp"

#include <iostream>

namespace shardemu {

ShardNode::ShardNode(const ShardNodeConfig& cfg)
    : cfg_(cfg),
      ctx_(cfg.shard, cfg.index, cfg.nodes_per_shard, cfg.n_shards, cfg.block_size, cfg.pool_policy),
      logic_(cfg.logic),
      replica_(ctx_, logic_, logic_, cfg.pbft) {
    ctx_.pmap.brokers = cfg.brokers;
}

void ShardNode::emit(Runtime& rt, Outbounds out) {
    for (auto& o : out) {
        try {
            rt.send(o.to, std::move(o.env));
        } catch (const TransportError& e) {
            std::cerr << "node " << ctx_.self().str() << ": send failed: " << e.what() << "\n";
        }
    }
}

void ShardNode::refresh_timers(Runtime& rt) {
    replica_.note_activity(rt.now());
    auto rearm = [&rt](TimerKind kind, std::optional<VirtualMs> want, std::optional<VirtualMs>& armed) {
        if (want == armed) return;
        if (want) {
            rt.schedule(kind, *want);
        } else {
            rt.cancel(kind);
        }
        armed = want;
    };
    rearm(ViewChangeTimer, replica_.vc_deadline(), vc_armed_);
    rearm(MigrationTimer, logic_.migration_deadline(), migration_armed_);
}

void ShardNode::on_start(Runtime& rt) {
    ctx_.now = rt.now();
    rt.schedule(BlockTimer, rt.now() + cfg_.block_interval_ms);
}

void ShardNode::on_message(Runtime& rt, const MessageEnvelope& env) {
    if (stopped_) return;
    ctx_.now = rt.now();
    switch (env.type) {
        case MsgType::Stop:
            stopped_ = true;
            rt.cancel(BlockTimer);
            rt.cancel(ViewChangeTimer);
            rt.cancel(MigrationTimer);
            return;
        case MsgType::PrePrepare:
        case MsgType::Prepare:
        case MsgType::Commit:
        case MsgType::ViewChange:
        case MsgType::NewView:
            emit(rt, replica_.on_consensus_msg(env, rt.now()));
            break;
        case MsgType::InjectTxs:
        case MsgType::RelayCtx:
        case MsgType::PartitionResult:
        case MsgType::AccountMigrate:
            emit(rt, replica_.dispatch_inter_shard(env, rt.now()));
            break;
        case MsgType::BlockInfo:
            std::cerr << "node " << ctx_.self().str() << ": unexpected block_info from " << env.sender.str() << "\n";
            return;
    }
    refresh_timers(rt);
}

void ShardNode::on_timer(Runtime& rt, TimerKind kind) {
    if (stopped_) return;
    ctx_.now = rt.now();
    switch (kind) {
        case BlockTimer: {
            emit(rt, replica_.maybe_propose(rt.now()));
            VirtualMs next = (rt.now() / cfg_.block_interval_ms + 1) * cfg_.block_interval_ms;
            rt.schedule(BlockTimer, next);
            break;
        }
        case ViewChangeTimer:
            vc_armed_.reset();
            emit(rt, replica_.on_viewchange_timeout(rt.now()));
            break;
        case MigrationTimer:
            migration_armed_.reset();
            logic_.check_migration_timeout(ctx_);
            break;
        default:
            break;
    }
    refresh_timers(rt);
}

}  // namespace shardemu
