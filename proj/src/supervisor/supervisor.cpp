#include "shardemu/supervisor/supervisor.hpp"

#include <cmath>
#include <iostream>
#include <map>

#include "shardemu/core/serialize.hpp"

namespace shardemu {

std::size_t InjectionSchedule::batch_size(std::int64_t epoch, double& carry) const {
    double want = rate(epoch) * static_cast<double>(batch_interval_ms) / 1000.0 + carry;
    double whole = std::floor(want + 1e-9);
    carry = want - whole;
    return whole > 0 ? static_cast<std::size_t>(whole) : 0;
}

Supervisor::Supervisor(SupervisorConfig cfg, std::vector<Transaction> dataset)
    : cfg_(std::move(cfg)),
      dataset_(std::move(dataset)),
      pmap_(cfg_.n_shards),
      ledger_(cfg_.n_shards),
      pool_estimate_(cfg_.n_shards, 0) {
    pmap_.brokers = cfg_.brokers;
}

void Supervisor::on_start(Runtime& rt) {
    if (cfg_.injection.prefill) {
        rt.send_all(inject_batch(dataset_.size(), rt.now()));
    } else {
        rt.schedule(InjectTimer, rt.now());
    }
    if (cfg_.clpa) rt.schedule(EpochTimer, (rt.now() / cfg_.epoch_ms + 1) * cfg_.epoch_ms);
    if (cfg_.wall_ms) rt.schedule(WallTimer, *cfg_.wall_ms);
    if (cfg_.stop_on_drain && stop_condition_met()) finish(rt, StopReason::Drained);
}

Outbounds Supervisor::inject_batch(std::size_t count, VirtualMs now) {
    std::map<ShardId, std::vector<Transaction>> by_shard;
    std::uint64_t originals = 0, cross = 0;
    for (; count > 0 && cursor_ < dataset_.size(); --count, ++cursor_) {
        Transaction tx = dataset_[cursor_];
        tx.inject_time = now;
        TxClass cls = classify_transaction(tx, pmap_);
        ++originals;
        if (cls == TxClass::CrossShard) ++cross;
        std::vector<Transaction> pieces;
        if (cfg_.mechanism == Mechanism::Broker) {
            pieces = broker_transform(tx, pmap_);
        } else if (cls == TxClass::CrossShard) {
            pieces.push_back(tx.rekind(TxKind::OriginalCTX, std::nullopt));
        } else {
            pieces.push_back(tx.kind == TxKind::Regular ? tx : tx.rekind(TxKind::Regular, std::nullopt));
        }
        for (auto& p : pieces) {
            parties_.emplace(p.origin_hash ? *p.origin_hash : p.hash, std::make_pair(tx.payer, tx.payee));
            by_shard[owner_shard(p, pmap_)].push_back(std::move(p));
        }
    }
    ledger_.note_injected(originals, cross);
    Outbounds out;
    for (auto& [shard, txs] : by_shard) {
        pool_estimate_[shard] += txs.size();
        ledger_.note_pool_size(now, shard, pool_estimate_[shard]);
        out.push_back({ShardBroadcast{shard},
                       MessageEnvelope{MsgType::InjectTxs, Endpoint::the_supervisor(),
                                       nlohmann::json{{"txs", txs_to_json(txs)}}}});
    }
    return out;
}

void Supervisor::handle_block_info(const BlockInfoEvent& ev) {
    if (!ledger_.record_block(ev)) return;
    if (ev.shard < pool_estimate_.size()) pool_estimate_[ev.shard] = ev.pool_size;
    if (ev.kind == BlockKind::MigrationBlock) {
        if (pending_version_) {
            migrated_shards_.insert(ev.shard);
            if (migrated_shards_.size() == cfg_.n_shards) {
                pending_version_.reset();
                migrated_shards_.clear();
            }
        }
        return;
    }
    if (!cfg_.clpa) return;
    for (const auto& t : ev.txs) {
        // A credit half repeats the payment its debit half already contributed.
        if (t.kind == TxKind::InterRelay) continue;
        auto it = parties_.find(t.origin_hash ? *t.origin_hash : t.hash);
        if (it == parties_.end()) continue;
        if (t.kind == TxKind::BrokerPayeeHalf) continue;
        graph_.add_tx(it->second.first, it->second.second, pmap_.brokers);
    }
}

Outbounds Supervisor::epoch_reconfigure(VirtualMs now) {
    if (!cfg_.clpa || pending_version_) return {};
    ClpaResult res = clpa_partition(graph_, pmap_, cfg_.clpa_params);
    PartitionUpdate update;
    update.version = res.pmap.version;
    update.overrides = res.dirty;
    update.brokers = pmap_.brokers;
    pmap_ = res.pmap;
    pmap_.brokers = update.brokers;
    graph_.clear();
    ++reconfigurations_;
    if (!res.dirty.empty()) {
        pending_version_ = update.version;
        migrated_shards_.clear();
    }
    std::cerr << "supervisor: epoch " << current_epoch(now) << " reconfiguration v" << update.version << ", "
              << res.dirty.size() << " dirty accounts, " << res.rounds << " sweeps\n";
    Outbounds out;
    out.push_back({AllNodes{}, MessageEnvelope{MsgType::PartitionResult, Endpoint::the_supervisor(),
                                               partition_update_to_json(update)}});
    return out;
}

bool Supervisor::stop_condition_met() const {
    return dataset_drained() && ledger_.confirmed_originals() >= ledger_.counters().X && !pending_version_;
}

void Supervisor::finish(Runtime& rt, StopReason why) {
    if (finished()) return;
    stop_ = why;
    finished_at_ = rt.now();
    done_.store(true);
    rt.cancel(InjectTimer);
    rt.cancel(EpochTimer);
    rt.cancel(WallTimer);
    rt.send(AllNodes{}, MessageEnvelope{MsgType::Stop, Endpoint::the_supervisor(), nlohmann::json::object()});
}

void Supervisor::on_message(Runtime& rt, const MessageEnvelope& env) {
    if (finished()) return;
    if (env.type != MsgType::BlockInfo) {
        std::cerr << "supervisor: ignoring " << to_string(env.type) << " from " << env.sender.str() << "\n";
        return;
    }
    try {
        handle_block_info(block_info_from_json(env.body));
    } catch (const std::exception& e) {
        std::cerr << "supervisor: malformed block_info from " << env.sender.str() << ": " << e.what() << "\n";
        return;
    }
    if (cfg_.stop_on_drain && stop_condition_met()) finish(rt, StopReason::Drained);
}

void Supervisor::on_timer(Runtime& rt, TimerKind kind) {
    if (finished()) return;
    switch (kind) {
        case InjectTimer: {
            auto n = cfg_.injection.batch_size(current_epoch(rt.now()), carry_);
            rt.send_all(inject_batch(n, rt.now()));
            if (!dataset_drained()) rt.schedule(InjectTimer, rt.now() + cfg_.injection.batch_interval_ms);
            break;
        }
        case EpochTimer:
            rt.send_all(epoch_reconfigure(rt.now()));
            rt.schedule(EpochTimer, rt.now() + cfg_.epoch_ms);
            break;
        case WallTimer:
            finish(rt, StopReason::WallClock);
            return;
        default:
            break;
    }
    if (cfg_.stop_on_drain && stop_condition_met()) finish(rt, StopReason::Drained);
}

}  // namespace shardemu
