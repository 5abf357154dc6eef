#include <gtest/gtest.h>

#include "shardemu/core/serialize.hpp"
#include "shardemu/supervisor/supervisor.hpp"
#include "support.hpp"

using namespace shardemu;
using shardemu::testing::addr;
using shardemu::testing::pay;

namespace {

BlockInfoEvent info(ShardId shard, Height h, VirtualMs at, const std::vector<Transaction>& txs) {
    BlockInfoEvent ev;
    ev.shard = shard;
    ev.height = h;
    ev.commit_time = at;
    for (const auto& t : txs) ev.txs.push_back({t.hash, t.kind, t.origin_hash, t.inject_time});
    return ev;
}

}  // namespace

TEST(Injection, BatchSizeFromRate) {
    InjectionSchedule s{false, 4000, 0, 250};
    double carry = 0;
    EXPECT_EQ(s.batch_size(0, carry), 1000u);
}

TEST(Injection, RampPerEpoch) {
    InjectionSchedule s{false, 4000, 4000, 250};
    EXPECT_DOUBLE_EQ(s.rate(2), 12000.0);
    double carry = 0;
    EXPECT_EQ(s.batch_size(2, carry), 3000u);
}

TEST(Injection, FractionalBatchesCarry) {
    InjectionSchedule s{false, 10, 0, 250};  // 2.5 per batch
    double carry = 0;
    std::size_t total = 0;
    for (int i = 0; i < 8; ++i) total += s.batch_size(0, carry);
    EXPECT_EQ(total, 20u);
}

TEST(Supervisor, BrokerSplitsCtxAcrossTwoShards) {
    SupervisorConfig cfg;
    cfg.n_shards = 4;
    cfg.mechanism = Mechanism::Broker;
    cfg.brokers = {addr(3, 9)};
    Supervisor sup(cfg, {pay(addr(1), addr(2), 5)});
    auto out = sup.inject_batch(10, 0);
    ASSERT_EQ(out.size(), 2u);
    std::set<ShardId> shards;
    for (const auto& o : out) {
        shards.insert(std::get<ShardBroadcast>(o.to).shard);
        auto txs = txs_from_json(o.env.body.at("txs"));
        ASSERT_EQ(txs.size(), 1u);
        EXPECT_TRUE(txs[0].kind == TxKind::BrokerPayerHalf || txs[0].kind == TxKind::BrokerPayeeHalf);
    }
    EXPECT_EQ(shards, (std::set<ShardId>{1, 2}));
    EXPECT_EQ(sup.ledger().counters().X, 1u);
    EXPECT_EQ(sup.ledger().injected_cross_shard(), 1u);
    EXPECT_TRUE(sup.dataset_drained());
}

TEST(Supervisor, RelayMarksOriginalCtx) {
    SupervisorConfig cfg;
    cfg.n_shards = 4;
    Supervisor sup(cfg, {pay(addr(1), addr(2), 5), pay(addr(1), addr(5), 5)});
    auto out = sup.inject_batch(2, 100);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(std::get<ShardBroadcast>(out[0].to).shard, 1u);
    auto txs = txs_from_json(out[0].env.body.at("txs"));
    ASSERT_EQ(txs.size(), 2u);
    EXPECT_EQ(txs[0].kind, TxKind::OriginalCTX);
    EXPECT_EQ(txs[1].kind, TxKind::Regular);
    EXPECT_EQ(txs[0].inject_time, 100);
}

TEST(Supervisor, CreditFromBlockInfo) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    Supervisor sup(cfg, {});
    std::vector<Transaction> reg, inter;
    for (std::uint64_t i = 0; i < 10; ++i) {
        reg.push_back(pay(addr(2), addr(4), 1, i));
        auto raw = pay(addr(1), addr(2), 1, i);
        inter.push_back(raw.rekind(TxKind::InterRelay, raw.hash));
    }
    sup.handle_block_info(info(0, 1, 1000, reg));
    EXPECT_DOUBLE_EQ(sup.ledger().blocks().back().credit(), 10.0);
    sup.handle_block_info(info(0, 2, 2000, inter));
    EXPECT_DOUBLE_EQ(sup.ledger().blocks().back().credit(), 5.0);
    sup.handle_block_info(info(0, 2, 2000, inter));
    EXPECT_EQ(sup.ledger().blocks().size(), 2u);
}

TEST(Supervisor, CommittedPaymentFeedsGraph) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    cfg.clpa = true;
    auto a = addr(2, 1), b = addr(4, 2);
    auto tx = pay(a, b, 1);
    Supervisor sup(cfg, {tx});
    sup.inject_batch(1, 0);
    EXPECT_TRUE(sup.graph().empty());
    sup.handle_block_info(info(0, 1, 1000, {tx}));
    EXPECT_EQ(sup.graph().edges().at({std::min(a, b), std::max(a, b)}), 1u);
}

TEST(Supervisor, CrossShardPaymentFoldedOnce) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    cfg.clpa = true;
    auto a = addr(1, 1), b = addr(2, 2);
    Supervisor sup(cfg, {pay(a, b, 1)});
    auto sent = txs_from_json(sup.inject_batch(1, 0).at(0).env.body.at("txs")).at(0);
    auto intra = sent.rekind(TxKind::IntraRelay, sent.hash);
    auto inter = sent.rekind(TxKind::InterRelay, sent.hash);
    sup.handle_block_info(info(1, 1, 1000, {intra}));
    sup.handle_block_info(info(0, 1, 2000, {inter}));
    EXPECT_EQ(sup.graph().edges().begin()->second, 1u);
}

TEST(Supervisor, StaticPartitionNeverReconfigures) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    Supervisor sup(cfg, {});
    EXPECT_TRUE(sup.epoch_reconfigure(80000).empty());
}

TEST(Supervisor, ReconfigurationBroadcastsPartitionResult) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    cfg.clpa = true;
    // a (shard 1) pays b (shard 0) often: one of them should move.
    auto a = addr(1, 1), b = addr(2, 2), c = addr(4, 3);
    std::vector<Transaction> ds;
    for (std::uint64_t i = 0; i < 5; ++i) ds.push_back(pay(a, b, 1, i));
    ds.push_back(pay(b, c, 1));
    Supervisor sup(cfg, ds);
    auto out = sup.inject_batch(ds.size(), 0);
    for (const auto& o : out) {
        auto txs = txs_from_json(o.env.body.at("txs"));
        std::vector<Transaction> committed;
        for (const auto& t : txs) committed.push_back(t.kind == TxKind::OriginalCTX ? t.rekind(TxKind::IntraRelay, t.hash) : t);
        sup.handle_block_info(info(std::get<ShardBroadcast>(o.to).shard, 1, 1000, committed));
    }
    auto rc = sup.epoch_reconfigure(80000);
    ASSERT_EQ(rc.size(), 1u);
    EXPECT_TRUE(std::holds_alternative<AllNodes>(rc[0].to));
    EXPECT_EQ(rc[0].env.type, MsgType::PartitionResult);
    auto u = partition_update_from_json(rc[0].env.body);
    EXPECT_EQ(u.version, 1u);
    EXPECT_FALSE(u.overrides.empty());
    EXPECT_TRUE(sup.reconfig_pending());
    EXPECT_TRUE(sup.graph().empty());
    EXPECT_TRUE(sup.epoch_reconfigure(160000).empty());  // one in flight at a time
    EXPECT_FALSE(sup.stop_condition_met());

    BlockInfoEvent mig;
    mig.kind = BlockKind::MigrationBlock;
    mig.height = 2;
    for (ShardId s = 0; s < 2; ++s) {
        mig.shard = s;
        sup.handle_block_info(mig);
    }
    EXPECT_FALSE(sup.reconfig_pending());
}

TEST(Supervisor, NothingDirtyOnlyBumpsVersion) {
    SupervisorConfig cfg;
    cfg.n_shards = 2;
    cfg.clpa = true;
    auto a = addr(2, 1), b = addr(4, 2);
    Supervisor sup(cfg, {pay(a, b, 1)});
    auto sent = txs_from_json(sup.inject_batch(1, 0).at(0).env.body.at("txs"));
    sup.handle_block_info(info(0, 1, 1000, sent));
    auto rc = sup.epoch_reconfigure(80000);
    ASSERT_EQ(rc.size(), 1u);
    EXPECT_TRUE(partition_update_from_json(rc[0].env.body).overrides.empty());
    EXPECT_FALSE(sup.reconfig_pending());
    EXPECT_EQ(sup.pmap().version, 1u);
    EXPECT_TRUE(sup.stop_condition_met());
}
