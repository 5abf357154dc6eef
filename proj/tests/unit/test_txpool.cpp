#include <gtest/gtest.h>

#include <random>

#include "shardemu/txpool/tx_pool.hpp"
#include "support.hpp"

using namespace shardemu;
using shardemu::testing::addr;
using shardemu::testing::pay;

namespace {

std::vector<Digest> hashes(const std::vector<Transaction>& txs) {
    std::vector<Digest> out;
    for (const auto& t : txs) out.push_back(t.hash);
    return out;
}

std::vector<Transaction> batch(std::size_t n, std::uint64_t nonce0 = 0) {
    std::vector<Transaction> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(pay(addr(4), addr(8), 1, nonce0 + i));
    return out;
}

}  // namespace

TEST(TxPool, InjectPreservesOrder) {
    TxPool pool(0);
    auto txs = batch(3);
    EXPECT_EQ(pool.inject_batch(txs, 100), 3u);
    EXPECT_EQ(pool.size(), 3u);
    auto snap = pool.snapshot();
    EXPECT_EQ(hashes(snap), hashes(txs));
    for (const auto& t : snap) EXPECT_EQ(t.inject_time, 100);
}

TEST(TxPool, BatchesQueueFifo) {
    TxPool pool(0);
    auto ab = batch(2), c = batch(1, 10);
    pool.inject_batch(ab, 0);
    pool.inject_batch(c, 5);
    auto expect = hashes(ab);
    expect.push_back(c[0].hash);
    EXPECT_EQ(hashes(pool.snapshot()), expect);
}

TEST(TxPool, LockedPoolAcceptsInjection) {
    TxPool pool(0);
    pool.set_locked(true);
    EXPECT_EQ(pool.inject_batch(batch(4), 0), 4u);
    EXPECT_EQ(pool.size(), 4u);
}

TEST(TxPool, LockedPoolRefusesPacking) {
    TxPool pool(0);
    pool.inject_batch(batch(2), 0);
    pool.set_locked(true);
    try {
        pool.pack_block_txs(2);
        FAIL();
    } catch (const PoolError& e) {
        EXPECT_EQ(e.code(), PoolErrc::PoolLocked);
    }
}

TEST(TxPool, PackTakesHead) {
    TxPool pool(0);
    auto txs = batch(5);
    pool.inject_batch(txs, 0);
    auto got = pool.pack_block_txs(2);
    EXPECT_EQ(hashes(got), (std::vector<Digest>{txs[0].hash, txs[1].hash}));
    EXPECT_EQ(hashes(pool.snapshot()), (std::vector<Digest>{txs[2].hash, txs[3].hash, txs[4].hash}));
}

TEST(TxPool, PackEmpty) {
    TxPool pool(0);
    EXPECT_TRUE(pool.pack_block_txs(10).empty());
}

TEST(TxPool, PackFullBlock) {
    TxPool pool(0);
    pool.inject_batch(batch(2000), 0);
    EXPECT_EQ(pool.pack_block_txs(2000).size(), 2000u);
    EXPECT_TRUE(pool.empty());
}

TEST(TxPool, DuplicateHashQueuedOnce) {
    TxPool pool(0);
    auto txs = batch(1);
    pool.inject_batch(txs, 0);
    EXPECT_EQ(pool.inject_batch(txs, 1), 0u);
    EXPECT_EQ(pool.size(), 1u);
}

TEST(TxPool, FeePolicyOrdersByFeeThenArrival) {
    TxPool pool(0, PoolPolicy::FeePriority);
    auto txs = batch(4);
    txs[0].fee = 1;
    txs[1].fee = 5;
    txs[2].fee = 5;
    txs[3].fee = 3;
    pool.inject_batch(txs, 0);
    auto got = pool.pack_block_txs(3);
    EXPECT_EQ(hashes(got), (std::vector<Digest>{txs[1].hash, txs[2].hash, txs[3].hash}));
}

TEST(TxPool, AppendRelaysAtTail) {
    PartitionMap p(2);
    TxPool pool(0);
    auto raw = pay(addr(2), addr(4), 1);
    pool.inject_batch({raw}, 0);
    auto orig = pay(addr(1), addr(6), 3);
    auto relay = orig.rekind(TxKind::InterRelay, orig.hash);
    pool.append_relays({relay}, p);
    EXPECT_EQ(hashes(pool.snapshot()), (std::vector<Digest>{raw.hash, relay.hash}));
    pool.append_relays({}, p);
    EXPECT_EQ(pool.size(), 2u);
}

TEST(TxPool, AppendRelayForOtherShard) {
    PartitionMap p(2);
    TxPool pool(0);
    auto orig = pay(addr(2), addr(3), 3);
    try {
        pool.append_relays({orig.rekind(TxKind::InterRelay, orig.hash)}, p);
        FAIL();
    } catch (const PoolError& e) {
        EXPECT_EQ(e.code(), PoolErrc::WrongShard);
    }
    EXPECT_TRUE(pool.empty());
}

TEST(TxPool, ExtractDirty) {
    PartitionMap p(1);
    TxPool pool(0);
    auto a = addr(1), b = addr(2), c = addr(3), d = addr(4);
    auto ab = pay(a, b, 1), cd = pay(c, d, 1);
    pool.inject_batch({ab, cd}, 0);
    pool.set_locked(true);
    auto out = pool.extract_for_migration({a}, p);
    EXPECT_EQ(hashes(out), std::vector<Digest>{ab.hash});
    EXPECT_EQ(hashes(pool.snapshot()), std::vector<Digest>{cd.hash});
}

TEST(TxPool, ExtractNothingAndEverything) {
    PartitionMap p(1);
    TxPool pool(0);
    auto txs = batch(3);
    pool.inject_batch(txs, 0);
    pool.set_locked(true);
    EXPECT_TRUE(pool.extract_for_migration({}, p).empty());
    EXPECT_EQ(pool.size(), 3u);
    EXPECT_EQ(pool.extract_for_migration({addr(4)}, p).size(), 3u);
    EXPECT_TRUE(pool.empty());
}

TEST(TxPool, ExtractRequiresLock) {
    PartitionMap p(1);
    TxPool pool(0);
    try {
        pool.extract_for_migration({addr(1)}, p);
        FAIL();
    } catch (const PoolError& e) {
        EXPECT_EQ(e.code(), PoolErrc::NotLocked);
    }
}

TEST(TxPool, PackedPlusRemainingEqualsInjected) {
    std::mt19937_64 rng(9);
    TxPool pool(0);
    std::size_t injected = 0, packed = 0;
    for (int round = 0; round < 200; ++round) {
        auto n = rng() % 30;
        pool.inject_batch(batch(n, injected), round);
        injected += n;
        packed += pool.pack_block_txs(rng() % 40).size();
        ASSERT_EQ(packed + pool.size(), injected);
    }
}
