#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shardemu/core/serialize.hpp"
#include "shardemu/harness/shard_node.hpp"
#include "shardemu/mechanisms/clpa.hpp"
#include "shardemu/transport/sim_network.hpp"
#include "support.hpp"

using namespace shardemu;
using shardemu::testing::addr;
using shardemu::testing::pay;

TEST(Relay, SplitIntoDebitAndCredit) {
    PartitionMap p(4);
    auto a = addr(1), b = addr(2);
    auto ctx = pay(a, b, 7);
    auto [intra, inter] = relay_split(ctx, p);
    EXPECT_EQ(intra.kind, TxKind::IntraRelay);
    EXPECT_EQ(inter.kind, TxKind::InterRelay);
    EXPECT_EQ(intra.origin_hash, ctx.hash);
    EXPECT_EQ(inter.origin_hash, ctx.hash);
    EXPECT_EQ(intra.value, Amount(7));
    EXPECT_EQ(inter.value, Amount(7));
    EXPECT_EQ(owner_shard(intra, p), 1u);
    EXPECT_EQ(owner_shard(inter, p), 2u);

    StateTree s1, s2;
    s1.put({a, 10, 0});
    Block b1, b2;
    b1.txs = {intra};
    b2.txs = {inter};
    EXPECT_EQ(apply_block_to_state(s1, b1).get_or_default(a).balance, 3);
    EXPECT_EQ(apply_block_to_state(s2, b2).get_or_default(b).balance, 7);
}

TEST(Relay, ZeroValueAllowed) {
    PartitionMap p(4);
    auto [intra, inter] = relay_split(pay(addr(1), addr(2), 0), p);
    EXPECT_EQ(intra.value, Amount(0));
    EXPECT_EQ(inter.value, Amount(0));
}

TEST(Relay, RegularIsNotCrossShard) {
    PartitionMap p(4);
    try {
        relay_split(pay(addr(1), addr(5), 1), p);
        FAIL();
    } catch (const MechanismError& e) {
        EXPECT_EQ(e.code(), MechanismErrc::NotCrossShard);
    }
}

TEST(Relay, CommitBatchesPerDestination) {
    PartitionMap p(4);
    Block b;
    b.shard_id = 1;
    b.height = 6;
    for (std::uint64_t i = 0; i < 3; ++i) b.txs.push_back(make_intra_relay(pay(addr(1), addr(2), 1, i)));
    b.txs.push_back(pay(addr(1), addr(5), 1));
    auto out = relay_on_commit(b, p, Endpoint::node(1, 0));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(std::get<ShardBroadcast>(out[0].to).shard, 2u);
    const auto& env = out[0].env;
    EXPECT_EQ(env.type, MsgType::RelayCtx);
    EXPECT_EQ(env.body.at("height"), 6);
    EXPECT_EQ(env.body.at("source_shard"), 1);
    auto txs = txs_from_json(env.body.at("txs"));
    ASSERT_EQ(txs.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(txs[i].kind, TxKind::InterRelay);
        EXPECT_EQ(txs[i].origin_hash, b.txs[i].origin_hash);
    }
    auto batch = relay_validate(env, 2, 4);
    EXPECT_EQ(batch.source_shard, 1u);
    EXPECT_EQ(batch.height, 6u);
    EXPECT_EQ(batch.txs.size(), 3u);
}

TEST(Relay, RegularOnlyBlockSendsNothing) {
    PartitionMap p(4);
    Block b;
    b.shard_id = 1;
    b.txs = {pay(addr(1), addr(5), 1)};
    EXPECT_TRUE(relay_on_commit(b, p, Endpoint::node(1, 0)).empty());
}

TEST(Relay, ValidateRejectsForgedProofs) {
    PartitionMap p(4);
    Block b;
    b.shard_id = 1;
    b.height = 2;
    b.txs = {make_intra_relay(pay(addr(1), addr(2), 1))};
    auto env = relay_on_commit(b, p, Endpoint::node(1, 0)).at(0).env;
    auto expect_bad = [](const MessageEnvelope& e, ShardId local, std::uint32_t n) {
        try {
            relay_validate(e, local, n);
            ADD_FAILURE();
        } catch (const MechanismError& err) {
            EXPECT_EQ(err.code(), MechanismErrc::BadProof);
        }
    };
    auto ghost = env;
    ghost.body["source_shard"] = 9;
    ghost.sender = Endpoint::node(9, 0);
    expect_bad(ghost, 2, 4);
    auto impostor = env;
    impostor.sender = Endpoint::node(3, 0);
    expect_bad(impostor, 2, 4);
    auto genesis = env;
    genesis.body["height"] = 0;
    expect_bad(genesis, 2, 4);
}

TEST(Broker, CrossShardBecomesTwoLocalHalves) {
    PartitionMap p(4);
    auto a = addr(1), b = addr(2), br = addr(3, 7);
    p.brokers = {br};
    auto tx = pay(a, b, 4);
    auto out = broker_transform(tx, p);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].kind, TxKind::BrokerPayerHalf);
    EXPECT_EQ(out[0].payer, a);
    EXPECT_EQ(out[0].payee, br);
    EXPECT_EQ(out[1].kind, TxKind::BrokerPayeeHalf);
    EXPECT_EQ(out[1].payer, br);
    EXPECT_EQ(out[1].payee, b);
    for (const auto& h : out) EXPECT_EQ(h.origin_hash, tx.hash);
    EXPECT_TRUE(locally_executable(out[0], 1, p));
    EXPECT_TRUE(locally_executable(out[1], 2, p));
}

TEST(Broker, BrokerHopIsOneRegular) {
    PartitionMap p(4);
    auto br = addr(3, 7);
    p.brokers = {br};
    auto out = broker_transform(pay(br, addr(2), 1), p);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, TxKind::Regular);
    EXPECT_TRUE(locally_executable(out[0], 2, p));
}

TEST(Broker, SameShardUnchanged) {
    PartitionMap p(4);
    auto tx = pay(addr(1), addr(5), 1);
    auto out = broker_transform(tx, p);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].hash, tx.hash);
}

TEST(Broker, NoBrokers) {
    PartitionMap p(4);
    try {
        broker_transform(pay(addr(1), addr(2), 1), p);
        FAIL();
    } catch (const MechanismError& e) {
        EXPECT_EQ(e.code(), MechanismErrc::NoBrokers);
    }
}

TEST(Broker, LowestAddressBrokerChosen) {
    PartitionMap p(4);
    p.brokers = {addr(3, 9), addr(3, 4)};
    auto out = broker_transform(pay(addr(1), addr(2), 1), p);
    EXPECT_EQ(out[0].payee, addr(3, 4));
}

TEST(Broker, EveryPieceLocallyExecutable) {
    std::mt19937_64 rng(4);
    PartitionMap p(8);
    for (int i = 0; i < 5; ++i) p.brokers.insert(addr(rng(), 200));
    std::vector<Address> pool;
    for (int i = 0; i < 50; ++i) pool.push_back(addr(rng()));
    pool.insert(pool.end(), p.brokers.begin(), p.brokers.end());
    for (int i = 0; i < 2000; ++i) {
        auto x = pool[rng() % pool.size()], y = pool[rng() % pool.size()];
        if (x == y) continue;
        for (const auto& piece : broker_transform(pay(x, y, 1, i), p)) {
            ASSERT_TRUE(locally_executable(piece, owner_shard(piece, p), p));
        }
    }
}

namespace {

// Score of a labelling written out directly from the definition:
// sum_v W(v, label v) * (1 - beta * L_label / mean L).
double oracle_objective(const AccountGraph& g, const Labels& labels, std::uint32_t n, double beta) {
    std::vector<double> load(n, 0);
    for (const auto& [v, w] : g.vertices()) load[labels.at(v)] += static_cast<double>(w);
    double mean = 0;
    for (double l : load) mean += l;
    mean /= n;
    double total = 0;
    for (const auto& [v, _] : g.vertices()) {
        double w_same = 0;
        for (const auto& [e, w] : g.edges()) {
            const Address* other = e.first == v ? &e.second : e.second == v ? &e.first : nullptr;
            if (other && labels.at(*other) == labels.at(v)) w_same += static_cast<double>(w);
        }
        total += w_same * (mean > 0 ? 1 - beta * load[labels.at(v)] / mean : 1);
    }
    return total;
}

std::vector<Labels> all_labellings(const AccountGraph& g, std::uint32_t n) {
    std::vector<Address> vs;
    for (const auto& [v, _] : g.vertices()) vs.push_back(v);
    std::vector<Labels> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < vs.size(); ++i) total *= n;
    for (std::size_t code = 0; code < total; ++code) {
        Labels l;
        std::size_t c = code;
        for (const auto& v : vs) {
            l[v] = static_cast<ShardId>(c % n);
            c /= n;
        }
        out.push_back(std::move(l));
    }
    return out;
}

bool same_partition(const Labels& a, const Labels& b) {
    std::map<ShardId, ShardId> fwd, back;
    for (const auto& [v, k] : a) {
        auto j = b.at(v);
        if (fwd.contains(k) && fwd[k] != j) return false;
        if (back.contains(j) && back[j] != k) return false;
        fwd[k] = j;
        back[j] = k;
    }
    return true;
}

}  // namespace

TEST(Clpa, FourVertexExampleMatchesBruteForce) {
    // a, b, c, d in ascending address order; a and d start in shard 0.
    auto a = addr(0, 1), b = addr(1, 2), c = addr(3, 3), d = addr(2, 4);
    AccountGraph g;
    for (auto v : {a, b, c, d}) g.add_vertex(v);
    g.add_edge(a, b, 3);
    g.add_edge(c, d, 3);
    g.add_edge(a, c, 1);
    PartitionMap p(2);
    auto r = clpa_partition(g, p, {});

    // Minimum cut over all 16 assignments with shard sizes differing by at most one.
    std::uint64_t best_cut = UINT64_MAX;
    Labels best;
    for (const auto& l : all_labellings(g, 2)) {
        int zeros = 0;
        for (const auto& [_, k] : l) zeros += k == 0 ? 1 : 0;
        if (std::abs(zeros - 2) > 1) continue;
        auto cut = cut_weight(g, l);
        if (cut < best_cut) {
            best_cut = cut;
            best = l;
        }
    }
    EXPECT_EQ(best_cut, 1u);
    EXPECT_EQ(cut_weight(g, r.labels), 1u);
    EXPECT_TRUE(same_partition(r.labels, best));
    EXPECT_EQ(r.labels.at(a), r.labels.at(b));
    EXPECT_NE(r.labels.at(a), r.labels.at(c));
    EXPECT_EQ(r.pmap.version, 1u);
}

TEST(Clpa, FixedPointLeavesNothingDirty) {
    auto a = addr(0, 1), b = addr(2, 2), c = addr(1, 3), d = addr(3, 4);
    AccountGraph g;
    for (auto v : {a, b, c, d}) g.add_vertex(v);
    g.add_edge(a, b, 3);
    g.add_edge(c, d, 3);
    g.add_edge(a, c, 1);
    auto r = clpa_partition(g, PartitionMap(2), {});
    EXPECT_TRUE(r.dirty.empty());
    EXPECT_EQ(r.rounds, 1);
    EXPECT_TRUE(r.pmap.overrides.empty());
}

TEST(Clpa, IsolatedVertexStays) {
    AccountGraph g;
    auto v = addr(1);
    g.add_vertex(v);
    auto r = clpa_partition(g, PartitionMap(2), {});
    EXPECT_EQ(r.labels.at(v), 1u);
    EXPECT_TRUE(r.dirty.empty());
}

TEST(Clpa, BrokersAreNotVertices) {
    AccountGraph g;
    auto br = addr(9);
    g.add_tx(addr(1), br, {br});
    g.add_tx(addr(1), addr(2), {br});
    EXPECT_FALSE(g.vertices().contains(br));
    EXPECT_EQ(g.vertices().at(addr(1)), 2u);
    EXPECT_EQ(g.edge_count(), 1u);
    g.add_edge(addr(1), addr(1));
    EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Clpa, ObjectiveMatchesOracleAndSweepsNeverLoseScore) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        AccountGraph g;
        std::vector<Address> vs;
        int nv = 3 + static_cast<int>(rng() % 10);
        for (int i = 0; i < nv; ++i) vs.push_back(addr(rng(), static_cast<std::uint8_t>(i)));
        for (int e = 0; e < nv * 2; ++e) g.add_tx(vs[rng() % vs.size()], vs[rng() % vs.size()]);
        std::uint32_t n = 2 + static_cast<std::uint32_t>(rng() % 3);
        PartitionMap p(n);
        auto r = clpa_partition(g, p, {});
        ASSERT_EQ(r.labels.size(), g.vertex_count());
        EXPECT_NEAR(clpa_objective(g, r.labels, n, 0.5), oracle_objective(g, r.labels, n, 0.5), 1e-9);
        for (auto [before, after] : r.sweep_objectives) EXPECT_GE(after, before - 1e-9);
        for (const auto& [v, k] : r.labels) {
            EXPECT_EQ(r.dirty.contains(v), k != address_to_shard(v, p));
            EXPECT_EQ(address_to_shard(v, r.pmap), k);
        }
    }
}

namespace {

struct Sink : Actor {
    std::vector<MessageEnvelope> infos;
    void on_start(Runtime&) override {}
    void on_message(Runtime&, const MessageEnvelope& env) override {
        if (env.type == MsgType::BlockInfo) infos.push_back(env);
    }
    void on_timer(Runtime&, TimerKind) override {}
};

struct TwoShards {
    SimNetwork net{LatencyModel::fixed(5), 1};
    std::vector<std::unique_ptr<ShardNode>> nodes;
    Sink sup;

    TwoShards() {
        for (ShardId s = 0; s < 2; ++s) {
            for (NodeIndex i = 0; i < 4; ++i) {
                ShardNodeConfig cfg;
                cfg.shard = s;
                cfg.index = i;
                cfg.n_shards = 2;
                cfg.block_size = 10;
                nodes.push_back(std::make_unique<ShardNode>(cfg));
                net.add_actor(Endpoint::node(s, i), nodes.back().get());
            }
        }
        net.add_actor(Endpoint::the_supervisor(), &sup);
        net.start();
    }
    const NodeContext& ctx(ShardId s, NodeIndex i) const { return nodes[s * 4 + i]->context(); }
    void send(MsgType t, const Destination& to, nlohmann::json body) {
        net.transmit(Endpoint::the_supervisor(), to, {t, Endpoint::the_supervisor(), std::move(body)});
    }
    void inject(ShardId s, std::vector<Transaction> txs) { send(MsgType::InjectTxs, ShardBroadcast{s}, {{"txs", txs_to_json(txs)}}); }
};

}  // namespace

TEST(Migration, DirtyAccountMovesWithItsQueuedTx) {
    TwoShards t;
    auto x = addr(1, 1), c = addr(3, 2), d = addr(5, 3);  // all in shard 1
    t.inject(1, {pay(x, c, 9)});
    t.net.run(1500);
    ASSERT_EQ(t.ctx(1, 0).state.get_or_default(c).balance, 9);

    PartitionUpdate u{1, {{c, 0}}, {}};
    t.send(MsgType::PartitionResult, AllNodes{}, partition_update_to_json(u));
    t.inject(1, {pay(c, d, 4)});
    t.net.run(20000);

    for (NodeIndex i = 0; i < 4; ++i) {
        EXPECT_EQ(t.ctx(0, i).pmap.version, 1u);
        EXPECT_EQ(t.ctx(1, i).pmap.version, 1u);
        EXPECT_TRUE(t.ctx(0, i).state.contains(c));
        EXPECT_FALSE(t.ctx(1, i).state.contains(c));
        EXPECT_EQ(t.ctx(0, i).state.get_or_default(c).balance, 5);
        EXPECT_EQ(t.ctx(1, i).state.get_or_default(d).balance, 4);
        EXPECT_TRUE(t.ctx(0, i).pool.empty());
        EXPECT_TRUE(t.ctx(1, i).pool.empty());
        EXPECT_FALSE(t.ctx(0, i).pool.locked());
    }
    bool saw_migration_block = false;
    for (const auto& env : t.sup.infos) {
        if (env.body.at("block_kind") == "migration" && env.body.at("shard") == 0) saw_migration_block = true;
    }
    EXPECT_TRUE(saw_migration_block);
}

TEST(Migration, EmptyDirtySetOnlyBumpsVersion) {
    TwoShards t;
    t.send(MsgType::PartitionResult, AllNodes{}, partition_update_to_json(PartitionUpdate{1, {}, {}}));
    t.net.run(5000);
    for (ShardId s = 0; s < 2; ++s) {
        EXPECT_EQ(t.ctx(s, 0).pmap.version, 1u);
        EXPECT_EQ(t.ctx(s, 0).head.height, 0u);
        EXPECT_FALSE(t.ctx(s, 0).pool.locked());
    }
    for (const auto& env : t.sup.infos) EXPECT_NE(env.body.at("block_kind"), "migration");
}

TEST(Relay, EachCrossShardPaymentCreditedOnce) {
    TwoShards t;
    std::vector<Transaction> txs;
    for (std::uint64_t i = 0; i < 30; ++i) {
        txs.push_back(pay(addr(2 * i + 1), addr(2 * i + 2), 1, i).rekind(TxKind::OriginalCTX, std::nullopt));
    }
    t.inject(1, txs);
    t.net.run(30000);
    std::size_t intra = 0, inter = 0;
    for (const auto& env : t.sup.infos) {
        for (const auto& tx : env.body.at("txs")) {
            auto k = tx.at("kind").get<std::string>();
            intra += k == "intra_relay" ? 1 : 0;
            inter += k == "inter_relay" ? 1 : 0;
        }
    }
    EXPECT_EQ(intra, 30u);
    EXPECT_EQ(inter, 30u);
    Balance credited = 0;
    for (const auto& s : t.ctx(0, 2).state.entries()) credited += s.balance;
    EXPECT_EQ(credited, 30);
}
