#include <gtest/gtest.h>

#include "shardemu/core/serialize.hpp"
#include "shardemu/transport/frame.hpp"
#include "shardemu/transport/sim_network.hpp"
#include "support.hpp"

using namespace shardemu;
using shardemu::testing::addr;
using shardemu::testing::pay;

namespace {

struct Recorder : Actor {
    std::vector<std::pair<VirtualMs, MessageEnvelope>> got;
    std::vector<std::pair<VirtualMs, TimerKind>> timers;
    void on_start(Runtime&) override {}
    void on_message(Runtime& rt, const MessageEnvelope& env) override { got.emplace_back(rt.now(), env); }
    void on_timer(Runtime& rt, TimerKind k) override { timers.emplace_back(rt.now(), k); }
};

MessageEnvelope msg(MsgType t, int tag = 0) {
    MessageEnvelope e;
    e.type = t;
    e.body = {{"tag", tag}};
    return e;
}

std::uint32_t be32(const std::vector<std::uint8_t>& f) {
    return (std::uint32_t{f[0]} << 24) | (std::uint32_t{f[1]} << 16) | (std::uint32_t{f[2]} << 8) | f[3];
}

}  // namespace

TEST(Frame, LengthPrefixMatchesPayload) {
    MessageEnvelope stop;
    stop.type = MsgType::Stop;
    stop.sender = Endpoint::the_supervisor();
    auto f = encode_frame(stop);
    ASSERT_GE(f.size(), 4u);
    EXPECT_EQ(be32(f), f.size() - 4);
    EXPECT_EQ(decode_frame(f), stop);
}

TEST(Frame, LargeBlockRoundTrip) {
    Block b;
    b.shard_id = 1;
    b.height = 9;
    for (std::uint64_t i = 0; i < 2000; ++i) b.txs.push_back(pay(addr(i), addr(i + 1), i, i));
    MessageEnvelope e;
    e.type = MsgType::PrePrepare;
    e.sender = Endpoint::node(1, 0);
    e.body = {{"block", to_json(b)}};
    auto back = decode_frame(encode_frame(e));
    EXPECT_EQ(back, e);
    EXPECT_EQ(block_from_json(back.body.at("block")).hash(), b.hash());
}

TEST(Frame, Truncated) {
    auto f = encode_frame(msg(MsgType::Stop));
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, f.size() - 1}) {
        try {
            decode_frame(std::span(f.data(), cut));
            FAIL() << cut;
        } catch (const FrameError& e) {
            EXPECT_EQ(e.code(), FrameErrc::FrameTooShort);
        }
    }
}

TEST(Frame, BadJsonAndUnknownType) {
    std::string junk = "{nope";
    std::vector<std::uint8_t> f = {0, 0, 0, static_cast<std::uint8_t>(junk.size())};
    f.insert(f.end(), junk.begin(), junk.end());
    try {
        decode_frame(f);
        FAIL();
    } catch (const FrameError& e) {
        EXPECT_EQ(e.code(), FrameErrc::BadJson);
    }
    std::string unk = R"({"type":"gossip","sender":"supervisor","body":{}})";
    std::vector<std::uint8_t> g = {0, 0, 0, static_cast<std::uint8_t>(unk.size())};
    g.insert(g.end(), unk.begin(), unk.end());
    try {
        decode_frame(g);
        FAIL();
    } catch (const FrameError& e) {
        EXPECT_EQ(e.code(), FrameErrc::UnknownType);
    }
}

TEST(Frame, ReaderReassemblesSplitStream) {
    std::vector<std::uint8_t> stream;
    for (int i = 0; i < 5; ++i) {
        auto f = encode_frame(msg(MsgType::Prepare, i));
        stream.insert(stream.end(), f.begin(), f.end());
    }
    FrameReader r;
    std::vector<int> tags;
    for (std::size_t i = 0; i < stream.size(); i += 7) {
        r.feed(std::span(stream.data() + i, std::min<std::size_t>(7, stream.size() - i)));
        while (auto e = r.next()) tags.push_back(e->body.at("tag").get<int>());
    }
    EXPECT_EQ(tags, (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_EQ(r.buffered(), 0u);
}

TEST(SimNetwork, ShardBroadcastFromOutsideReachesAllFour) {
    SimNetwork net(LatencyModel::fixed(10));
    std::vector<Recorder> nodes(4);
    Recorder sup;
    for (NodeIndex i = 0; i < 4; ++i) net.add_actor(Endpoint::node(0, i), &nodes[i]);
    net.add_actor(Endpoint::the_supervisor(), &sup);
    net.transmit(Endpoint::the_supervisor(), ShardBroadcast{0}, msg(MsgType::InjectTxs));
    net.run();
    for (auto& n : nodes) EXPECT_EQ(n.got.size(), 1u);
    EXPECT_TRUE(sup.got.empty());
}

TEST(SimNetwork, BroadcastSkipsSender) {
    SimNetwork net(LatencyModel::fixed(10));
    std::vector<Recorder> nodes(4);
    for (NodeIndex i = 0; i < 4; ++i) net.add_actor(Endpoint::node(0, i), &nodes[i]);
    net.transmit(Endpoint::node(0, 2), ShardBroadcast{0}, msg(MsgType::Prepare));
    net.run();
    EXPECT_EQ(net.delivered_count(), 3u);
    EXPECT_TRUE(nodes[2].got.empty());
}

TEST(SimNetwork, FixedLatency) {
    SimNetwork net(LatencyModel::fixed(10));
    Recorder a, b;
    net.add_actor(Endpoint::node(0, 0), &a);
    net.add_actor(Endpoint::node(0, 1), &b);
    net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Commit));
    auto r = net.step();
    EXPECT_EQ(r.kind, SimNetwork::StepKind::Delivered);
    EXPECT_EQ(r.time, 10);
    EXPECT_EQ(r.recipient, Endpoint::node(0, 1));
    ASSERT_EQ(b.got.size(), 1u);
    EXPECT_EQ(b.got[0].first, 10);
}

TEST(SimNetwork, EarlierEventFirstAndTiesBySeq) {
    SimNetwork net(LatencyModel::fixed(5));
    Recorder a, b;
    net.add_actor(Endpoint::node(0, 0), &a);
    net.add_actor(Endpoint::node(0, 1), &b);
    net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Prepare, 1));  // t=5
    net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Prepare, 2));  // t=5, later seq
    net.run();
    ASSERT_EQ(b.got.size(), 2u);
    EXPECT_EQ(b.got[0].second.body["tag"], 1);
    EXPECT_EQ(b.got[1].second.body["tag"], 2);
}

TEST(SimNetwork, UniformLatencyOrdersByTime) {
    SimNetwork net(LatencyModel::uniform(1, 50), 7);
    Recorder a, b;
    net.add_actor(Endpoint::node(0, 0), &a);
    net.add_actor(Endpoint::node(0, 1), &b);
    for (int i = 0; i < 50; ++i) net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Prepare, i));
    net.run();
    ASSERT_EQ(b.got.size(), 50u);
    for (std::size_t i = 1; i < b.got.size(); ++i) EXPECT_LE(b.got[i - 1].first, b.got[i].first);
}

TEST(SimNetwork, IdleWhenEmpty) {
    SimNetwork net;
    EXPECT_EQ(net.step().kind, SimNetwork::StepKind::Idle);
}

TEST(SimNetwork, UnknownPeer) {
    SimNetwork net;
    Recorder a;
    net.add_actor(Endpoint::node(0, 0), &a);
    try {
        net.transmit(Endpoint::node(0, 0), Endpoint::node(5, 5), msg(MsgType::Stop));
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.code(), TransportErrc::UnknownPeer);
    }
}

TEST(SimNetwork, CrashedActorReceivesNothing) {
    SimNetwork net(LatencyModel::fixed(10));
    Recorder a, b;
    net.add_actor(Endpoint::node(0, 0), &a);
    net.add_actor(Endpoint::node(0, 1), &b);
    net.schedule_crash(Endpoint::node(0, 1), 5);
    net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Commit));
    net.run();
    EXPECT_TRUE(net.crashed(Endpoint::node(0, 1)));
    EXPECT_TRUE(b.got.empty());
}

TEST(SimNetwork, RescheduledTimerReplacesPending) {
    struct TimerActor : Recorder {
        void on_start(Runtime& rt) override {
            rt.schedule(1, 100);
            rt.schedule(1, 40);
            rt.schedule(2, 70);
            rt.cancel(2);
        }
    } t;
    SimNetwork net;
    net.add_actor(Endpoint::node(0, 0), &t);
    net.start();
    net.run();
    ASSERT_EQ(t.timers.size(), 1u);
    EXPECT_EQ(t.timers[0], (std::pair<VirtualMs, TimerKind>{40, 1}));
}

TEST(SimNetwork, SameSeedSameTrace) {
    auto trace = [] {
        SimNetwork net(LatencyModel::uniform(1, 30), 42);
        Recorder a, b;
        net.add_actor(Endpoint::node(0, 0), &a);
        net.add_actor(Endpoint::node(0, 1), &b);
        for (int i = 0; i < 20; ++i) net.transmit(Endpoint::node(0, 0), Endpoint::node(0, 1), msg(MsgType::Prepare, i));
        net.run();
        std::vector<std::pair<VirtualMs, int>> out;
        for (auto& [t, e] : b.got) out.emplace_back(t, e.body["tag"].get<int>());
        return out;
    };
    EXPECT_EQ(trace(), trace());
}

TEST(Endpoint, ParseRoundTrip) {
    EXPECT_EQ(Endpoint::parse("3.1"), Endpoint::node(3, 1));
    EXPECT_EQ(Endpoint::parse("supervisor"), Endpoint::the_supervisor());
    EXPECT_EQ(Endpoint::node(2, 7).str(), "2.7");
}
