#pragma once

#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "shardemu/transport/runtime.hpp"

namespace shardemu {

struct LatencyModel {
    VirtualMs min_ms = 5;
    VirtualMs max_ms = 5;  // equal to min_ms for a fixed latency

    static LatencyModel fixed(VirtualMs ms) { return {ms, ms}; }
    static LatencyModel uniform(VirtualMs lo, VirtualMs hi) { return {lo, hi}; }
};

// Deterministic discrete-event network. One queue holds message deliveries,
// actor timers and scripted crashes, ordered by (time, seq).
class SimNetwork {
public:
    enum class StepKind : std::uint8_t { Delivered, TimerFired, Crashed, Idle };

    struct StepResult {
        StepKind kind = StepKind::Idle;
        VirtualMs time = 0;
        Endpoint recipient;
        std::shared_ptr<const MessageEnvelope> env;  // Delivered only
        TimerKind timer = 0;                 // TimerFired only
    };

    explicit SimNetwork(LatencyModel latency = {}, std::uint64_t seed = 1);
    ~SimNetwork();
    SimNetwork(const SimNetwork&) = delete;
    SimNetwork& operator=(const SimNetwork&) = delete;

    // The actor must outlive the network.
    void add_actor(const Endpoint& ep, Actor* actor);
    bool has_peer(const Endpoint& ep) const { return actors_.contains(ep); }

    // Calls on_start for every actor at the current virtual time, in endpoint order.
    void start();

    // Enqueues one delivery per recipient at now + latency. Broadcasts skip the sender.
    // Throws TransportError{UnknownPeer}.
    void transmit(const Endpoint& from, const Destination& to, MessageEnvelope env);

    // A crashed actor receives nothing further; messages it already sent still arrive.
    void schedule_crash(const Endpoint& ep, VirtualMs at);
    bool crashed(const Endpoint& ep) const;

    StepResult step();
    // Steps until idle or until the next event lies beyond `until`. Returns events processed.
    std::size_t run(std::optional<VirtualMs> until = std::nullopt);

    VirtualMs now() const { return now_; }
    std::size_t pending() const { return queue_.size(); }
    std::uint64_t delivered_count() const { return delivered_; }

private:
    enum class EventKind : std::uint8_t { Deliver, Timer, Crash };

    struct Event {
        VirtualMs time;
        std::uint64_t seq;
        EventKind kind;
        Endpoint to;
        std::shared_ptr<const MessageEnvelope> env;
        TimerKind timer = 0;
        std::uint64_t generation = 0;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    class ActorRuntime;

    struct Slot {
        Actor* actor = nullptr;
        std::unique_ptr<ActorRuntime> rt;
        bool crashed = false;
        std::map<TimerKind, std::uint64_t> timer_gen;
    };

    void push(Event ev);
    VirtualMs draw_latency();
    std::vector<Endpoint> resolve(const Endpoint& from, const Destination& to) const;

    LatencyModel latency_;
    std::mt19937_64 rng_;
    VirtualMs now_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t delivered_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::map<Endpoint, Slot> actors_;
};

}  // namespace shardemu
