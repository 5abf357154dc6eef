#include "shardemu/transport/sim_network.hpp"

namespace shardemu {

class SimNetwork::ActorRuntime final : public Runtime {
public:
    ActorRuntime(SimNetwork& net, Endpoint self) : net_(net), self_(self) {}

    Endpoint self() const override { return self_; }
    VirtualMs now() const override { return net_.now_; }

    void send(const Destination& to, MessageEnvelope env) override {
        env.sender = self_;
        net_.transmit(self_, to, std::move(env));
    }

    void schedule(TimerKind kind, VirtualMs at) override {
        auto& slot = net_.actors_.at(self_);
        auto gen = ++slot.timer_gen[kind];
        net_.push(Event{std::max(at, net_.now_), 0, EventKind::Timer, self_, nullptr, kind, gen});
    }

    void cancel(TimerKind kind) override { ++net_.actors_.at(self_).timer_gen[kind]; }

private:
    SimNetwork& net_;
    Endpoint self_;
};

SimNetwork::SimNetwork(LatencyModel latency, std::uint64_t seed) : latency_(latency), rng_(seed) {
    if (latency_.max_ms < latency_.min_ms) std::swap(latency_.min_ms, latency_.max_ms);
}

SimNetwork::~SimNetwork() = default;

void SimNetwork::add_actor(const Endpoint& ep, Actor* actor) {
    Slot slot;
    slot.actor = actor;
    slot.rt = std::make_unique<ActorRuntime>(*this, ep);
    actors_[ep] = std::move(slot);
}

void SimNetwork::start() {
    for (auto& [ep, slot] : actors_) {
        if (!slot.crashed) slot.actor->on_start(*slot.rt);
    }
}

void SimNetwork::push(Event ev) {
    ev.seq = seq_++;
    queue_.push(std::move(ev));
}

VirtualMs SimNetwork::draw_latency() {
    if (latency_.min_ms == latency_.max_ms) return latency_.min_ms;
    std::uniform_int_distribution<VirtualMs> dist(latency_.min_ms, latency_.max_ms);
    return dist(rng_);
}

std::vector<Endpoint> SimNetwork::resolve(const Endpoint& from, const Destination& to) const {
    std::vector<Endpoint> out;
    if (auto* ep = std::get_if<Endpoint>(&to)) {
        if (!actors_.contains(*ep)) throw TransportError(TransportErrc::UnknownPeer, "unknown peer " + ep->str());
        out.push_back(*ep);
    } else if (auto* sb = std::get_if<ShardBroadcast>(&to)) {
        for (const auto& [ep, _] : actors_) {
            if (!ep.supervisor && ep.shard == sb->shard && ep != from) out.push_back(ep);
        }
        if (out.empty() && !(from.shard == sb->shard && !from.supervisor)) {
            throw TransportError(TransportErrc::UnknownPeer, "unknown shard " + std::to_string(sb->shard));
        }
    } else {
        for (const auto& [ep, _] : actors_) {
            if (!ep.supervisor && ep != from) out.push_back(ep);
        }
    }
    return out;
}

void SimNetwork::transmit(const Endpoint& from, const Destination& to, MessageEnvelope env) {
    auto targets = resolve(from, to);
    auto shared = std::make_shared<const MessageEnvelope>(std::move(env));
    for (const auto& ep : targets) {
        push(Event{now_ + draw_latency(), 0, EventKind::Deliver, ep, shared, 0, 0});
    }
}

void SimNetwork::schedule_crash(const Endpoint& ep, VirtualMs at) {
    if (!actors_.contains(ep)) throw TransportError(TransportErrc::UnknownPeer, "unknown peer " + ep.str());
    push(Event{at, 0, EventKind::Crash, ep, nullptr, 0, 0});
}

bool SimNetwork::crashed(const Endpoint& ep) const {
    auto it = actors_.find(ep);
    return it != actors_.end() && it->second.crashed;
}

SimNetwork::StepResult SimNetwork::step() {
    while (!queue_.empty()) {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.time;
        auto& slot = actors_.at(ev.to);
        if (slot.crashed) continue;

        switch (ev.kind) {
            case EventKind::Crash:
                slot.crashed = true;
                return {StepKind::Crashed, now_, ev.to, nullptr, 0};
            case EventKind::Timer: {
                auto it = slot.timer_gen.find(ev.timer);
                if (it == slot.timer_gen.end() || it->second != ev.generation) continue;
                slot.actor->on_timer(*slot.rt, ev.timer);
                return {StepKind::TimerFired, now_, ev.to, nullptr, ev.timer};
            }
            case EventKind::Deliver:
                ++delivered_;
                slot.actor->on_message(*slot.rt, *ev.env);
                return {StepKind::Delivered, now_, ev.to, ev.env, 0};
        }
    }
    return {StepKind::Idle, now_, {}, nullptr, 0};
}

std::size_t SimNetwork::run(std::optional<VirtualMs> until) {
    std::size_t n = 0;
    while (!queue_.empty()) {
        if (until && queue_.top().time > *until) break;
        if (step().kind == StepKind::Idle) break;
        ++n;
    }
    return n;
}

}  // namespace shardemu
