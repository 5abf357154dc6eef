#pragma once

#include <stdexcept>

#include "shardemu/transport/envelope.hpp"

namespace shardemu {

enum class TransportErrc : std::uint8_t { UnknownPeer, PeerDown };

class TransportError : public std::runtime_error {
public:
    TransportError(TransportErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    TransportErrc code() const { return code_; }

private:
    TransportErrc code_;
};

using TimerKind = int;

// What an actor sees of its transport: a clock, a send primitive and one-shot
// timers. Scheduling a timer kind again replaces the pending one of that kind.
class Runtime {
public:
    virtual ~Runtime() = default;
    virtual Endpoint self() const = 0;
    virtual VirtualMs now() const = 0;
    virtual void send(const Destination& to, MessageEnvelope env) = 0;
    virtual void schedule(TimerKind kind, VirtualMs at) = 0;
    virtual void cancel(TimerKind kind) = 0;

    void send_all(Outbounds out) {
        for (auto& o : out) send(o.to, std::move(o.env));
    }
};

class Actor {
public:
    virtual ~Actor() = default;
    virtual void on_start(Runtime& rt) = 0;
    virtual void on_message(Runtime& rt, const MessageEnvelope& env) = 0;
    virtual void on_timer(Runtime& rt, TimerKind kind) = 0;
};

}  // namespace shardemu
