#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "shardemu/transport/runtime.hpp"

namespace shardemu {

struct HostPort {
    std::string host;
    std::uint16_t port = 0;  // 0 asks the OS for an ephemeral port at start()
};

// Contents of ip_table.json: {"0.0": "127.0.0.1:32216", ..., "supervisor": "127.0.0.1:32200"}.
using NodeTable = std::map<Endpoint, HostPort>;

NodeTable load_node_table(const std::filesystem::path& path);
NodeTable parse_node_table(const nlohmann::json& j);
nlohmann::json node_table_to_json(const NodeTable& table);

// All-in-one TCP backend. Every local actor listens on its table address and
// runs its own serial event loop thread. Outgoing connections are opened on
// first use, kept alive for the whole run and closed by stop().
class TcpMesh {
public:
    explicit TcpMesh(NodeTable table);
    ~TcpMesh();
    TcpMesh(const TcpMesh&) = delete;
    TcpMesh& operator=(const TcpMesh&) = delete;

    void add_actor(const Endpoint& ep, Actor* actor);
    // Binds listeners (resolving port 0), then starts the loops and calls on_start.
    void start();
    void stop();

    const NodeTable& table() const { return table_; }
    VirtualMs now() const;

    // Throws TransportError{UnknownPeer} or TransportError{PeerDown}.
    void transmit(const Endpoint& from, const Destination& to, const MessageEnvelope& env);

    // Messages handed to local actors so far.
    std::uint64_t delivered_count() const { return delivered_.load(); }
    std::uint64_t connections_opened() const { return connections_opened_.load(); }

private:
    struct Loop;
    struct Conn;
    struct Net;
    class LoopRuntime;

    void run_loop(Loop& loop);
    void deliver(const Endpoint& to, MessageEnvelope env);
    Conn& connection(const Endpoint& to);

    NodeTable table_;
    std::chrono::steady_clock::time_point epoch_;
    std::map<Endpoint, std::unique_ptr<Loop>> loops_;
    std::mutex conns_mu_;
    std::map<Endpoint, std::unique_ptr<Conn>> conns_;
    std::unique_ptr<Net> net_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> delivered_{0};
    std::atomic<std::uint64_t> connections_opened_{0};
};

}  // namespace shardemu
