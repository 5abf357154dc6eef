#include "shardemu/transport/tcp_mesh.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <iostream>
#include <vector>

#include <boost/asio.hpp>

#include "shardemu/transport/frame.hpp"

namespace shardemu {

namespace asio = boost::asio;
using asio::ip::tcp;

NodeTable parse_node_table(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("node table must be a JSON object");
    NodeTable table;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_string()) throw ParseError("node table entry " + key + " must be \"host:port\"");
        auto text = value.get<std::string>();
        auto colon = text.rfind(':');
        if (colon == std::string::npos) throw ParseError("node table entry " + key + " lacks a port");
        HostPort hp;
        hp.host = text.substr(0, colon);
        int port = 0;
        try {
            port = std::stoi(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw ParseError("bad port in node table entry " + key);
        }
        if (port < 0 || port > 65535) throw ParseError("bad port in node table entry " + key);
        hp.port = static_cast<std::uint16_t>(port);
        table[Endpoint::parse(key)] = hp;
    }
    return table;
}

NodeTable load_node_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open node table " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("node table " + path.string() + " is not valid JSON");
    return parse_node_table(j);
}

nlohmann::json node_table_to_json(const NodeTable& table) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [ep, hp] : table) j[ep.str()] = hp.host + ":" + std::to_string(hp.port);
    return j;
}

struct TcpMesh::Loop {
    Actor* actor = nullptr;
    std::unique_ptr<LoopRuntime> rt;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<MessageEnvelope> inbox;
    std::map<TimerKind, std::chrono::steady_clock::time_point> timers;
    bool stopping = false;
    std::thread thread;
};

struct TcpMesh::Conn {
    std::mutex mu;
    std::unique_ptr<tcp::socket> sock;
};

struct TcpMesh::Net {
    asio::io_context io;
    asio::executor_work_guard<asio::io_context::executor_type> guard{io.get_executor()};
    std::vector<std::unique_ptr<tcp::acceptor>> acceptors;
    std::thread thread;
};

class TcpMesh::LoopRuntime final : public Runtime {
public:
    LoopRuntime(TcpMesh& mesh, Loop& loop, Endpoint self) : mesh_(mesh), loop_(loop), self_(self) {}

    Endpoint self() const override { return self_; }
    VirtualMs now() const override { return mesh_.now(); }

    void send(const Destination& to, MessageEnvelope env) override {
        env.sender = self_;
        mesh_.transmit(self_, to, env);
    }

    void schedule(TimerKind kind, VirtualMs at) override {
        std::lock_guard lk(loop_.mu);
        loop_.timers[kind] = mesh_.epoch_ + std::chrono::milliseconds(at);
        loop_.cv.notify_one();
    }

    void cancel(TimerKind kind) override {
        std::lock_guard lk(loop_.mu);
        loop_.timers.erase(kind);
    }

private:
    TcpMesh& mesh_;
    Loop& loop_;
    Endpoint self_;
};

namespace {

// Reads frames from one accepted connection and hands them to the target actor.
class Session : public std::enable_shared_from_this<Session> {
public:
    using Sink = std::function<void(MessageEnvelope)>;

    Session(tcp::socket sock, Sink sink) : sock_(std::move(sock)), sink_(std::move(sink)) {}

    void start() { read(); }

private:
    void read() {
        auto self = shared_from_this();
        sock_.async_read_some(asio::buffer(buf_), [self](boost::system::error_code ec, std::size_t n) {
            if (ec) return;
            self->reader_.feed({self->buf_.data(), n});
            try {
                while (auto env = self->reader_.next()) self->sink_(std::move(*env));
            } catch (const FrameError& e) {
                std::cerr << "tcp: dropping connection after bad frame: " << e.what() << "\n";
                return;
            }
            self->read();
        });
    }

    tcp::socket sock_;
    Sink sink_;
    FrameReader reader_;
    std::array<std::uint8_t, 64 * 1024> buf_{};
};

void accept_loop(tcp::acceptor& acc, std::function<void(MessageEnvelope)> sink) {
    acc.async_accept([&acc, sink](boost::system::error_code ec, tcp::socket sock) {
        if (ec) return;
        sock.set_option(tcp::no_delay(true));
        std::make_shared<Session>(std::move(sock), sink)->start();
        accept_loop(acc, sink);
    });
}

}  // namespace

TcpMesh::TcpMesh(NodeTable table)
    : table_(std::move(table)), epoch_(std::chrono::steady_clock::now()), net_(std::make_unique<Net>()) {}

TcpMesh::~TcpMesh() { stop(); }

VirtualMs TcpMesh::now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch_).count();
}

void TcpMesh::add_actor(const Endpoint& ep, Actor* actor) {
    if (!table_.contains(ep)) throw TransportError(TransportErrc::UnknownPeer, "no table entry for " + ep.str());
    auto loop = std::make_unique<Loop>();
    loop->actor = actor;
    loop->rt = std::make_unique<LoopRuntime>(*this, *loop, ep);
    loops_[ep] = std::move(loop);
}

void TcpMesh::start() {
    for (auto& [ep, loop] : loops_) {
        auto& hp = table_.at(ep);
        auto acc = std::make_unique<tcp::acceptor>(net_->io);
        tcp::endpoint addr(asio::ip::make_address(hp.host), hp.port);
        acc->open(addr.protocol());
        acc->set_option(tcp::acceptor::reuse_address(true));
        acc->bind(addr);
        acc->listen();
        hp.port = acc->local_endpoint().port();
        Endpoint target = ep;
        accept_loop(*acc, [this, target](MessageEnvelope env) { deliver(target, std::move(env)); });
        net_->acceptors.push_back(std::move(acc));
    }
    epoch_ = std::chrono::steady_clock::now();
    running_ = true;
    net_->thread = std::thread([this] { net_->io.run(); });
    for (auto& [ep, loop] : loops_) {
        Loop* l = loop.get();
        l->thread = std::thread([this, l] { run_loop(*l); });
    }
}

void TcpMesh::stop() {
    if (!running_.exchange(false)) return;
    for (auto& [_, loop] : loops_) {
        {
            std::lock_guard lk(loop->mu);
            loop->stopping = true;
        }
        loop->cv.notify_all();
    }
    for (auto& [_, loop] : loops_) {
        if (loop->thread.joinable()) loop->thread.join();
    }
    {
        std::lock_guard lk(conns_mu_);
        for (auto& [_, c] : conns_) {
            std::lock_guard clk(c->mu);
            if (c->sock) {
                boost::system::error_code ec;
                c->sock->shutdown(tcp::socket::shutdown_both, ec);
                c->sock->close(ec);
                c->sock.reset();
            }
        }
    }
    net_->io.stop();
    if (net_->thread.joinable()) net_->thread.join();
    net_->acceptors.clear();
}

void TcpMesh::deliver(const Endpoint& to, MessageEnvelope env) {
    auto it = loops_.find(to);
    if (it == loops_.end()) return;
    auto& loop = *it->second;
    {
        std::lock_guard lk(loop.mu);
        loop.inbox.push_back(std::move(env));
    }
    loop.cv.notify_one();
    ++delivered_;
}

void TcpMesh::run_loop(Loop& loop) {
    auto guarded = [&](auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::cerr << "tcp: actor " << loop.rt->self().str() << " handler failed: " << e.what() << "\n";
        }
    };
    guarded([&] { loop.actor->on_start(*loop.rt); });

    std::unique_lock lk(loop.mu);
    while (!loop.stopping) {
        auto due = loop.timers.end();
        for (auto it = loop.timers.begin(); it != loop.timers.end(); ++it) {
            if (due == loop.timers.end() || it->second < due->second) due = it;
        }
        auto now = std::chrono::steady_clock::now();
        if (due != loop.timers.end() && due->second <= now) {
            TimerKind kind = due->first;
            loop.timers.erase(due);
            lk.unlock();
            guarded([&] { loop.actor->on_timer(*loop.rt, kind); });
            lk.lock();
            continue;
        }
        if (!loop.inbox.empty()) {
            MessageEnvelope env = std::move(loop.inbox.front());
            loop.inbox.pop_front();
            lk.unlock();
            guarded([&] { loop.actor->on_message(*loop.rt, env); });
            lk.lock();
            continue;
        }
        if (due != loop.timers.end()) {
            loop.cv.wait_until(lk, due->second);
        } else {
            loop.cv.wait(lk);
        }
    }
}

TcpMesh::Conn& TcpMesh::connection(const Endpoint& to) {
    std::lock_guard lk(conns_mu_);
    auto& slot = conns_[to];
    if (!slot) slot = std::make_unique<Conn>();
    return *slot;
}

void TcpMesh::transmit(const Endpoint& from, const Destination& to, const MessageEnvelope& env) {
    std::vector<Endpoint> targets;
    if (auto* ep = std::get_if<Endpoint>(&to)) {
        if (!table_.contains(*ep)) throw TransportError(TransportErrc::UnknownPeer, "unknown peer " + ep->str());
        targets.push_back(*ep);
    } else if (auto* sb = std::get_if<ShardBroadcast>(&to)) {
        for (const auto& [ep, _] : table_) {
            if (!ep.supervisor && ep.shard == sb->shard && ep != from) targets.push_back(ep);
        }
    } else {
        for (const auto& [ep, _] : table_) {
            if (!ep.supervisor && ep != from) targets.push_back(ep);
        }
    }
    if (targets.empty()) return;

    auto frame = encode_frame(env);
    for (const auto& target : targets) {
        auto& conn = connection(target);
        std::lock_guard lk(conn.mu);
        try {
            if (!conn.sock) {
                if (!running_) throw TransportError(TransportErrc::PeerDown, "mesh stopped");
                const auto& hp = table_.at(target);
                auto sock = std::make_unique<tcp::socket>(net_->io);
                sock->connect(tcp::endpoint(asio::ip::make_address(hp.host), hp.port));
                sock->set_option(tcp::no_delay(true));
                conn.sock = std::move(sock);
                ++connections_opened_;
            }
            asio::write(*conn.sock, asio::buffer(frame));
        } catch (const boost::system::system_error& e) {
            conn.sock.reset();
            throw TransportError(TransportErrc::PeerDown, "peer " + target.str() + " is down: " + e.what());
        }
    }
}

}  // namespace shardemu
