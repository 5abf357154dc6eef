#include "shardemu/mechanisms/clpa.hpp"

#include <numeric>

namespace shardemu {

void AccountGraph::add_vertex(const Address& a, std::uint64_t weight) { vertices_[a] += weight; }

void AccountGraph::add_edge(const Address& a, const Address& b, std::uint64_t weight) {
    if (a == b || weight == 0) return;
    edges_[a < b ? std::pair{a, b} : std::pair{b, a}] += weight;
}

void AccountGraph::add_tx(const Address& payer, const Address& payee, const std::set<Address>& brokers) {
    bool payer_in = !brokers.contains(payer);
    bool payee_in = !brokers.contains(payee);
    if (payer_in) add_vertex(payer);
    if (payee_in && payee != payer) add_vertex(payee);
    if (payer_in && payee_in) add_edge(payer, payee);
}

void AccountGraph::clear() {
    vertices_.clear();
    edges_.clear();
}

std::uint64_t AccountGraph::total_vertex_weight() const {
    std::uint64_t total = 0;
    for (const auto& [_, w] : vertices_) total += w;
    return total;
}

std::vector<double> shard_loads(const AccountGraph& graph, const Labels& labels, std::uint32_t n_shards) {
    std::vector<double> loads(n_shards, 0.0);
    for (const auto& [v, w] : graph.vertices()) loads[labels.at(v)] += static_cast<double>(w);
    return loads;
}

namespace {

double penalty(const std::vector<double>& loads, ShardId k, double beta) {
    double mean = std::accumulate(loads.begin(), loads.end(), 0.0) / static_cast<double>(loads.size());
    if (mean <= 0.0) return 1.0;
    return 1.0 - beta * loads[k] / mean;
}

}  // namespace

double clpa_objective(const AccountGraph& graph, const Labels& labels, const std::vector<double>& loads, double beta) {
    // Each intra-label edge contributes its weight once from each endpoint.
    double total = 0.0;
    for (const auto& [e, w] : graph.edges()) {
        ShardId la = labels.at(e.first);
        if (la == labels.at(e.second)) total += 2.0 * static_cast<double>(w) * penalty(loads, la, beta);
    }
    return total;
}

double clpa_objective(const AccountGraph& graph, const Labels& labels, std::uint32_t n_shards, double beta) {
    return clpa_objective(graph, labels, shard_loads(graph, labels, n_shards), beta);
}

std::uint64_t cut_weight(const AccountGraph& graph, const Labels& labels) {
    std::uint64_t cut = 0;
    for (const auto& [e, w] : graph.edges()) {
        if (labels.at(e.first) != labels.at(e.second)) cut += w;
    }
    return cut;
}

ClpaResult clpa_partition(const AccountGraph& graph, const PartitionMap& pmap, const ClpaParams& params) {
    const std::uint32_t n = pmap.n_shards;
    ClpaResult result{pmap, {}, {}, 0, {}};

    // Dense indices in ascending address order.
    std::vector<Address> order;
    std::map<Address, std::size_t> idx;
    for (const auto& [v, _] : graph.vertices()) {
        idx[v] = order.size();
        order.push_back(v);
    }
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(order.size());
    for (const auto& [e, w] : graph.edges()) {
        auto a = idx.at(e.first), b = idx.at(e.second);
        adj[a].push_back({b, static_cast<double>(w)});
        adj[b].push_back({a, static_cast<double>(w)});
    }
    std::vector<ShardId> label(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) label[i] = address_to_shard(order[i], pmap);

    auto to_labels = [&] {
        Labels out;
        for (std::size_t i = 0; i < order.size(); ++i) out[order[i]] = label[i];
        return out;
    };

    std::vector<double> weight_to(n);
    for (int round = 0; round < params.rho && !order.empty(); ++round) {
        auto loads = shard_loads(graph, to_labels(), n);
        std::vector<double> pen(n);
        for (ShardId k = 0; k < n; ++k) pen[k] = penalty(loads, k, params.beta);
        double before = clpa_objective(graph, to_labels(), loads, params.beta);

        bool changed = false;
        for (std::size_t i = 0; i < order.size(); ++i) {
            std::fill(weight_to.begin(), weight_to.end(), 0.0);
            for (auto [j, w] : adj[i]) weight_to[label[j]] += w;

            ShardId cur = label[i];
            double best_score = weight_to[cur] * pen[cur];
            ShardId best = cur;
            for (ShardId k = 0; k < n; ++k) {
                double s = weight_to[k] * pen[k];
                if (s > best_score) {
                    best_score = s;
                    best = k;
                }
            }
            // A strictly better shard exists: among the tied maxima take the lowest id.
            if (best != cur) {
                for (ShardId k = 0; k < n; ++k) {
                    if (weight_to[k] * pen[k] == best_score) {
                        best = k;
                        break;
                    }
                }
                label[i] = best;
                changed = true;
            }
        }
        result.rounds = round + 1;
        result.sweep_objectives.push_back({before, clpa_objective(graph, to_labels(), loads, params.beta)});
        if (!changed) break;
    }

    result.labels = to_labels();
    for (const auto& [v, k] : result.labels) {
        if (address_to_shard(v, pmap) != k) result.dirty[v] = k;
    }
    result.pmap = pmap.with_overrides(result.dirty, pmap.version + 1);
    return result;
}

}  // namespace shardemu
