#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "shardemu/core/partition_map.hpp"

namespace shardemu {

// Undirected account graph built from committed transactions. Vertex weight is
// the number of transactions touching the account; edge weight the number
// between the pair.
class AccountGraph {
public:
    // Brokers never become vertices; the other party still gains vertex weight.
    void add_tx(const Address& payer, const Address& payee, const std::set<Address>& brokers = {});
    void add_edge(const Address& a, const Address& b, std::uint64_t weight = 1);
    void add_vertex(const Address& a, std::uint64_t weight = 1);

    bool empty() const { return vertices_.empty(); }
    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    void clear();

    const std::map<Address, std::uint64_t>& vertices() const { return vertices_; }
    // Keyed by (lower address, higher address).
    const std::map<std::pair<Address, Address>, std::uint64_t>& edges() const { return edges_; }
    std::uint64_t total_vertex_weight() const;

private:
    std::map<Address, std::uint64_t> vertices_;
    std::map<std::pair<Address, Address>, std::uint64_t> edges_;
};

struct ClpaParams {
    double beta = 0.5;
    int rho = 100;
};

using Labels = std::map<Address, ShardId>;

struct ClpaResult {
    PartitionMap pmap;                  // version + 1, overrides merged with `dirty`
    std::map<Address, ShardId> dirty;   // accounts whose shard changed
    Labels labels;                      // final label of every vertex
    int rounds = 0;                     // sweeps executed
    // Objective before and after each sweep, both under that sweep's frozen loads.
    std::vector<std::pair<double, double>> sweep_objectives;
};

// Constrained label propagation. Vertices are visited in ascending address
// order; each takes argmax_k W(v,k) * (1 - beta * L_k / mean load), with loads
// frozen for the sweep and labels updated in place. Ties keep the current label
// when it attains the maximum, else go to the lowest shard id. Stops after a
// sweep without changes or after rho sweeps.
ClpaResult clpa_partition(const AccountGraph& graph, const PartitionMap& pmap, const ClpaParams& params);

// Per-shard vertex-weight loads of a labelling.
std::vector<double> shard_loads(const AccountGraph& graph, const Labels& labels, std::uint32_t n_shards);
// Sum over vertices of score(v, label(v)) with the given loads.
double clpa_objective(const AccountGraph& graph, const Labels& labels, const std::vector<double>& loads, double beta);
// Same, with loads taken from the labelling itself.
double clpa_objective(const AccountGraph& graph, const Labels& labels, std::uint32_t n_shards, double beta);
std::uint64_t cut_weight(const AccountGraph& graph, const Labels& labels);

}  // namespace shardemu
