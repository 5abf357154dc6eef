#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shardemu/core/types.hpp"

namespace shardemu {

struct AccountState {
    Address address;
    Balance balance = 0;
    std::uint64_t nonce = 0;

    bool operator==(const AccountState&) const = default;
};

Digest leaf_hash(const AccountState& s);

// Account states of one shard kept sorted by address, with a binary Merkle root
// over the sorted leaves (pairwise hashing, odd node promoted to the next level).
// Copies are cheap flat-vector copies, which keeps apply_block_to_state pure.
class StateTree {
public:
    StateTree();

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool contains(const Address& a) const;
    std::optional<AccountState> get(const Address& a) const;
    // Missing accounts read as zero balance, zero nonce.
    AccountState get_or_default(const Address& a) const;

    void put(const AccountState& s);
    bool erase(const Address& a);

    // Applies a batch of updates with one merge pass; later updates for the same
    // address win. Recomputes the root.
    void put_many(std::vector<AccountState> updates);

    const Digest& root() const { return root_; }
    void recompute_root();

    std::vector<AccountState> entries() const;
    Balance total_balance() const;

    bool operator==(const StateTree& o) const { return root_ == o.root_ && entries_.size() == o.entries_.size(); }

private:
    struct Entry {
        AccountState state;
        Digest leaf;
    };
    std::vector<Entry> entries_;
    Digest root_;

    std::vector<Entry>::iterator find(const Address& a);
    std::vector<Entry>::const_iterator find(const Address& a) const;
};

Digest merkle_root(std::span<const Digest> leaves);
Digest compute_state_root(const StateTree& state);

}  // namespace shardemu
