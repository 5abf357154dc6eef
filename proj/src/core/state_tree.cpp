#include "shardemu/core/state_tree.hpp"

#include <algorithm>

#include "shardemu/core/digest.hpp"

namespace shardemu {

Digest leaf_hash(const AccountState& s) {
    return DigestWriter{}.u8(0x00).address(s.address).balance(s.balance).u64(s.nonce).finish();
}

Digest merkle_root(std::span<const Digest> leaves) {
    if (leaves.empty()) return sha256(std::string_view{});
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        std::vector<Digest> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            next.push_back(DigestWriter{}.u8(0x01).digest(level[i]).digest(level[i + 1]).finish());
        }
        if (level.size() % 2 == 1) next.push_back(level.back());
        level = std::move(next);
    }
    return level.front();
}

StateTree::StateTree() : root_(sha256(std::string_view{})) {}

std::vector<StateTree::Entry>::iterator StateTree::find(const Address& a) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), a,
                               [](const Entry& e, const Address& x) { return e.state.address < x; });
    return (it != entries_.end() && it->state.address == a) ? it : entries_.end();
}

std::vector<StateTree::Entry>::const_iterator StateTree::find(const Address& a) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), a,
                               [](const Entry& e, const Address& x) { return e.state.address < x; });
    return (it != entries_.end() && it->state.address == a) ? it : entries_.end();
}

bool StateTree::contains(const Address& a) const { return find(a) != entries_.end(); }

std::optional<AccountState> StateTree::get(const Address& a) const {
    auto it = find(a);
    if (it == entries_.end()) return std::nullopt;
    return it->state;
}

AccountState StateTree::get_or_default(const Address& a) const {
    auto it = find(a);
    if (it == entries_.end()) return AccountState{a, 0, 0};
    return it->state;
}

void StateTree::put(const AccountState& s) { put_many({s}); }

bool StateTree::erase(const Address& a) {
    auto it = find(a);
    if (it == entries_.end()) return false;
    entries_.erase(it);
    recompute_root();
    return true;
}

void StateTree::put_many(std::vector<AccountState> updates) {
    // Keep only the last update per address, then merge the two sorted runs.
    std::stable_sort(updates.begin(), updates.end(),
                     [](const AccountState& x, const AccountState& y) { return x.address < y.address; });
    std::vector<Entry> incoming;
    incoming.reserve(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (i + 1 < updates.size() && updates[i + 1].address == updates[i].address) continue;
        incoming.push_back(Entry{updates[i], leaf_hash(updates[i])});
    }

    std::vector<Entry> merged;
    merged.reserve(entries_.size() + incoming.size());
    auto a = entries_.begin();
    auto b = incoming.begin();
    while (a != entries_.end() || b != incoming.end()) {
        if (b == incoming.end() || (a != entries_.end() && a->state.address < b->state.address)) {
            merged.push_back(std::move(*a++));
        } else if (a == entries_.end() || b->state.address < a->state.address) {
            merged.push_back(std::move(*b++));
        } else {
            merged.push_back(std::move(*b++));
            ++a;
        }
    }
    entries_ = std::move(merged);
    recompute_root();
}

void StateTree::recompute_root() {
    std::vector<Digest> leaves;
    leaves.reserve(entries_.size());
    for (const auto& e : entries_) leaves.push_back(e.leaf);
    root_ = merkle_root(leaves);
}

std::vector<AccountState> StateTree::entries() const {
    std::vector<AccountState> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.state);
    return out;
}

Balance StateTree::total_balance() const {
    Balance sum = 0;
    for (const auto& e : entries_) sum += e.state.balance;
    return sum;
}

Digest compute_state_root(const StateTree& state) {
    std::vector<Digest> leaves;
    for (const auto& s : state.entries()) leaves.push_back(leaf_hash(s));
    return merkle_root(leaves);
}

}  // namespace shardemu
