#include "shardemu/txpool/tx_pool.hpp"

#include <algorithm>

#include "shardemu/core/ledger_ops.hpp"

namespace shardemu {

void TxPool::push_back(Transaction tx) {
    if (index_.contains(tx.hash)) return;
    queue_.push_back(std::move(tx));
    index_.emplace(queue_.back().hash, std::prev(queue_.end()));
}

std::size_t TxPool::inject_batch(std::vector<Transaction> txs, VirtualMs now) {
    std::size_t accepted = 0;
    for (auto& tx : txs) {
        if (index_.contains(tx.hash)) continue;
        tx.inject_time = now;
        push_back(std::move(tx));
        ++accepted;
    }
    return accepted;
}

std::vector<std::list<Transaction>::const_iterator> TxPool::select(std::size_t block_size) const {
    std::vector<std::list<Transaction>::const_iterator> picked;
    if (policy_ == PoolPolicy::Fifo) {
        for (auto it = queue_.begin(); it != queue_.end() && picked.size() < block_size; ++it) picked.push_back(it);
        return picked;
    }
    std::vector<std::list<Transaction>::const_iterator> all;
    all.reserve(queue_.size());
    for (auto it = queue_.begin(); it != queue_.end(); ++it) all.push_back(it);
    std::stable_sort(all.begin(), all.end(), [](auto a, auto b) { return a->fee > b->fee; });
    all.resize(std::min(block_size, all.size()));
    return all;
}

std::vector<Transaction> TxPool::peek_block_txs(std::size_t block_size) const {
    std::vector<Transaction> out;
    for (auto it : select(block_size)) out.push_back(*it);
    return out;
}

std::vector<Transaction> TxPool::pack_block_txs(std::size_t block_size) {
    if (locked_) throw PoolError(PoolErrc::PoolLocked, "pool of shard " + std::to_string(shard_) + " is locked");
    std::vector<Transaction> out;
    for (auto it : select(block_size)) {
        index_.erase(it->hash);
        out.push_back(*it);
        queue_.erase(it);
    }
    return out;
}

void TxPool::append_relays(std::vector<Transaction> relays, const PartitionMap& pmap) {
    for (const auto& r : relays) {
        if (address_to_shard(r.payee, pmap) != shard_) {
            throw PoolError(PoolErrc::WrongShard, "relay " + r.hash.hex() + " is not destined to shard " +
                                                      std::to_string(shard_));
        }
    }
    for (auto& r : relays) push_back(std::move(r));
}

std::vector<Transaction> TxPool::extract_for_migration(const std::set<Address>& dirty, const PartitionMap&) {
    if (!locked_) throw PoolError(PoolErrc::NotLocked, "extract_for_migration needs a locked pool");
    if (dirty.empty()) return {};
    return take_if([&](const Transaction& tx) { return dirty.contains(tx.payer) || dirty.contains(tx.payee); });
}

void TxPool::requeue(std::vector<Transaction> txs) {
    for (auto& tx : txs) push_back(std::move(tx));
}

void TxPool::requeue_front(std::vector<Transaction> txs) {
    for (auto it = txs.rbegin(); it != txs.rend(); ++it) {
        if (index_.contains(it->hash)) continue;
        queue_.push_front(std::move(*it));
        index_.emplace(queue_.front().hash, queue_.begin());
    }
}

std::size_t TxPool::remove(const std::vector<Digest>& hashes) {
    std::size_t removed = 0;
    for (const auto& h : hashes) {
        auto it = index_.find(h);
        if (it == index_.end()) continue;
        queue_.erase(it->second);
        index_.erase(it);
        ++removed;
    }
    return removed;
}

bool TxPool::replace(const Digest& hash, Transaction tx) {
    auto it = index_.find(hash);
    if (it == index_.end()) return false;
    auto pos = it->second;
    index_.erase(it);
    *pos = std::move(tx);
    index_[pos->hash] = pos;
    return true;
}

}  // namespace shardemu
