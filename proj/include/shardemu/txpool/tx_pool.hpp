#pragma once

#include <list>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "shardemu/core/partition_map.hpp"
#include "shardemu/core/transaction.hpp"

namespace shardemu {

enum class PoolPolicy : std::uint8_t { Fifo, FeePriority };

enum class PoolErrc : std::uint8_t { PoolLocked, NotLocked, WrongShard };

class PoolError : public std::runtime_error {
public:
    PoolError(PoolErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    PoolErrc code() const { return code_; }

private:
    PoolErrc code_;
};

// Per-shard transaction queue. Unbounded. Injection is accepted while locked;
// packing is not. A hash is queued at most once.
class TxPool {
public:
    explicit TxPool(ShardId shard, PoolPolicy policy = PoolPolicy::Fifo) : shard_(shard), policy_(policy) {}

    ShardId shard_id() const { return shard_; }
    std::size_t size() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }
    bool locked() const { return locked_; }
    void set_locked(bool v) { locked_ = v; }
    PoolPolicy policy() const { return policy_; }

    // Appends in order and stamps inject_time. Returns the number accepted.
    std::size_t inject_batch(std::vector<Transaction> txs, VirtualMs now);

    // Removes and returns up to `block_size` transactions from the head (FIFO) or
    // by descending fee with FIFO tie-break. Throws PoolError{PoolLocked}.
    std::vector<Transaction> pack_block_txs(std::size_t block_size);

    // Same selection as pack_block_txs without removing anything.
    std::vector<Transaction> peek_block_txs(std::size_t block_size) const;

    // Appends inter-shard relays at the tail. All-or-nothing: throws
    // PoolError{WrongShard} if any relay's payee is not assigned to this shard.
    void append_relays(std::vector<Transaction> relays, const PartitionMap& pmap);

    // Removes every queued tx touching a dirty account, preserving relative order
    // of both the kept and the extracted sequences. Throws PoolError{NotLocked}.
    std::vector<Transaction> extract_for_migration(const std::set<Address>& dirty, const PartitionMap& pmap);

    // Appends without restamping inject_time (used for re-queued and migrated txs).
    void requeue(std::vector<Transaction> txs);
    // Puts txs back at the head, in the given order (an abandoned proposal).
    void requeue_front(std::vector<Transaction> txs);

    // Drops txs whose hash is listed; returns how many were present.
    std::size_t remove(const std::vector<Digest>& hashes);

    // Removes and returns every tx matching the predicate, order preserved.
    template <typename Pred>
    std::vector<Transaction> take_if(Pred pred) {
        std::vector<Transaction> out;
        for (auto it = queue_.begin(); it != queue_.end();) {
            if (pred(*it)) {
                index_.erase(it->hash);
                out.push_back(std::move(*it));
                it = queue_.erase(it);
            } else {
                ++it;
            }
        }
        return out;
    }

    // Replaces a queued tx in place (same FIFO position).
    bool replace(const Digest& hash, Transaction tx);

    bool contains(const Digest& hash) const { return index_.contains(hash); }
    std::vector<Transaction> snapshot() const { return {queue_.begin(), queue_.end()}; }

private:
    void push_back(Transaction tx);
    std::vector<std::list<Transaction>::const_iterator> select(std::size_t block_size) const;

    ShardId shard_;
    PoolPolicy policy_;
    bool locked_ = false;
    std::list<Transaction> queue_;
    std::unordered_map<Digest, std::list<Transaction>::iterator> index_;
};

}  // namespace shardemu
