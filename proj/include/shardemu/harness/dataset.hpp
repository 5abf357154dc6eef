#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shardemu/core/transaction.hpp"

namespace shardemu {

class BadRow : public std::runtime_error {
public:
    BadRow(std::size_t line, const std::string& why);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// CSV with header `from,to,value` and an optional trailing `fee` column. Rows
// become Regular payments with nonces 0, 1, 2, ... in file order.
std::vector<Transaction> load_dataset(const std::filesystem::path& path,
                                      std::optional<std::size_t> limit = std::nullopt);
std::vector<Transaction> parse_dataset(std::istream& in, std::optional<std::size_t> limit = std::nullopt);

struct Skew {
    bool zipf = false;
    double s = 0;
};

// "uniform" or "zipf:S". Throws std::invalid_argument.
Skew parse_skew(const std::string& text);

struct GenReport {
    std::size_t rows = 0;
    std::size_t accounts = 0;
    // Share of rows touching one of the ten most active accounts.
    double top10_coverage = 0;
};

GenReport gen_dataset(std::size_t accounts, std::size_t txs, Skew skew, std::uint64_t seed, std::ostream& out);
GenReport gen_dataset_file(std::size_t accounts, std::size_t txs, Skew skew, std::uint64_t seed,
                           const std::filesystem::path& path);

// The k addresses appearing in the most rows (as payer or payee); ties go to the
// lower address.
std::vector<Address> top_accounts(const std::vector<Transaction>& txs, std::size_t k);

// Fraction of rows with at least one endpoint in `accounts`.
double coverage(const std::vector<Transaction>& txs, const std::vector<Address>& accounts);

}  // namespace shardemu
