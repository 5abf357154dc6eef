#include "shardemu/harness/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace shardemu {

BadRow::BadRow(std::size_t line, const std::string& why)
    : std::runtime_error("dataset line " + std::to_string(line) + ": " + why), line_(line) {}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    return s.substr(i);
}

}  // namespace

std::vector<Transaction> parse_dataset(std::istream& in, std::optional<std::size_t> limit) {
    std::string line;
    if (!std::getline(in, line)) throw BadRow(1, "empty file, expected header from,to,value");
    auto header = split_csv(trim(line));
    for (auto& h : header) h = trim(h);
    bool with_fee = header.size() == 4 && header[3] == "fee";
    if (header.size() < 3 || header[0] != "from" || header[1] != "to" || header[2] != "value" ||
        (header.size() == 4 && !with_fee) || header.size() > 4) {
        throw BadRow(1, "expected header from,to,value[,fee]");
    }
    std::vector<Transaction> out;
    std::size_t lineno = 1;
    while ((!limit || out.size() < *limit) && std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw BadRow(lineno, "expected " + std::to_string(header.size()) + " columns");
        }
        try {
            auto payer = Address::from_hex(trim(cells[0]));
            auto payee = Address::from_hex(trim(cells[1]));
            auto value = parse_amount(trim(cells[2]));
            auto tx = Transaction::make(payer, payee, value, out.size(), TxKind::Regular);
            if (with_fee) tx.fee = std::stoull(trim(cells[3]));
            out.push_back(std::move(tx));
        } catch (const std::exception& e) {
            throw BadRow(lineno, e.what());
        }
    }
    return out;
}

std::vector<Transaction> load_dataset(const std::filesystem::path& path, std::optional<std::size_t> limit) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    return parse_dataset(in, limit);
}

Skew parse_skew(const std::string& text) {
    if (text == "uniform") return {};
    if (text.rfind("zipf:", 0) == 0) {
        try {
            double s = std::stod(text.substr(5));
            if (s > 0) return {true, s};
        } catch (const std::logic_error&) {
        }
    }
    throw std::invalid_argument("skew must be uniform or zipf:S with S > 0");
}

GenReport gen_dataset(std::size_t accounts, std::size_t txs, Skew skew, std::uint64_t seed, std::ostream& out) {
    if (accounts < 2 || txs < 1) throw std::invalid_argument("need at least 2 accounts and 1 transaction");
    std::mt19937_64 rng(seed);
    std::vector<Address> addrs;
    std::set<Address> unique;
    while (addrs.size() < accounts) {
        Address a;
        for (std::size_t i = 0; i < a.bytes.size(); i += 8) {
            std::uint64_t r = rng();
            for (std::size_t b = 0; b < 8 && i + b < a.bytes.size(); ++b) {
                a.bytes[i + b] = static_cast<std::uint8_t>(r >> (8 * b));
            }
        }
        if (unique.insert(a).second) addrs.push_back(a);
    }
    std::vector<double> weights(accounts, 1.0);
    if (skew.zipf) {
        for (std::size_t r = 0; r < accounts; ++r) weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), skew.s);
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<int> value(1, 1000);

    std::vector<std::size_t> hits(accounts, 0);
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    rows.reserve(txs);
    out << "from,to,value\n";
    for (std::size_t i = 0; i < txs; ++i) {
        std::size_t p = pick(rng), q = pick(rng);
        while (q == p) q = pick(rng);
        ++hits[p];
        ++hits[q];
        rows.emplace_back(p, q);
        out << addrs[p].hex() << ',' << addrs[q].hex() << ',' << value(rng) << '\n';
    }
    std::vector<std::size_t> order(accounts);
    for (std::size_t i = 0; i < accounts; ++i) order[i] = i;
    const auto top = static_cast<std::ptrdiff_t>(std::min<std::size_t>(10, accounts));
    std::partial_sort(order.begin(), order.begin() + top, order.end(), [&](std::size_t a, std::size_t b) {
        return hits[a] != hits[b] ? hits[a] > hits[b] : addrs[a] < addrs[b];
    });
    std::vector<bool> is_top(accounts, false);
    for (std::ptrdiff_t i = 0; i < top; ++i) is_top[order[static_cast<std::size_t>(i)]] = true;
    std::size_t covered = 0;
    for (auto [p, q] : rows) covered += (is_top[p] || is_top[q]) ? 1 : 0;

    GenReport rep;
    rep.rows = txs;
    rep.accounts = accounts;
    rep.top10_coverage = static_cast<double>(covered) / static_cast<double>(txs);
    return rep;
}

GenReport gen_dataset_file(std::size_t accounts, std::size_t txs, Skew skew, std::uint64_t seed,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    auto rep = gen_dataset(accounts, txs, skew, seed, out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
    return rep;
}

std::vector<Address> top_accounts(const std::vector<Transaction>& txs, std::size_t k) {
    std::map<Address, std::size_t> count;
    for (const auto& tx : txs) {
        ++count[tx.payer];
        if (tx.payee != tx.payer) ++count[tx.payee];
    }
    std::vector<std::pair<Address, std::size_t>> v(count.begin(), count.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<Address> out;
    for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(v[i].first);
    return out;
}

double coverage(const std::vector<Transaction>& txs, const std::vector<Address>& accounts) {
    if (txs.empty()) return 0;
    std::set<Address> set(accounts.begin(), accounts.end());
    std::size_t n = 0;
    for (const auto& tx : txs) n += (set.contains(tx.payer) || set.contains(tx.payee)) ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(txs.size());
}

}  // namespace shardemu
