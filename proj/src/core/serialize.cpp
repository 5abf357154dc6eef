#include "shardemu/core/serialize.hpp"

namespace shardemu {

namespace {

template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad field '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const Transaction& tx) {
    json j{
        {"hash", tx.hash.hex()},
        {"payer", tx.payer.hex()},
        {"payee", tx.payee.hex()},
        {"value", to_decimal(tx.value)},
        {"nonce", tx.nonce},
        {"kind", to_string(tx.kind)},
        {"origin_hash", tx.origin_hash ? json(tx.origin_hash->hex()) : json(nullptr)},
        {"inject_time", tx.inject_time},
    };
    if (tx.fee != 0) j["fee"] = tx.fee;
    if (tx.confirm_time) j["confirm_time"] = *tx.confirm_time;
    return j;
}

Transaction tx_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("transaction must be an object");
    Transaction tx;
    tx.payer = Address::from_hex(field<std::string>(j, "payer"));
    tx.payee = Address::from_hex(field<std::string>(j, "payee"));
    tx.value = parse_amount(field<std::string>(j, "value"));
    tx.nonce = field<std::uint64_t>(j, "nonce");
    tx.kind = tx_kind_from_string(field<std::string>(j, "kind"));
    if (auto it = j.find("origin_hash"); it != j.end() && !it->is_null()) {
        tx.origin_hash = Digest::from_hex(it->get<std::string>());
    }
    tx.inject_time = field<VirtualMs>(j, "inject_time");
    if (auto it = j.find("confirm_time"); it != j.end() && !it->is_null()) tx.confirm_time = it->get<VirtualMs>();
    if (auto it = j.find("fee"); it != j.end()) tx.fee = it->get<std::uint64_t>();
    if (is_derived(tx.kind) != tx.origin_hash.has_value()) throw ParseError("kind/origin_hash mismatch");
    tx.hash = Digest::from_hex(field<std::string>(j, "hash"));
    if (!tx.hash_valid()) throw ParseError("transaction hash does not match its fields: " + tx.hash.hex());
    return tx;
}

json to_json(const AccountState& s) {
    return json{{"address", s.address.hex()}, {"balance", to_decimal(s.balance)}, {"nonce", s.nonce}};
}

AccountState account_from_json(const json& j) {
    AccountState s;
    s.address = Address::from_hex(field<std::string>(j, "address"));
    s.balance = parse_balance(field<std::string>(j, "balance"));
    s.nonce = field<std::uint64_t>(j, "nonce");
    return s;
}

json txs_to_json(const std::vector<Transaction>& txs) {
    json arr = json::array();
    for (const auto& tx : txs) arr.push_back(to_json(tx));
    return arr;
}

std::vector<Transaction> txs_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("txs must be an array");
    std::vector<Transaction> out;
    out.reserve(j.size());
    for (const auto& t : j) out.push_back(tx_from_json(t));
    return out;
}

json to_json(const Block& b) {
    json payload = json::array();
    for (const auto& s : b.migration_payload) payload.push_back(to_json(s));
    json out = json::array();
    for (const auto& a : b.migrated_out) out.push_back(a.hex());
    return json{
        {"hash", b.hash().hex()},
        {"shard_id", b.shard_id},
        {"height", b.height},
        {"parent_hash", b.parent_hash.hex()},
        {"state_root", b.state_root.hex()},
        {"proposer", b.proposer},
        {"block_kind", to_string(b.kind)},
        {"txs", txs_to_json(b.txs)},
        {"migration_payload", std::move(payload)},
        {"migrated_out", std::move(out)},
        {"pmap_version", b.pmap_version},
        {"timestamp", b.timestamp},
    };
}

Block block_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("block must be an object");
    Block b;
    b.shard_id = field<ShardId>(j, "shard_id");
    b.height = field<Height>(j, "height");
    b.parent_hash = Digest::from_hex(field<std::string>(j, "parent_hash"));
    b.state_root = Digest::from_hex(field<std::string>(j, "state_root"));
    b.proposer = field<NodeIndex>(j, "proposer");
    b.kind = block_kind_from_string(field<std::string>(j, "block_kind"));
    b.txs = txs_from_json(j.at("txs"));
    if (auto it = j.find("migration_payload"); it != j.end()) {
        for (const auto& s : *it) b.migration_payload.push_back(account_from_json(s));
    }
    if (auto it = j.find("migrated_out"); it != j.end()) {
        for (const auto& a : *it) b.migrated_out.push_back(Address::from_hex(a.get<std::string>()));
    }
    b.pmap_version = j.value("pmap_version", std::uint64_t{0});
    b.timestamp = field<VirtualMs>(j, "timestamp");
    if (auto it = j.find("hash"); it != j.end() && Digest::from_hex(it->get<std::string>()) != b.hash()) {
        throw ParseError("block hash does not match its contents");
    }
    return b;
}

}  // namespace shardemu
