#include "rcchain/ledger/export.hpp"

#include "json.hpp"

#include <sstream>

namespace rcchain::ledger {

using nlohmann::json;

std::string export_chain(const ChainLedger& ledger) {
    std::string out;
    for (const auto& b : ledger.blocks()) {
        json txs = json::array();
        for (std::size_t k = 0; k < b.txs.size(); ++k) {
            const ValidationCode code = k < b.flags.size() ? b.flags[k] : ValidationCode::valid;
            txs.push_back({{"tx_id", b.txs[k].proposal.tx_id},
                           {"kind", to_string(b.txs[k].proposal.kind)},
                           {"valid", code == ValidationCode::valid},
                           {"reason", to_string(code)}});
        }
        json rec = {{"number", b.number},
                    {"prev_hash", crypto::to_hex(b.prev_hash)},
                    {"body_hash", crypto::to_hex(b.body_hash)},
                    {"txs", std::move(txs)}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string export_world_state(const WorldState& state) {
    json doc = json::object();
    for (const auto& [key, v] : state) doc[key] = {{"value", v.value}, {"version", v.version}};
    return doc.dump() + "\n";
}

VerifyResult verify_export(std::istream& in) {
    std::string line;
    std::uint64_t expect = 0;
    crypto::Digest prev_header = crypto::zero_digest;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ExportParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const bool shaped = rec.is_object() && rec.size() == 4 && rec.contains("number") &&
                            rec["number"].is_number_unsigned() && rec.contains("prev_hash") &&
                            rec["prev_hash"].is_string() && rec.contains("body_hash") &&
                            rec["body_hash"].is_string() && rec.contains("txs") &&
                            rec["txs"].is_array();
        if (!shaped) throw ExportParseError("line " + std::to_string(line_no) + ": not a block record");

        const auto number = rec["number"].get<std::uint64_t>();
        auto bad = [&](std::string why) { return VerifyResult{false, number, std::move(why)}; };
        if (number != expect) return bad("number");

        auto prev = crypto::digest_from_hex(rec["prev_hash"].get<std::string>());
        auto body = crypto::digest_from_hex(rec["body_hash"].get<std::string>());
        if (!prev || !body) return bad("hash_encoding");
        if (*prev != prev_header) return bad("prev_hash");

        std::vector<std::string> ids;
        for (const auto& tx : rec["txs"]) {
            if (!tx.is_object() || tx.size() != 4 || !tx.contains("tx_id") ||
                !tx["tx_id"].is_string() || !tx.contains("kind") || !tx["kind"].is_string() ||
                !tx.contains("valid") || !tx["valid"].is_boolean() || !tx.contains("reason") ||
                !tx["reason"].is_string())
                return bad("tx_record");
            auto code = parse_validation_code(tx["reason"].get<std::string>());
            if (!parse_tx_kind(tx["kind"].get<std::string>()) || !code ||
                (*code == ValidationCode::valid) != tx["valid"].get<bool>())
                return bad("tx_record");
            ids.push_back(tx["tx_id"].get<std::string>());
        }
        if (number == 0 && !ids.empty()) return bad("genesis");
        if (*body != body_hash(ids)) return bad("body_hash");

        prev_header = header_hash(number, *prev, *body);
        ++expect;
    }
    if (expect == 0) throw ExportParseError("empty ledger export");
    return {true, std::nullopt, "ok"};
}

} // namespace rcchain::ledger
