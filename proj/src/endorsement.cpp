#include "rcchain/ledger/transaction.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <sstream>

namespace rcchain::ledger {

namespace {

constexpr std::array<std::pair<TxKind, const char*>, 7> kind_names{{
    {TxKind::qa_request, "qa_request"},
    {TxKind::service_offer, "service_offer"},
    {TxKind::service_proposal, "service_proposal"},
    {TxKind::service_process, "service_process"},
    {TxKind::feedback, "feedback"},
    {TxKind::reputation_update, "reputation_update"},
    {TxKind::data_index, "data_index"},
}};

// Length-prefixed fields so that no separator inside a field can alias
// another encoding.
void put_field(std::string& out, std::string_view field) {
    out += std::to_string(field.size());
    out += ':';
    out += field;
}

std::string format_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", t);
    return buf;
}

} // namespace

const char* to_string(TxKind k) {
    for (const auto& [kind, name] : kind_names)
        if (kind == k) return name;
    return "unknown";
}

std::optional<TxKind> parse_tx_kind(std::string_view s) {
    for (const auto& [kind, name] : kind_names)
        if (s == name) return kind;
    return std::nullopt;
}

std::string compute_tx_id(TxKind kind, const std::string& creator, const std::string& payload,
                          std::uint64_t nonce, double created_at) {
    std::string enc;
    put_field(enc, to_string(kind));
    put_field(enc, creator);
    put_field(enc, payload);
    put_field(enc, std::to_string(nonce));
    put_field(enc, format_time(created_at));
    return crypto::to_hex(crypto::sha256(enc));
}

TransactionProposal make_proposal(const CertificateAuthority& ca, const std::string& creator,
                                  TxKind kind, std::string payload, std::uint64_t nonce,
                                  double created_at) {
    TransactionProposal p;
    p.kind = kind;
    p.creator = creator;
    p.payload = std::move(payload);
    p.nonce = nonce;
    p.created_at = created_at;
    p.tx_id = compute_tx_id(kind, creator, p.payload, nonce, created_at);
    p.client_sig = ca.sign(creator, p.tx_id);
    return p;
}

ReadWriteSet simulate_execution(TxKind, std::string_view payload, const WorldState& state) {
    ReadWriteSet rw;
    // Later reads of a key written earlier in the same tx see the original
    // version; only the first read of each key is recorded.
    std::map<std::string, bool> seen;
    std::istringstream lines{std::string(payload)};
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream words(line);
        std::string op, key;
        words >> op >> key;
        if ((op != "put" && op != "get") || key.empty()) continue;
        if (!seen.contains(key)) {
            auto it = state.find(key);
            rw.reads.push_back({key, it == state.end() ? 0 : it->second.version});
            seen[key] = true;
        }
        if (op == "put") {
            std::string value;
            std::getline(words >> std::ws, value);
            rw.writes.push_back({key, value});
        }
    }
    return rw;
}

crypto::Digest result_hash(const ReadWriteSet& rw) {
    std::string enc;
    for (const auto& r : rw.reads) {
        put_field(enc, "r");
        put_field(enc, r.key);
        put_field(enc, std::to_string(r.version));
    }
    for (const auto& w : rw.writes) {
        put_field(enc, "w");
        put_field(enc, w.key);
        put_field(enc, w.value);
    }
    return crypto::sha256(enc);
}

std::string endorsement_message(const std::string& tx_id, const crypto::Digest& result) {
    return "endorse|" + tx_id + "|" + crypto::to_hex(result);
}

EndorseResult endorse(const TransactionProposal& proposal, const EndorsementPolicy& policy,
                      std::span<const EndorsingPeer> peers, const WorldState& state,
                      const CertificateAuthority& ca) {
    EndorseResult out;
    out.tx.proposal = proposal;
    out.tx.rw = simulate_execution(proposal.kind, proposal.payload, state);
    const auto digest = result_hash(out.tx.rw);

    for (const auto& peer : peers) {
        if (!peer.reachable) continue;
        auto ident = ca.find(peer.id);
        if (!ident || ident->role != Role::endorsing_peer || ca.is_revoked(peer.id)) continue;
        out.tx.endorsements.push_back(
            {proposal.tx_id, ident->id, ident->org, digest,
             ca.sign(ident->id, endorsement_message(proposal.tx_id, digest))});
    }
    out.status = check_policy(out.tx.endorsements, policy, digest, ca) ? EndorseStatus::ok
                                                                        : EndorseStatus::insufficient;
    return out;
}

bool check_policy(std::span<const Endorsement> endorsements, const EndorsementPolicy& policy,
                  const crypto::Digest& expected, const CertificateAuthority& ca) {
    std::map<std::string, std::set<std::string>> per_org;
    for (const auto& e : endorsements) {
        if (e.result_hash != expected) continue;
        auto ident = ca.find(e.endorser);
        if (!ident || ident->role != Role::endorsing_peer || ident->org != e.endorser_org) continue;
        if (!ca.verify(e.endorser, endorsement_message(e.tx_id, e.result_hash), e.sig)) continue;
        per_org[ident->org].insert(ident->id);
    }
    for (const auto& org : policy.required_orgs) {
        auto it = per_org.find(org);
        if (it == per_org.end() || it->second.size() < policy.threshold) return false;
    }
    return true;
}

} // namespace rcchain::ledger
