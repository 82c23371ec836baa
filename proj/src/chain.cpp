#include "rcchain/ledger/chain.hpp"

#include <algorithm>
#include <array>

namespace rcchain::ledger {

namespace {

constexpr std::array<std::pair<ValidationCode, const char*>, 6> code_names{{
    {ValidationCode::valid, "ok"},
    {ValidationCode::bad_structure, "bad_structure"},
    {ValidationCode::bad_signature, "bad_signature"},
    {ValidationCode::policy, "policy"},
    {ValidationCode::duplicate, "duplicate"},
    {ValidationCode::mvcc_conflict, "mvcc_conflict"},
}};

bool tx_id_matches(const TransactionProposal& p) {
    return p.tx_id == compute_tx_id(p.kind, p.creator, p.payload, p.nonce, p.created_at);
}

// Structural checks that do not depend on world state: numbering, link,
// body hash and per-tx id recomputation. Returns an empty string when fine.
std::string structural_fault(const Block& b, std::uint64_t expect_number,
                             const crypto::Digest& expect_prev) {
    if (b.number != expect_number) return "number";
    if (b.prev_hash != expect_prev) return "prev_hash";
    if (b.body_hash != body_hash(b.txs)) return "body_hash";
    for (const auto& tx : b.txs)
        if (!tx_id_matches(tx.proposal)) return "tx_id";
    return {};
}

} // namespace

const char* to_string(ValidationCode c) {
    for (const auto& [code, name] : code_names)
        if (code == c) return name;
    return "unknown";
}

std::optional<ValidationCode> parse_validation_code(std::string_view s) {
    for (const auto& [code, name] : code_names)
        if (s == name) return code;
    return std::nullopt;
}

crypto::Digest body_hash(const std::vector<std::string>& tx_ids) {
    std::string concat;
    for (const auto& id : tx_ids) concat += id;
    return crypto::sha256(concat);
}

crypto::Digest body_hash(const std::vector<EndorsedTransaction>& txs) {
    std::string concat;
    for (const auto& tx : txs) concat += tx.proposal.tx_id;
    return crypto::sha256(concat);
}

crypto::Digest header_hash(std::uint64_t number, const crypto::Digest& prev,
                           const crypto::Digest& body) {
    std::array<std::uint8_t, 8 + 32 + 32> buf{};
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<std::uint8_t>(number >> (56 - 8 * k));
    std::copy(prev.begin(), prev.end(), buf.begin() + 8);
    std::copy(body.begin(), body.end(), buf.begin() + 40);
    return crypto::sha256(buf);
}

crypto::Digest header_hash(const Block& b) {
    return header_hash(b.number, b.prev_hash, b.body_hash);
}

Block make_block(std::uint64_t number, const crypto::Digest& prev,
                 std::vector<EndorsedTransaction> txs) {
    Block b;
    b.number = number;
    b.prev_hash = prev;
    b.txs = std::move(txs);
    b.body_hash = body_hash(b.txs);
    return b;
}

crypto::Digest genesis_hash() { return header_hash(make_block(0, crypto::zero_digest, {})); }

ChainLedger::ChainLedger() {
    blocks_.push_back(make_block(0, crypto::zero_digest, {}));
}

std::size_t CommitReport::valid_count() const {
    return static_cast<std::size_t>(std::count(codes.begin(), codes.end(), ValidationCode::valid));
}

CommitReport validate_and_commit(Block block, ChainLedger& ledger,
                                 const EndorsementPolicy& policy, const CertificateAuthority& ca) {
    if (auto fault = structural_fault(block, ledger.tip_number() + 1, ledger.tip_hash());
        !fault.empty()) {
        throw BlockRejected("block " + std::to_string(block.number) + " rejected: " + fault);
    }

    CommitReport report{block.number, {}};
    block.flags.clear();
    for (const auto& tx : block.txs) {
        const auto& p = tx.proposal;
        ValidationCode code = ValidationCode::valid;
        const auto expected = result_hash(tx.rw);
        const bool endorsements_match =
            std::all_of(tx.endorsements.begin(), tx.endorsements.end(),
                        [&](const Endorsement& e) { return e.tx_id == p.tx_id; });

        if (!endorsements_match) {
            code = ValidationCode::bad_structure;
        } else if (!ca.verify(p.creator, p.tx_id, p.client_sig)) {
            code = ValidationCode::bad_signature;
        } else if (!check_policy(tx.endorsements, policy, expected, ca)) {
            code = ValidationCode::policy;
        } else if (ledger.committed_.contains(p.tx_id)) {
            code = ValidationCode::duplicate;
        } else {
            for (const auto& r : tx.rw.reads) {
                auto it = ledger.state_.find(r.key);
                const std::uint64_t current = it == ledger.state_.end() ? 0 : it->second.version;
                if (current != r.version) {
                    code = ValidationCode::mvcc_conflict;
                    break;
                }
            }
        }

        if (code == ValidationCode::valid) {
            for (const auto& w : tx.rw.writes) {
                auto& slot = ledger.state_[w.key];
                slot.value = w.value;
                ++slot.version;
            }
            ledger.committed_.insert(p.tx_id);
        }
        block.flags.push_back(code);
        report.codes.push_back(code);
        ledger.log_.push_back({block.number, tx, code});
    }
    ledger.blocks_.push_back(std::move(block));
    return report;
}

WorldState replay_world_state(const std::vector<TxLogEntry>& log) {
    WorldState state;
    for (const auto& e : log) {
        if (e.code != ValidationCode::valid) continue;
        for (const auto& w : e.tx.rw.writes) {
            auto& slot = state[w.key];
            slot.value = w.value;
            ++slot.version;
        }
    }
    return state;
}

VerifyResult verify_chain(const ChainLedger& ledger, const EndorsementPolicy& policy,
                          const CertificateAuthority& ca) {
    const auto& blocks = ledger.blocks();
    auto bad = [](std::uint64_t n, std::string why) {
        return VerifyResult{false, n, std::move(why)};
    };
    if (blocks.empty()) return {false, std::nullopt, "no genesis block"};
    if (auto f = structural_fault(blocks[0], 0, crypto::zero_digest); !f.empty() ||
                                                                        !blocks[0].txs.empty())
        return bad(0, "genesis");

    ChainLedger replay;
    for (std::size_t k = 1; k < blocks.size(); ++k) {
        const Block& b = blocks[k];
        if (auto f = structural_fault(b, k, header_hash(blocks[k - 1])); !f.empty())
            return bad(k, f);
        Block copy = b;
        copy.flags.clear();
        CommitReport rep = validate_and_commit(std::move(copy), replay, policy, ca);
        if (rep.codes != b.flags) return bad(k, "validity_flags");
    }
    if (replay.tx_log() != ledger.tx_log()) return {false, std::nullopt, "tx_log"};
    if (replay.world_state() != ledger.world_state()) return {false, std::nullopt, "world_state"};
    if (replay_world_state(ledger.tx_log()) != ledger.world_state())
        return {false, std::nullopt, "world_state"};
    return {true, std::nullopt, "ok"};
}

void sync_peer(ChainLedger& lagging, const ChainLedger& source, const EndorsementPolicy& policy,
               const CertificateAuthority& ca) {
    auto verdict = verify_chain(source, policy, ca);
    if (!verdict.ok) {
        throw IntegrityError("source ledger fails verification" +
                             (verdict.first_bad_block
                                  ? " at block " + std::to_string(*verdict.first_bad_block)
                                  : std::string{}) +
                             ": " + verdict.reason);
    }
    const auto& have = lagging.blocks();
    const auto& want = source.blocks();
    if (have.size() > want.size()) throw IntegrityError("lagging ledger is ahead of source");
    for (std::size_t k = 0; k < have.size(); ++k) {
        if (header_hash(have[k]) != header_hash(want[k]) || have[k].flags != want[k].flags)
            throw IntegrityError("divergent prefix at block " + std::to_string(k));
    }
    for (std::size_t k = have.size(); k < want.size(); ++k) {
        Block copy = want[k];
        copy.flags.clear();
        validate_and_commit(std::move(copy), lagging, policy, ca);
    }
    if (!(lagging == source)) throw IntegrityError("replayed ledger differs from source");
}

} // namespace rcchain::ledger
