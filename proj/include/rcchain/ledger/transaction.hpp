// Proposals, simulated chaincode execution, endorsements and policies.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcchain/crypto.hpp"
#include "rcchain/ledger/identity.hpp"

namespace rcchain::ledger {

enum class TxKind {
    qa_request,
    service_offer,
    service_proposal,
    service_process,
    feedback,
    reputation_update,
    data_index,
};

const char* to_string(TxKind k);
std::optional<TxKind> parse_tx_kind(std::string_view s);

struct VersionedValue {
    std::string value;
    std::uint64_t version = 0;

    bool operator==(const VersionedValue&) const = default;
};

using WorldState = std::map<std::string, VersionedValue>;

struct ReadItem {
    std::string key;
    std::uint64_t version = 0;

    bool operator==(const ReadItem&) const = default;
};

struct WriteItem {
    std::string key;
    std::string value;

    bool operator==(const WriteItem&) const = default;
};

struct ReadWriteSet {
    std::vector<ReadItem> reads;
    std::vector<WriteItem> writes;

    bool operator==(const ReadWriteSet&) const = default;
};

struct TransactionProposal {
    std::string tx_id;
    TxKind kind = TxKind::qa_request;
    std::string creator;
    std::string payload;
    std::uint64_t nonce = 0;
    double created_at = 0.0;
    std::string client_sig;

    bool operator==(const TransactionProposal&) const = default;
};

// Canonical digest of everything a proposal commits to except its signature.
std::string compute_tx_id(TxKind kind, const std::string& creator, const std::string& payload,
                          std::uint64_t nonce, double created_at);

TransactionProposal make_proposal(const CertificateAuthority& ca, const std::string& creator,
                                  TxKind kind, std::string payload, std::uint64_t nonce,
                                  double created_at);

// Chaincode: each payload line "put <key> <value>" reads and writes the key,
// "get <key>" reads it; other lines are opaque data. Reads capture the
// current version (0 for absent keys).
ReadWriteSet simulate_execution(TxKind kind, std::string_view payload, const WorldState& state);

crypto::Digest result_hash(const ReadWriteSet& rw);

struct Endorsement {
    std::string tx_id;
    std::string endorser;
    std::string endorser_org;
    crypto::Digest result_hash{};
    std::string sig;

    bool operator==(const Endorsement&) const = default;
};

struct EndorsementPolicy {
    std::set<std::string> required_orgs;
    unsigned threshold = 1;

    bool operator==(const EndorsementPolicy&) const = default;
};

struct EndorsedTransaction {
    TransactionProposal proposal;
    ReadWriteSet rw;
    std::vector<Endorsement> endorsements;

    bool operator==(const EndorsedTransaction&) const = default;
};

struct EndorsingPeer {
    std::string id;
    bool reachable = true;
};

enum class EndorseStatus { ok, insufficient };

struct EndorseResult {
    EndorseStatus status = EndorseStatus::ok;
    EndorsedTransaction tx;
};

std::string endorsement_message(const std::string& tx_id, const crypto::Digest& result);

// Every reachable peer simulates the proposal against `state` and signs the
// result. Unreachable peers contribute nothing. `status` is insufficient when
// the collected endorsements fail the policy (resubmit).
EndorseResult endorse(const TransactionProposal& proposal, const EndorsementPolicy& policy,
                      std::span<const EndorsingPeer> peers, const WorldState& state,
                      const CertificateAuthority& ca);

// Counts distinct endorsers per required org among endorsements whose
// signature verifies, whose signer is an endorsing peer of that org and whose
// result hash matches `expected`.
bool check_policy(std::span<const Endorsement> endorsements, const EndorsementPolicy& policy,
                  const crypto::Digest& expected, const CertificateAuthority& ca);

} // namespace rcchain::ledger
