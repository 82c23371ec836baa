// Hash-chained blocks, MVCC commit, audit and peer catch-up.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcchain/crypto.hpp"
#include "rcchain/ledger/transaction.hpp"

namespace rcchain::ledger {

enum class ValidationCode { valid, bad_structure, bad_signature, policy, duplicate, mvcc_conflict };

const char* to_string(ValidationCode c);
std::optional<ValidationCode> parse_validation_code(std::string_view s);

struct Block {
    std::uint64_t number = 0;
    crypto::Digest prev_hash{};
    crypto::Digest body_hash{};
    std::vector<EndorsedTransaction> txs;
    std::vector<ValidationCode> flags; // filled at commit, not covered by the header

    bool operator==(const Block&) const = default;
};

crypto::Digest body_hash(const std::vector<std::string>& tx_ids);
crypto::Digest body_hash(const std::vector<EndorsedTransaction>& txs);
crypto::Digest header_hash(std::uint64_t number, const crypto::Digest& prev,
                           const crypto::Digest& body);
crypto::Digest header_hash(const Block& b);

Block make_block(std::uint64_t number, const crypto::Digest& prev,
                 std::vector<EndorsedTransaction> txs);

// Header hash of block 0, the link every chain starts from.
crypto::Digest genesis_hash();

struct TxLogEntry {
    std::uint64_t block = 0;
    EndorsedTransaction tx;
    ValidationCode code = ValidationCode::valid;

    bool operator==(const TxLogEntry&) const = default;
};

class BlockRejected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommitReport {
    std::uint64_t block = 0;
    std::vector<ValidationCode> codes;

    std::size_t valid_count() const;
};

class ChainLedger;

// Validates every transaction in order and appends the block. Throws
// BlockRejected when number or prev_hash do not extend the tip.
CommitReport validate_and_commit(Block block, ChainLedger& ledger,
                                 const EndorsementPolicy& policy, const CertificateAuthority& ca);

class ChainLedger {
public:
    ChainLedger(); // genesis block 0, no transactions, zero prev_hash

    const std::vector<Block>& blocks() const { return blocks_; }
    const WorldState& world_state() const { return state_; }
    const std::vector<TxLogEntry>& tx_log() const { return log_; }

    std::uint64_t tip_number() const { return blocks_.back().number; }
    crypto::Digest tip_hash() const { return header_hash(blocks_.back()); }
    bool committed(const std::string& tx_id) const { return committed_.contains(tx_id); }

    bool operator==(const ChainLedger&) const = default;

    // Test hook for tamper scenarios.
    std::vector<Block>& mutable_blocks() { return blocks_; }

private:
    friend CommitReport validate_and_commit(Block, ChainLedger&, const EndorsementPolicy&,
                                            const CertificateAuthority&);

    std::vector<Block> blocks_;
    WorldState state_;
    std::vector<TxLogEntry> log_;
    std::set<std::string> committed_;
};


struct VerifyResult {
    bool ok = true;
    std::optional<std::uint64_t> first_bad_block;
    std::string reason;
};

// Full audit: links, body hashes, tx ids, signatures, policy, and a replay
// from genesis that must reproduce validity flags, world state and tx log.
VerifyResult verify_chain(const ChainLedger& ledger, const EndorsementPolicy& policy,
                          const CertificateAuthority& ca);

// World state rebuilt from the valid entries of the tx log alone.
WorldState replay_world_state(const std::vector<TxLogEntry>& log);

// Replays the blocks `lagging` is missing. Throws IntegrityError if the
// source fails verification or the shared prefix differs.
void sync_peer(ChainLedger& lagging, const ChainLedger& source, const EndorsementPolicy& policy,
               const CertificateAuthority& ca);

} // namespace rcchain::ledger
