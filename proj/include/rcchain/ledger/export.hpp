// Canonical JSON export of the chain and world state, and an audit of the
// exported form.

#pragma once

#include <istream>
#include <string>

#include "rcchain/ledger/chain.hpp"

namespace rcchain::ledger {

// One JSON object per line, in block order, keys sorted.
std::string export_chain(const ChainLedger& ledger);
std::string export_world_state(const WorldState& state);

class ExportParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Checks numbering, hash links and body hashes of an export. Throws
// ExportParseError if a line is not a well-formed record.
VerifyResult verify_export(std::istream& in);

} // namespace rcchain::ledger
