// Simulated PKI: the CA issues identities with an opaque signing tag, and
// signatures are HMAC-SHA-256 tags keyed by it.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcchain::reputation {
class ReputationLedger;
}

namespace rcchain::ledger {

enum class Role { client, endorsing_peer, committing_peer, leading_peer, orderer, ca };

const char* to_string(Role r);

struct Identity {
    std::string id;
    std::string org;
    Role role = Role::client;
    std::string key_tag;

    bool operator==(const Identity&) const = default;
};

class RegistrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CertificateAuthority {
public:
    explicit CertificateAuthority(std::uint64_t seed = 0);

    // Identity ids equal the registration info (plate number, peer name, ...).
    Identity register_identity(const std::string& org, Role role,
                               const std::string& registration_info);
    // Also enters the vehicle into the reputation ledger at the initial 0.5.
    Identity register_identity(const std::string& org, Role role,
                               const std::string& registration_info,
                               reputation::ReputationLedger& reputation);

    void revoke(const std::string& id);
    bool is_revoked(const std::string& id) const { return revoked_.contains(id); }

    std::optional<Identity> find(const std::string& id) const;

    // Throws RegistrationError for unknown or revoked signers.
    std::string sign(const std::string& signer_id, std::string_view message) const;
    // Checks the tag only. Revocation does not invalidate past signatures, so
    // historical blocks still verify after a signer is revoked.
    bool verify(const std::string& signer_id, std::string_view message,
                std::string_view signature) const;

    std::size_t size() const { return identities_.size(); }

private:
    std::uint64_t seed_;
    std::map<std::string, Identity> identities_;
    std::set<std::string> revoked_;
};

} // namespace rcchain::ledger
