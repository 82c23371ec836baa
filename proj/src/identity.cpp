#include "rcchain/ledger/identity.hpp"

#include "rcchain/crypto.hpp"
#include "rcchain/reputation.hpp"

namespace rcchain::ledger {

const char* to_string(Role r) {
    switch (r) {
    case Role::client: return "client";
    case Role::endorsing_peer: return "endorsing_peer";
    case Role::committing_peer: return "committing_peer";
    case Role::leading_peer: return "leading_peer";
    case Role::orderer: return "orderer";
    case Role::ca: return "ca";
    }
    return "unknown";
}

CertificateAuthority::CertificateAuthority(std::uint64_t seed) : seed_(seed) {}

Identity CertificateAuthority::register_identity(const std::string& org, Role role,
                                                 const std::string& registration_info) {
    if (registration_info.empty()) throw RegistrationError("empty registration info");
    if (revoked_.contains(registration_info))
        throw RegistrationError("identity was revoked: " + registration_info);
    if (identities_.contains(registration_info))
        throw RegistrationError("already registered: " + registration_info);

    const auto tag = crypto::sha256("key|" + std::to_string(seed_) + "|" + registration_info);
    Identity id{registration_info, org, role, crypto::to_hex(tag)};
    identities_.emplace(registration_info, id);
    return id;
}

Identity CertificateAuthority::register_identity(const std::string& org, Role role,
                                                 const std::string& registration_info,
                                                 reputation::ReputationLedger& reputation) {
    Identity id = register_identity(org, role, registration_info);
    reputation.register_vehicle(id.id);
    return id;
}

void CertificateAuthority::revoke(const std::string& id) {
    if (!identities_.contains(id)) throw RegistrationError("unknown identity: " + id);
    revoked_.insert(id);
}

std::optional<Identity> CertificateAuthority::find(const std::string& id) const {
    auto it = identities_.find(id);
    if (it == identities_.end()) return std::nullopt;
    return it->second;
}

std::string CertificateAuthority::sign(const std::string& signer_id,
                                       std::string_view message) const {
    auto it = identities_.find(signer_id);
    if (it == identities_.end()) throw RegistrationError("unknown signer: " + signer_id);
    if (revoked_.contains(signer_id)) throw RegistrationError("revoked signer: " + signer_id);
    return crypto::to_hex(crypto::hmac_sha256(it->second.key_tag, message));
}

bool CertificateAuthority::verify(const std::string& signer_id, std::string_view message,
                                  std::string_view signature) const {
    auto it = identities_.find(signer_id);
    if (it == identities_.end()) return false;
    return crypto::to_hex(crypto::hmac_sha256(it->second.key_tag, message)) == signature;
}

} // namespace rcchain::ledger
