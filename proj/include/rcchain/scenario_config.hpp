// Scenario description and its strict JSON form. Unknown keys anywhere in
// the document are errors, as are references to undeclared ids.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcchain/ledger/ordering.hpp"
#include "rcchain/ledger/transaction.hpp"
#include "rcchain/reputation.hpp"

namespace rcchain::scenario {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BehaviorKind { honest, malicious, p_type, untruthful_rater };

const char* to_string(BehaviorKind k);

struct BehaviorProfile {
    BehaviorKind kind = BehaviorKind::honest;
    double switch_at = 0.0; // minutes, p_type only
    double fake_rate = 0.0;

    // Whether a message produced at `minute` is fake, given a uniform draw.
    bool fakes(double minute, double draw) const;
    // Whether a rating given at this point is inverted, given a uniform draw.
    bool inverts_rating(double draw) const;
};

struct VehicleSpec {
    std::string id;
    std::string org;
    std::string area;
    bool requester = true;
    bool server = true;
    BehaviorProfile profile;
};

struct RsuSpec {
    std::string id;
    std::string org;
    std::string area;
};

struct OrgSpec {
    std::string name;
    unsigned endorsing_peers = 2;
    unsigned committing_peers = 1;
};

struct Window {
    double from_s = 0.0;
    double to_s = 0.0;
    bool contains(double t) const { return t >= from_s && t < to_s; }
};

struct PeerOutage {
    std::string peer;
    Window window;
};

struct OrdererOutage {
    unsigned orderer = 0;
    Window window;
};

enum class MissionKind { qa, data_share };

const char* to_string(MissionKind k);

struct ScriptedMission {
    double at_min = 0.0;
    std::string requester;
    MissionKind kind = MissionKind::qa;
};

struct MissionArrivals {
    double rate_per_min = 0.0; // Poisson, per requester vehicle
    double data_share_fraction = 0.0;
    std::vector<ScriptedMission> script;
};

struct Timing {
    double endorse_latency_s = 0.05;
    double commit_latency_s = 0.05;
    double offer_window_s = 1.0;
    double service_time_s = 2.0;
    double resubmit_delay_s = 1.0;
    unsigned max_resubmits = 3;
};

struct ScenarioConfig {
    double duration_min = 10.0;
    std::uint64_t seed = 0;
    reputation::TpfsParams tpfs;
    reputation::ReputationMode mode = reputation::ReputationMode::tpfs;
    reputation::SimilarityWeighting weighting = reputation::SimilarityWeighting::uniform;
    ledger::OrderingConfig ordering;
    std::vector<OrdererOutage> orderer_outages;
    ledger::EndorsementPolicy policy;
    std::vector<OrgSpec> organizations;
    std::vector<RsuSpec> rsus;
    std::vector<VehicleSpec> vehicles;
    MissionArrivals missions;
    Timing timing;
    std::vector<PeerOutage> endorser_outages;
    std::vector<PeerOutage> committer_outages;

    void validate() const; // ConfigError
};

std::string endorsing_peer_id(const std::string& org, unsigned k);
std::string committing_peer_id(const std::string& org, unsigned k);

// `seed` is mandatory in the document.
ScenarioConfig parse_scenario_config(const std::string& json_text);
ScenarioConfig load_scenario_config(const std::string& path);
std::string to_json(const ScenarioConfig& cfg);

} // namespace rcchain::scenario
