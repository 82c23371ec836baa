// Scenario engine: vehicles, RSUs and organizations driven through the
// request / offer / select / serve / feedback / reputation-update lifecycle,
// with every lifecycle step carried by a transaction through the simulated
// endorse-order-commit pipeline.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcchain/ledger/chain.hpp"
#include "rcchain/reputation.hpp"
#include "rcchain/scenario_config.hpp"
#include "rcchain/table.hpp"

namespace rcchain::scenario {

enum class Outcome { pending, completed_good, completed_bad, abandoned };

const char* to_string(Outcome o);

struct MissionRecord {
    std::uint64_t id = 0;
    MissionKind kind = MissionKind::qa;
    std::string requester;
    std::vector<std::string> candidates;
    std::optional<std::string> selected;
    std::optional<double> t_select; // seconds
    Outcome outcome = Outcome::pending;
    std::string note; // why a mission was abandoned
    double t_request = 0.0; // seconds
    std::optional<double> t_commit;
};

struct TxTiming {
    std::string tx_id;
    double t_arrive = 0.0;
    std::optional<double> t_endorsed;
    std::optional<double> t_ordered;
    std::optional<double> t_committed;
    bool valid = false;
};

struct ReputationSample {
    double time_min = 0.0;
    std::string rater;
    std::string ratee;
    double rfin = 0.0;
    reputation::Status status = reputation::Status::normal;
};

struct RunSummary {
    std::size_t missions_created = 0;
    std::size_t missions_completed = 0;
    std::size_t missions_abandoned = 0;
    std::size_t resubmissions = 0;
    std::size_t reputation_updates = 0;
    std::map<std::string, std::size_t> valid_tx_by_kind;
    std::size_t invalid_txs = 0;
    std::vector<std::string> revoked;
    std::map<std::string, double> revoked_at_s;
    bool replicas_consistent = true;
    bool traceable = true;
};

struct RunReport {
    reputation::ReputationMode mode = reputation::ReputationMode::tpfs;
    ledger::ChainLedger chain;
    reputation::ReputationLedger reputation;
    std::vector<MissionRecord> missions;
    std::vector<TxTiming> perf;
    std::vector<ReputationSample> trajectory;
    RunSummary summary;

    std::string ledger_export() const;
    std::string world_state_export() const;
    io::Table reputation_table() const;
    io::Table missions_table() const;
    io::Table perf_table() const;
    std::string summary_json() const;
};

// Throws ConfigError before any event runs when the config is invalid.
RunReport run_scenario(const ScenarioConfig& cfg);

// Opinions about `subject` as reported to `evaluator`: honest recommenders
// report their direct score, untruthful raters report its complement.
std::vector<reputation::Opinion> reported_opinions(
    const reputation::VehicleId& evaluator, const reputation::VehicleId& subject,
    std::span<const reputation::VehicleId> roster, const reputation::ReputationLedger& ledger,
    const std::map<reputation::VehicleId, BehaviorProfile>& profiles, double now_min);

// Rebuilds the reputation ledger from the valid reputation_update
// transactions on a chain, applying them exactly as the engine does.
reputation::ReputationLedger replay_reputation(const ScenarioConfig& cfg,
                                               const ledger::ChainLedger& chain);

} // namespace rcchain::scenario
