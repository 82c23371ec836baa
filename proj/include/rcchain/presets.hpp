// Canned experiments. Each returns its output tables plus named pass/fail
// checks of the shape it is expected to show.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcchain/pipeline_des.hpp"
#include "rcchain/queueing.hpp"
#include "rcchain/reputation.hpp"
#include "rcchain/table.hpp"

namespace rcchain::presets {

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct PresetResult {
    std::string name;
    std::map<std::string, io::Table> tables; // file stem -> table
    std::vector<Check> checks;

    bool passed() const;
    io::Table checks_table() const;
};

inline constexpr std::uint64_t default_seed = 7;

const std::vector<std::string>& preset_names();

struct TimelineSeries {
    std::map<reputation::ReputationMode, std::vector<double>> rfin; // index = minute - 1
};

// Pair (i, j) interacts once per minute for 100 minutes: real messages up to
// minute 50, fake ones in 51-80, silence in 81-100. Rfin(i -> j) is sampled
// every minute in all three modes. Fully scripted, so there is no seed.
PresetResult reputation_timeline(TimelineSeries* series = nullptr);

struct SweepSeries {
    std::vector<int> truthful_pct;
    std::map<reputation::ReputationMode, std::vector<double>> rfin;
};

// 30 recommenders, no direct i-j interaction, truthful share 0..100 %.
// Fully scripted.
PresetResult neighbor_sweep(SweepSeries* series = nullptr);

struct FieldSeries {
    std::vector<std::string> servers; // servers[0] is the P-type vehicle
    std::map<reputation::ReputationMode, std::vector<double>> rfin;
};

// 15 servers, the first of which turns malicious mid-run; 100 rounds.
PresetResult ptype_field(std::uint64_t seed = default_seed, FieldSeries* series = nullptr);

struct QueueingValidationOptions {
    double lambda0 = 40.0;
    std::size_t batch_size = 10;
    std::size_t transactions = 1'000'000;
    std::uint64_t seed = default_seed;
    queueing::OrdererMode orderer_mode = queueing::OrdererMode::block_granularity;
};

// DES against closed form at one operating point, plus the M = 100
// comparison run. Throws queueing::InstabilityError when unstable.
PresetResult queueing_validation(const QueueingValidationOptions& opts = {});

// Dispatch by CLI name; nullopt for unknown names.
std::optional<PresetResult> run_preset(const std::string& name, std::uint64_t seed,
                                       const QueueingValidationOptions& qopts = {});

} // namespace rcchain::presets
