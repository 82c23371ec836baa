// TPFS reputation model: trust propagation over neighbor recommendations,
// feedback-similarity confidence, and the four-case final reputation.
//
// Everything here is a pure function of its inputs except ReputationLedger,
// which owns the append-only rating history and the derived per-pair state.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rcchain/random.hpp"

namespace rcchain::reputation {

struct VehicleId {
    std::string value;

    VehicleId() = default;
    VehicleId(std::string v) : value(std::move(v)) {}
    VehicleId(const char* v) : value(v) {}

    auto operator<=>(const VehicleId&) const = default;
};

struct TpfsParams {
    double t_low = 0.4;     // below: recommender unreliable (C = 0)
    double t_high = 0.8;    // above: recommender reliable (C = 1)
    double t_service = 0.4; // below: server marked with a warning
    double t_revoke = 0.2;  // below: identity revoked, permanently
    std::uint64_t t_trades = 5; // old/new server split by trade count
    double q_select = 0.7;  // probability of picking from the old group
    double gamma = 0.2;     // local reputation, no interaction and no recommendation
    double eta = 0.2;       // local reputation, recommendations only
    double theta = 0.7;     // local confidence when no common raters exist
    double simf_floor = 1e-6;
    double decay_per_minute = 0.98;
    double negative_penalty = 2.0;

    // Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

enum class RatingSign { positive, negative };

struct RatingEvent {
    VehicleId rater;
    VehicleId ratee;
    RatingSign sign = RatingSign::positive;
    double timestamp = 0.0; // minutes since scenario start

    bool operator==(const RatingEvent&) const = default;
};

enum class Status { normal, warning, revoked };

struct Opinion {
    VehicleId recommender;
    VehicleId subject;
    double r_ij = 0.5; // evaluator's direct reputation of the recommender
    double r_jf = 0.5; // recommender's reported reputation of the subject
};

struct FeedbackProfile {
    std::uint64_t alpha = 0;
    std::uint64_t beta = 0;

    bool operator==(const FeedbackProfile&) const = default;
};

enum class ReputationMode { tpfs, tp_only, twsl_like };
enum class SimilarityWeighting { uniform, deviation };

const char* to_string(Status s);
const char* to_string(ReputationMode m);
std::optional<ReputationMode> parse_mode(std::string_view s);

// Per-pair rating history plus the state derived from it. Direct scores use a
// beta estimator with exponential decay and a heavier weight on negatives:
//   R = (a + 1) / (a + k*b + 2),  a, b = decayed positive / negative counts.
class ReputationLedger {
public:
    explicit ReputationLedger(double decay_per_minute = 0.98, double negative_penalty = 2.0);
    explicit ReputationLedger(const TpfsParams& params)
        : ReputationLedger(params.decay_per_minute, params.negative_penalty) {}

    void register_vehicle(const VehicleId& v);
    bool is_registered(const VehicleId& v) const { return status_.contains(v); }

    // Appends the event and returns the refreshed direct score of
    // (rater -> ratee) evaluated at `now`. Throws std::invalid_argument on
    // self-ratings, timestamps after `now`, or out-of-order pair timestamps.
    double record_rating(const RatingEvent& event, double now);

    // Direct score as last recorded (0.5 when the pair has no history).
    double direct(const VehicleId& i, const VehicleId& j) const;
    // Direct score decayed to `now`.
    double direct_at(const VehicleId& i, const VehicleId& j, double now) const;

    bool has_direct_interaction(const VehicleId& i, const VehicleId& j) const;
    FeedbackProfile profile(const VehicleId& rater, const VehicleId& ratee) const;

    std::vector<VehicleId> rated_by(const VehicleId& rater) const;
    std::vector<VehicleId> raters_of(const VehicleId& ratee) const;

    Status status(const VehicleId& v) const;
    // Applies the threshold rule to `rfin`; revoked is absorbing.
    Status classify(const VehicleId& v, double rfin, const TpfsParams& params);

    std::uint64_t trade_count(const VehicleId& v) const;
    void add_trade(const VehicleId& v);

    const std::vector<RatingEvent>& ratings() const { return ratings_; }
    std::vector<VehicleId> vehicles() const;

    bool operator==(const ReputationLedger&) const = default;

private:
    using Pair = std::pair<VehicleId, VehicleId>;

    double score_at(const Pair& key, double now) const;

    double decay_;
    double penalty_;
    std::vector<RatingEvent> ratings_;
    std::map<Pair, std::vector<std::size_t>> pair_events_;
    std::map<Pair, double> direct_;
    std::map<Pair, FeedbackProfile> profiles_;
    std::map<VehicleId, std::uint64_t> trades_;
    std::map<VehicleId, Status> status_;
};

// Recommended confidence of the evaluator in a recommender: 0, 0.8 or 1.
// The closed middle band [t_low, t_high] maps to 0.8.
double recommended_confidence(double r_ij, const TpfsParams& params);

struct IndirectBreakdown {
    std::size_t positive = 0; // a
    std::size_t negative = 0; // b
    double p = 0.0;
    double n = 0.0;
    double c = 0.0;
    double d = 0.0;
    double value = 0.0; // clamp(c*P - d*N, 0, 1)
};

// nullopt when there are no opinions. `unit_confidence` forces every C to 1.
std::optional<IndirectBreakdown> indirect_breakdown(std::span<const Opinion> opinions,
                                                    const TpfsParams& params,
                                                    bool unit_confidence = false);
std::optional<double> indirect_reputation(std::span<const Opinion> opinions,
                                          const TpfsParams& params,
                                          bool unit_confidence = false);

// F = (a^2 - b^2) / (a + b)^2; nullopt without any rating.
std::optional<double> feedback_score(const FeedbackProfile& profile);

// Weighted dispersion similarity clamped to [floor, 1]. Inputs are aligned
// per common rated vehicle; weights must be nonnegative and sum to 1.
double similarity_from_scores(std::span<const double> fi, std::span<const double> fj,
                              std::span<const double> weights, double floor);

struct SimilarityDetail {
    std::vector<VehicleId> common;
    std::vector<double> weights;
    double value = 1.0;
};

// nullopt when i and j have rated no vehicle in common.
std::optional<SimilarityDetail> similarity_detail(const VehicleId& i, const VehicleId& j,
                                                  const ReputationLedger& ledger,
                                                  SimilarityWeighting weighting,
                                                  const TpfsParams& params);
std::optional<double> feedback_similarity(const VehicleId& i, const VehicleId& j,
                                          const ReputationLedger& ledger,
                                          SimilarityWeighting weighting,
                                          const TpfsParams& params);

// r = exp(1 - 1/simf). Throws std::domain_error outside [simf_floor, 1].
double local_confidence(double simf, const TpfsParams& params);

struct EvalOptions {
    ReputationMode mode = ReputationMode::tpfs;
    SimilarityWeighting weighting = SimilarityWeighting::uniform;
    std::optional<double> now; // evaluate direct scores decayed to this minute
};

struct FinalReputation {
    int situation = 1; // 1..4: (direct interaction, recommendations) combination
    double confidence = 0.0;
    std::optional<double> similarity;
    std::optional<double> indirect;
    double direct = 0.5;
    double value = 0.0;
};

// Case dispatch for the final score given already-evaluated ingredients.
double combine_final(bool interacted, double direct, std::optional<double> indirect,
                     double confidence, const TpfsParams& params);

FinalReputation final_reputation_detail(const VehicleId& i, const VehicleId& f,
                                        const ReputationLedger& ledger,
                                        std::span<const Opinion> opinions,
                                        const TpfsParams& params, const EvalOptions& options = {});
double final_reputation(const VehicleId& i, const VehicleId& f, const ReputationLedger& ledger,
                        std::span<const Opinion> opinions, const TpfsParams& params,
                        const EvalOptions& options = {});

// Honest opinions about `subject` from every recommender that has rated it.
std::vector<Opinion> gather_opinions(const VehicleId& evaluator, const VehicleId& subject,
                                     std::span<const VehicleId> recommenders,
                                     const ReputationLedger& ledger,
                                     std::optional<double> now = std::nullopt);

Status classify_status(const VehicleId& vehicle, double rfin, ReputationLedger& ledger,
                       const TpfsParams& params);

struct ServerCandidate {
    VehicleId id;
    double rfin = 0.0;
    std::uint64_t trade_count = 0;
    Status status = Status::normal;
};

// Old/new group selection. Revoked candidates are never returned; nullopt
// when no eligible candidate remains.
std::optional<VehicleId> select_server(std::span<const ServerCandidate> candidates,
                                       const TpfsParams& params, Rng& rng);

// Same rule with the group draw R supplied by the caller; `rng` only breaks
// ties and picks within the new group. The all-below-service fallback is
// applied by select_server before the draw.
std::optional<VehicleId> select_server_with_draw(std::span<const ServerCandidate> candidates,
                                                 const TpfsParams& params, double draw, Rng& rng);

} // namespace rcchain::reputation
