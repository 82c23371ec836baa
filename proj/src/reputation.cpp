#include "rcchain/reputation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace rcchain::reputation {

namespace {

void require_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(std::string("TpfsParams: ") + name + " must lie in [0, 1]");
    }
}

void require_score(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string(what) + " outside [0, 1]");
    }
}

} // namespace

void TpfsParams::validate() const {
    require_unit(t_low, "t_low");
    require_unit(t_high, "t_high");
    require_unit(t_service, "t_service");
    require_unit(t_revoke, "t_revoke");
    require_unit(q_select, "q_select");
    require_unit(gamma, "gamma");
    require_unit(eta, "eta");
    require_unit(theta, "theta");
    if (!(t_low < t_high)) throw std::invalid_argument("TpfsParams: t_low must be below t_high");
    if (!(t_revoke <= t_service)) {
        throw std::invalid_argument("TpfsParams: t_revoke must not exceed t_service");
    }
    if (!(simf_floor > 0.0 && simf_floor <= 1.0)) {
        throw std::invalid_argument("TpfsParams: simf_floor must lie in (0, 1]");
    }
    if (!(decay_per_minute > 0.0 && decay_per_minute <= 1.0)) {
        throw std::invalid_argument("TpfsParams: decay_per_minute must lie in (0, 1]");
    }
    if (!(negative_penalty >= 1.0)) {
        throw std::invalid_argument("TpfsParams: negative_penalty must be >= 1");
    }
}

const char* to_string(Status s) {
    switch (s) {
    case Status::normal: return "normal";
    case Status::warning: return "warning";
    case Status::revoked: return "revoked";
    }
    return "unknown";
}

const char* to_string(ReputationMode m) {
    switch (m) {
    case ReputationMode::tpfs: return "TPFS";
    case ReputationMode::tp_only: return "TP_only";
    case ReputationMode::twsl_like: return "TWSL_like";
    }
    return "unknown";
}

std::optional<ReputationMode> parse_mode(std::string_view s) {
    if (s == "TPFS") return ReputationMode::tpfs;
    if (s == "TP_only") return ReputationMode::tp_only;
    if (s == "TWSL_like") return ReputationMode::twsl_like;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ReputationLedger

ReputationLedger::ReputationLedger(double decay_per_minute, double negative_penalty)
    : decay_(decay_per_minute), penalty_(negative_penalty) {
    if (!(decay_ > 0.0 && decay_ <= 1.0)) {
        throw std::invalid_argument("ReputationLedger: decay must lie in (0, 1]");
    }
    if (!(penalty_ >= 1.0)) throw std::invalid_argument("ReputationLedger: penalty must be >= 1");
}

void ReputationLedger::register_vehicle(const VehicleId& v) {
    status_.try_emplace(v, Status::normal);
    trades_.try_emplace(v, 0);
}

double ReputationLedger::record_rating(const RatingEvent& event, double now) {
    if (event.rater == event.ratee) {
        throw std::invalid_argument("record_rating: a vehicle cannot rate itself");
    }
    if (!(event.timestamp >= 0.0)) throw std::invalid_argument("record_rating: negative timestamp");
    if (event.timestamp > now) {
        throw std::invalid_argument("record_rating: event timestamp is after `now`");
    }
    const Pair key{event.rater, event.ratee};
    auto& history = pair_events_[key];
    if (!history.empty() && ratings_[history.back()].timestamp > event.timestamp) {
        throw std::invalid_argument("record_rating: timestamps must be non-decreasing per pair");
    }

    register_vehicle(event.rater);
    register_vehicle(event.ratee);

    history.push_back(ratings_.size());
    ratings_.push_back(event);

    auto& prof = profiles_[key];
    if (event.sign == RatingSign::positive) {
        ++prof.alpha;
    } else {
        ++prof.beta;
    }

    const double score = score_at(key, now);
    direct_[key] = score;
    return score;
}

double ReputationLedger::score_at(const Pair& key, double now) const {
    auto it = pair_events_.find(key);
    if (it == pair_events_.end()) return 0.5;
    const double log_decay = std::log(decay_);
    double pos = 0.0;
    double neg = 0.0;
    for (std::size_t idx : it->second) {
        const RatingEvent& e = ratings_[idx];
        if (e.timestamp > now) break;
        const double w = std::exp((now - e.timestamp) * log_decay);
        if (e.sign == RatingSign::positive) {
            pos += w;
        } else {
            neg += w;
        }
    }
    return (pos + 1.0) / (pos + penalty_ * neg + 2.0);
}

double ReputationLedger::direct(const VehicleId& i, const VehicleId& j) const {
    auto it = direct_.find(Pair{i, j});
    return it == direct_.end() ? 0.5 : it->second;
}

double ReputationLedger::direct_at(const VehicleId& i, const VehicleId& j, double now) const {
    return score_at(Pair{i, j}, now);
}

bool ReputationLedger::has_direct_interaction(const VehicleId& i, const VehicleId& j) const {
    return pair_events_.contains(Pair{i, j});
}

FeedbackProfile ReputationLedger::profile(const VehicleId& rater, const VehicleId& ratee) const {
    auto it = profiles_.find(Pair{rater, ratee});
    return it == profiles_.end() ? FeedbackProfile{} : it->second;
}

std::vector<VehicleId> ReputationLedger::rated_by(const VehicleId& rater) const {
    std::vector<VehicleId> out;
    for (auto it = pair_events_.lower_bound(Pair{rater, VehicleId{}});
         it != pair_events_.end() && it->first.first == rater; ++it) {
        out.push_back(it->first.second);
    }
    return out;
}

std::vector<VehicleId> ReputationLedger::raters_of(const VehicleId& ratee) const {
    std::vector<VehicleId> out;
    for (const auto& [key, idx] : pair_events_) {
        if (key.second == ratee) out.push_back(key.first);
    }
    return out;
}

Status ReputationLedger::status(const VehicleId& v) const {
    auto it = status_.find(v);
    return it == status_.end() ? Status::normal : it->second;
}

Status ReputationLedger::classify(const VehicleId& v, double rfin, const TpfsParams& params) {
    require_score(rfin, "classify_status: rfin");
    auto& st = status_[v];
    trades_.try_emplace(v, 0);
    if (st == Status::revoked) return st;
    if (rfin < params.t_revoke) {
        st = Status::revoked;
    } else if (rfin < params.t_service) {
        st = Status::warning;
    } else {
        st = Status::normal;
    }
    return st;
}

std::uint64_t ReputationLedger::trade_count(const VehicleId& v) const {
    auto it = trades_.find(v);
    return it == trades_.end() ? 0 : it->second;
}

void ReputationLedger::add_trade(const VehicleId& v) {
    register_vehicle(v);
    ++trades_[v];
}

std::vector<VehicleId> ReputationLedger::vehicles() const {
    std::vector<VehicleId> out;
    out.reserve(status_.size());
    for (const auto& [id, st] : status_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// Trust propagation

double recommended_confidence(double r_ij, const TpfsParams& params) {
    require_score(r_ij, "recommended_confidence: r_ij");
    if (r_ij < params.t_low) return 0.0;
    if (r_ij > params.t_high) return 1.0;
    return 0.8;
}

std::optional<IndirectBreakdown> indirect_breakdown(std::span<const Opinion> opinions,
                                                    const TpfsParams& params,
                                                    bool unit_confidence) {
    if (opinions.empty()) return std::nullopt;
    IndirectBreakdown out;
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    for (const Opinion& op : opinions) {
        require_score(op.r_ij, "indirect_reputation: r_ij");
        require_score(op.r_jf, "indirect_reputation: r_jf");
        const double conf = unit_confidence ? 1.0 : recommended_confidence(op.r_ij, params);
        const double term = conf * op.r_ij * op.r_jf;
        if (op.r_jf > params.t_low) {
            ++out.positive;
            pos_sum += term;
        } else {
            ++out.negative;
            neg_sum += term;
        }
    }
    const double total = static_cast<double>(out.positive + out.negative);
    if (out.positive > 0) out.p = pos_sum / static_cast<double>(out.positive);
    if (out.negative > 0) out.n = neg_sum / static_cast<double>(out.negative);
    out.c = static_cast<double>(out.positive) / total;
    out.d = static_cast<double>(out.negative) / total;
    out.value = std::clamp(out.c * out.p - out.d * out.n, 0.0, 1.0);
    return out;
}

std::optional<double> indirect_reputation(std::span<const Opinion> opinions,
                                          const TpfsParams& params, bool unit_confidence) {
    auto b = indirect_breakdown(opinions, params, unit_confidence);
    if (!b) return std::nullopt;
    return b->value;
}

// ---------------------------------------------------------------------------
// Feedback similarity

std::optional<double> feedback_score(const FeedbackProfile& profile) {
    const std::uint64_t total = profile.alpha + profile.beta;
    if (total == 0) return std::nullopt;
    const double a = static_cast<double>(profile.alpha);
    const double b = static_cast<double>(profile.beta);
    const double n = static_cast<double>(total);
    const double f1 = a / n;
    const double f2 = b / n;
    return (f1 * a - f2 * b) / n;
}

double similarity_from_scores(std::span<const double> fi, std::span<const double> fj,
                              std::span<const double> weights, double floor) {
    if (fi.size() != fj.size() || fi.size() != weights.size()) {
        throw std::invalid_argument("similarity_from_scores: size mismatch");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < fi.size(); ++k) {
        const double diff = fi[k] - fj[k];
        acc += weights[k] * diff * diff;
    }
    return std::clamp(1.0 - std::sqrt(acc), floor, 1.0);
}

namespace {

double population_stddev(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

} // namespace

std::optional<SimilarityDetail> similarity_detail(const VehicleId& i, const VehicleId& j,
                                                  const ReputationLedger& ledger,
                                                  SimilarityWeighting weighting,
                                                  const TpfsParams& params) {
    const auto by_i = ledger.rated_by(i);
    const auto by_j = ledger.rated_by(j);
    SimilarityDetail out;
    std::set_intersection(by_i.begin(), by_i.end(), by_j.begin(), by_j.end(),
                          std::back_inserter(out.common));
    if (out.common.empty()) return std::nullopt;

    std::vector<double> fi;
    std::vector<double> fj;
    fi.reserve(out.common.size());
    fj.reserve(out.common.size());
    for (const VehicleId& q : out.common) {
        fi.push_back(*feedback_score(ledger.profile(i, q)));
        fj.push_back(*feedback_score(ledger.profile(j, q)));
    }

    const double n = static_cast<double>(out.common.size());
    out.weights.assign(out.common.size(), 1.0 / n);
    if (weighting == SimilarityWeighting::deviation) {
        std::vector<double> raw;
        raw.reserve(out.common.size());
        double sum = 0.0;
        for (const VehicleId& q : out.common) {
            std::vector<double> received;
            for (const VehicleId& v : ledger.raters_of(q)) {
                received.push_back(*feedback_score(ledger.profile(v, q)));
            }
            raw.push_back(population_stddev(received));
            sum += raw.back();
        }
        // All-zero spread carries no weighting information; keep uniform.
        if (sum > 0.0) {
            for (std::size_t k = 0; k < raw.size(); ++k) out.weights[k] = raw[k] / sum;
        }
    }
    out.value = similarity_from_scores(fi, fj, out.weights, params.simf_floor);
    return out;
}

std::optional<double> feedback_similarity(const VehicleId& i, const VehicleId& j,
                                          const ReputationLedger& ledger,
                                          SimilarityWeighting weighting,
                                          const TpfsParams& params) {
    auto d = similarity_detail(i, j, ledger, weighting, params);
    if (!d) return std::nullopt;
    return d->value;
}

double local_confidence(double simf, const TpfsParams& params) {
    if (!(simf >= params.simf_floor && simf <= 1.0)) {
        throw std::domain_error("local_confidence: simf outside [simf_floor, 1]");
    }
    return std::exp(1.0 - 1.0 / simf);
}

// ---------------------------------------------------------------------------
// Final reputation

double combine_final(bool interacted, double direct, std::optional<double> indirect,
                     double confidence, const TpfsParams& params) {
    const double r = confidence;
    if (!interacted && !indirect) return r * params.gamma;
    if (!interacted) return r * params.eta + (1.0 - r) * *indirect;
    if (!indirect) return r * direct;
    return r * direct + (1.0 - r) * *indirect;
}

FinalReputation final_reputation_detail(const VehicleId& i, const VehicleId& f,
                                        const ReputationLedger& ledger,
                                        std::span<const Opinion> opinions,
                                        const TpfsParams& params, const EvalOptions& options) {
    FinalReputation out;
    const bool interacted = ledger.has_direct_interaction(i, f);
    out.direct = options.now ? ledger.direct_at(i, f, *options.now) : ledger.direct(i, f);
    out.indirect = indirect_reputation(opinions, params,
                                       options.mode == ReputationMode::twsl_like);
    out.situation = interacted ? (out.indirect ? 4 : 3) : (out.indirect ? 2 : 1);

    out.confidence = params.theta;
    if (options.mode == ReputationMode::tpfs) {
        out.similarity = feedback_similarity(i, f, ledger, options.weighting, params);
        if (out.similarity) out.confidence = local_confidence(*out.similarity, params);
    }
    out.value = std::clamp(combine_final(interacted, out.direct, out.indirect, out.confidence, params),
                           0.0, 1.0);
    return out;
}

double final_reputation(const VehicleId& i, const VehicleId& f, const ReputationLedger& ledger,
                        std::span<const Opinion> opinions, const TpfsParams& params,
                        const EvalOptions& options) {
    return final_reputation_detail(i, f, ledger, opinions, params, options).value;
}

std::vector<Opinion> gather_opinions(const VehicleId& evaluator, const VehicleId& subject,
                                     std::span<const VehicleId> recommenders,
                                     const ReputationLedger& ledger, std::optional<double> now) {
    std::vector<Opinion> out;
    for (const VehicleId& k : recommenders) {
        if (k == evaluator || k == subject) continue;
        if (!ledger.has_direct_interaction(k, subject)) continue;
        Opinion op;
        op.recommender = k;
        op.subject = subject;
        op.r_ij = now ? ledger.direct_at(evaluator, k, *now) : ledger.direct(evaluator, k);
        op.r_jf = now ? ledger.direct_at(k, subject, *now) : ledger.direct(k, subject);
        out.push_back(std::move(op));
    }
    return out;
}

Status classify_status(const VehicleId& vehicle, double rfin, ReputationLedger& ledger,
                       const TpfsParams& params) {
    return ledger.classify(vehicle, rfin, params);
}

// ---------------------------------------------------------------------------
// Server selection


namespace {

const ServerCandidate& best_of(const std::vector<const ServerCandidate*>& group, Rng& rng) {
    double best = -1.0;
    for (const auto* c : group) best = std::max(best, c->rfin);
    std::vector<const ServerCandidate*> top;
    for (const auto* c : group) {
        if (c->rfin == best) top.push_back(c);
    }
    return top.size() == 1 ? *top.front() : *top[rng.index(top.size())];
}

} // namespace

std::optional<VehicleId> select_server_with_draw(std::span<const ServerCandidate> candidates,
                                                 const TpfsParams& params, double draw, Rng& rng) {
    std::vector<const ServerCandidate*> old_group;
    std::vector<const ServerCandidate*> new_group;
    for (const auto& c : candidates) {
        if (c.status == Status::revoked) continue;
        (c.trade_count >= params.t_trades ? old_group : new_group).push_back(&c);
    }
    if (old_group.empty() && new_group.empty()) return std::nullopt;

    const bool pick_old = draw < params.q_select;
    if ((pick_old && !old_group.empty()) || new_group.empty()) return best_of(old_group, rng).id;
    return new_group[rng.index(new_group.size())]->id;
}

std::optional<VehicleId> select_server(std::span<const ServerCandidate> candidates,
                                       const TpfsParams& params, Rng& rng) {
    std::vector<const ServerCandidate*> eligible;
    for (const auto& c : candidates) {
        if (c.status != Status::revoked) eligible.push_back(&c);
    }
    if (eligible.empty()) return std::nullopt;
    if (eligible.size() == 1) return eligible.front()->id;

    const bool all_low = std::all_of(eligible.begin(), eligible.end(), [&](const auto* c) {
        return c->rfin < params.t_service;
    });
    if (all_low) return eligible[rng.index(eligible.size())]->id;

    const double draw = rng.uniform();
    return select_server_with_draw(candidates, params, draw, rng);
}

} // namespace rcchain::reputation
