#include "doctest.h"

#include <stdexcept>
#include <cmath>
#include <map>

#include "rcchain/random.hpp"
#include "rcchain/reputation.hpp"

using namespace rcchain;
using namespace rcchain::reputation;

namespace {

const TpfsParams P{};

// Independent re-derivation of the aggregation: positive opinions weighted by
// C*r_ij*r_jf averaged over the positive class, negatives likewise.
double oracle_rin(const std::vector<Opinion>& ops, bool unit_c) {
    double sp = 0, sn = 0;
    int a = 0, b = 0;
    for (const auto& o : ops) {
        double c = unit_c ? 1.0 : (o.r_ij < 0.4 ? 0.0 : (o.r_ij <= 0.8 ? 0.8 : 1.0));
        if (o.r_jf > 0.4) {
            sp += c * o.r_ij * o.r_jf;
            ++a;
        } else {
            sn += c * o.r_ij * o.r_jf;
            ++b;
        }
    }
    double p = a ? sp / a : 0, n = b ? sn / b : 0;
    double v = double(a) / (a + b) * p - double(b) / (a + b) * n;
    return std::clamp(v, 0.0, 1.0);
}

ReputationLedger rate(ReputationLedger l, const VehicleId& a, const VehicleId& b, int pos, int neg, double t = 0) {
    for (int k = 0; k < pos; ++k) l.record_rating({a, b, RatingSign::positive, t}, t);
    for (int k = 0; k < neg; ++k) l.record_rating({a, b, RatingSign::negative, t}, t);
    return l;
}

} // namespace

TEST_CASE("recommended confidence bands") {
    CHECK(recommended_confidence(0.3, P) == 0.0);
    CHECK(recommended_confidence(0.5, P) == 0.8);
    CHECK(recommended_confidence(0.9, P) == 1.0);
    CHECK(recommended_confidence(0.4, P) == 0.8);
    CHECK(recommended_confidence(0.8, P) == 0.8);
    CHECK_THROWS_AS(recommended_confidence(1.2, P), std::domain_error);
    CHECK_THROWS_AS(recommended_confidence(-0.1, P), std::domain_error);

    double prev = -1;
    for (int k = 0; k <= 1000; ++k) {
        double c = recommended_confidence(k / 1000.0, P);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("indirect reputation examples") {
    std::vector<Opinion> ops{{"j1", "f", 0.9, 0.7}, {"j2", "f", 0.5, 0.2}};
    auto bd = indirect_breakdown(ops, P);
    REQUIRE(bd);
    CHECK(bd->positive == 1);
    CHECK(bd->negative == 1);
    CHECK(bd->p == doctest::Approx(0.63).epsilon(1e-12));
    CHECK(bd->n == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(bd->c == 0.5);
    CHECK(bd->d == 0.5);
    CHECK(std::abs(bd->value - 0.275) < 1e-9);

    std::vector<Opinion> one{{"j", "f", 1.0, 1.0}};
    CHECK(*indirect_reputation(one, P) == doctest::Approx(1.0));

    std::vector<Opinion> neg{{"j1", "f", 0.9, 0.3}, {"j2", "f", 1.0, 0.35}};
    CHECK(*indirect_reputation(neg, P) == 0.0);

    CHECK_FALSE(indirect_reputation(std::vector<Opinion>{}, P).has_value());

    // r_jf exactly at t_low counts as negative
    std::vector<Opinion> edge{{"j", "f", 0.9, 0.4}};
    CHECK(indirect_breakdown(edge, P)->negative == 1);
}

TEST_CASE("indirect reputation agrees with oracle on random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Opinion> ops;
        int n = 1 + int(rng.index(12));
        for (int k = 0; k < n; ++k)
            ops.push_back({"j" + std::to_string(k), "f", rng.uniform(), rng.uniform()});
        for (bool unit : {false, true}) {
            double v = *indirect_reputation(ops, P, unit);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(std::abs(v - oracle_rin(ops, unit)) < 1e-12);
        }
    }
}

TEST_CASE("feedback score examples and properties") {
    CHECK(*feedback_score({5, 5}) == 0.0);
    CHECK(*feedback_score({4, 0}) == 1.0);
    CHECK(std::abs(*feedback_score({3, 1}) - 0.5) < 1e-12);
    CHECK_FALSE(feedback_score({0, 0}).has_value());
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b) {
            if (a + b == 0) continue;
            double f = *feedback_score({a, b});
            CHECK(std::abs(f + *feedback_score({b, a})) < 1e-15);
            CHECK(std::abs(f) <= 1.0);
            if (b == 0) CHECK(f == 1.0);
        }
}

TEST_CASE("similarity from scores examples") {
    std::vector<double> w{0.5, 0.5};
    std::vector<double> same{0.3, -0.2};
    CHECK(similarity_from_scores(same, same, w, 1e-6) == 1.0);

    std::vector<double> fi{0.5, 1.0}, fj{0.5, 0.0};
    CHECK(std::abs(similarity_from_scores(fi, fj, w, 1e-6) - (1 - std::sqrt(0.5))) < 1e-12);
    CHECK(std::abs(similarity_from_scores(fi, fj, w, 1e-6) - 0.2929) < 1e-4);

    std::vector<double> one{1.0}, minus{-1.0}, w1{1.0};
    CHECK(similarity_from_scores(one, minus, w1, 1e-6) == 1e-6);
}

TEST_CASE("feedback similarity over a ledger") {
    ReputationLedger l(P);
    for (auto v : {"i", "j", "q1", "q2", "q3"}) l.register_vehicle(v);

    SUBCASE("no common raters") {
        l = rate(l, "i", "q1", 1, 0);
        l = rate(l, "j", "q2", 1, 0);
        CHECK_FALSE(feedback_similarity("i", "j", l, SimilarityWeighting::uniform, P).has_value());
    }
    SUBCASE("coinciding profiles give 1") {
        l = rate(l, "i", "q1", 3, 1);
        l = rate(l, "j", "q1", 3, 1);
        l = rate(l, "i", "q2", 2, 0);
        l = rate(l, "j", "q2", 2, 0);
        CHECK(*feedback_similarity("i", "j", l, SimilarityWeighting::uniform, P) == 1.0);
    }
    SUBCASE("hand example through profiles") {
        l = rate(l, "i", "q1", 3, 1); // F = 0.5
        l = rate(l, "j", "q1", 3, 1);
        l = rate(l, "i", "q2", 4, 0); // F = 1
        l = rate(l, "j", "q2", 2, 2); // F = 0
        auto s = *feedback_similarity("i", "j", l, SimilarityWeighting::uniform, P);
        CHECK(std::abs(s - (1 - std::sqrt(0.5))) < 1e-12);
    }
    SUBCASE("symmetry and weights sum to one under both weightings") {
        Rng rng(5);
        for (const char* r : {"i", "j", "q3"})
            for (const char* q : {"q1", "q2"})
                l = rate(l, r, q, int(rng.index(5)), int(rng.index(5)) + 1);
        for (auto w : {SimilarityWeighting::uniform, SimilarityWeighting::deviation}) {
            auto a = similarity_detail("i", "j", l, w, P);
            auto b = similarity_detail("j", "i", l, w, P);
            REQUIRE(a);
            REQUIRE(b);
            CHECK(std::abs(a->value - b->value) < 1e-12);
            double sum = 0;
            for (double x : a->weights) sum += x;
            CHECK(std::abs(sum - 1.0) < 1e-12);
            CHECK(a->value >= P.simf_floor);
            CHECK(a->value <= 1.0);
        }
    }
}

TEST_CASE("local confidence") {
    CHECK(local_confidence(1.0, P) == 1.0);
    CHECK(std::abs(local_confidence(0.5, P) - std::exp(-1.0)) < 1e-12);
    CHECK(std::abs(local_confidence(0.5, P) - 0.36788) < 1e-5);
    CHECK_NOTHROW(local_confidence(1e-6, P));
    CHECK(local_confidence(1e-6, P) < 1e-300);
    CHECK_THROWS_AS(local_confidence(1e-7, P), std::domain_error);
    CHECK_THROWS_AS(local_confidence(1.5, P), std::domain_error);
    double prev = local_confidence(0.01, P);
    for (int k = 2; k <= 100; ++k) {
        double r = local_confidence(k / 100.0, P);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("final reputation examples") {
    ReputationLedger l(P);
    for (auto v : {"i", "f", "j1", "j2"}) l.register_vehicle(v);

    // never interacted, no opinions, no common raters
    auto d = final_reputation_detail("i", "f", l, {}, P);
    CHECK(d.situation == 1);
    CHECK(std::abs(d.value - 0.14) < 1e-12);

    std::vector<Opinion> ops{{"j1", "f", 0.9, 0.7}, {"j2", "f", 0.5, 0.2}};
    d = final_reputation_detail("i", "f", l, ops, P);
    CHECK(d.situation == 2);
    CHECK(std::abs(d.value - 0.2225) < 1e-9);

    const double r = local_confidence(0.5, P);
    CHECK(std::abs(combine_final(true, 0.8, 0.275, r, P) - (r * 0.8 + (1 - r) * 0.275)) < 1e-12);
    CHECK(std::abs(combine_final(true, 0.8, 0.275, r, P) - 0.46814) < 1e-5);
    CHECK(std::abs(combine_final(true, 0.8, std::nullopt, 0.7, P) - 0.56) < 1e-12);

    // reductions of the full combination
    CHECK(std::abs(combine_final(true, 0.8, 0.3, 1.0, P) - 0.8) < 1e-12);
    CHECK(std::abs(combine_final(true, 0.8, 0.3, 0.0, P) - 0.3) < 1e-12);
}

TEST_CASE("final reputation case dispatch is total and modes behave") {
    ReputationLedger l(P);
    for (auto v : {"i", "f", "j1", "q"}) l.register_vehicle(v);
    l = rate(l, "i", "f", 3, 0);
    l = rate(l, "i", "q", 2, 1);
    l = rate(l, "f", "q", 2, 1);
    std::vector<Opinion> ops{{"j1", "f", 0.5, 0.9}};

    auto d3 = final_reputation_detail("i", "f", l, {}, P);
    auto d4 = final_reputation_detail("i", "f", l, ops, P);
    CHECK(d3.situation == 3);
    CHECK(d4.situation == 4);
    REQUIRE(d4.similarity);
    CHECK(*d4.similarity == 1.0);
    CHECK(d4.confidence == 1.0);

    auto tp = final_reputation_detail("i", "f", l, ops, P, {ReputationMode::tp_only});
    CHECK(tp.confidence == P.theta);
    CHECK_FALSE(tp.similarity.has_value());

    auto tw = final_reputation_detail("i", "f", l, ops, P, {ReputationMode::twsl_like});
    CHECK(tw.confidence == P.theta);
    // C = 1 instead of 0.8 for r_ij = 0.5 raises the indirect term
    CHECK(*tw.indirect > *tp.indirect);
}

TEST_CASE("direct reputation from ratings") {
    ReputationLedger l(P);
    l.register_vehicle("a");
    l.register_vehicle("b");
    CHECK(l.direct("a", "b") == 0.5);
    CHECK(l.direct_at("a", "b", 10) == 0.5);

    auto pos = rate(l, "a", "b", 10, 0);
    CHECK(std::abs(pos.direct("a", "b") - 11.0 / 12.0) < 1e-12);
    auto mixed = rate(l, "a", "b", 5, 5);
    CHECK(std::abs(mixed.direct("a", "b") - 6.0 / 17.0) < 1e-12);
    CHECK(mixed.direct("a", "b") < 0.5);

    // decay: one positive at t=0 evaluated at t=10
    auto one = rate(l, "a", "b", 1, 0);
    double w = std::pow(0.98, 10);
    CHECK(std::abs(one.direct_at("a", "b", 10) - (w + 1) / (w + 2)) < 1e-12);

    CHECK_THROWS_AS(l.record_rating({"a", "a", RatingSign::positive, 0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(l.record_rating({"a", "b", RatingSign::positive, 5}, 4), std::invalid_argument);

    // monotone convergence upward, strict drop on a negative
    ReputationLedger m(P);
    double prev = 0.5;
    for (int k = 0; k < 50; ++k) {
        double r = m.record_rating({"a", "b", RatingSign::positive, 1.0}, 1.0);
        CHECK(r > prev);
        CHECK(r < 1.0);
        prev = r;
    }
    CHECK(m.record_rating({"a", "b", RatingSign::negative, 1.0}, 1.0) < prev);
}

TEST_CASE("status classification is absorbing") {
    ReputationLedger l(P);
    l.register_vehicle("v");
    CHECK(l.classify("v", 0.9, P) == Status::normal);
    CHECK(l.classify("v", 0.3, P) == Status::warning);
    CHECK(l.classify("v", 0.9, P) == Status::normal);
    CHECK(l.classify("v", 0.1, P) == Status::revoked);
    CHECK(l.classify("v", 0.9, P) == Status::revoked);
    CHECK(classify_status("v", 0.95, l, P) == Status::revoked);

    // ratings of a revoked vehicle still land in the history
    l.register_vehicle("r");
    l.record_rating({"r", "v", RatingSign::positive, 0}, 0);
    CHECK(l.status("v") == Status::revoked);
    CHECK(l.ratings().size() == 1);
}

TEST_CASE("server selection") {
    Rng rng(3);
    std::vector<ServerCandidate> single{{"A", 0.9, 0, Status::normal}};
    CHECK(select_server(single, P, rng)->value == "A");

    std::vector<ServerCandidate> old{{"A", 0.9, 20, Status::normal}, {"B", 0.6, 30, Status::normal}};
    CHECK(select_server_with_draw(old, P, 0.1, rng)->value == "A");
    // targeted new group empty: falls back to old
    CHECK(select_server_with_draw(old, P, 0.9, rng).has_value());

    CHECK_FALSE(select_server(std::vector<ServerCandidate>{}, P, rng).has_value());

    std::vector<ServerCandidate> revoked{{"R", 0.9, 50, Status::revoked}};
    CHECK_FALSE(select_server(revoked, P, rng).has_value());

    SUBCASE("never returns a revoked vehicle") {
        std::vector<ServerCandidate> mix{{"R", 0.95, 50, Status::revoked},
                                         {"A", 0.5, 10, Status::normal},
                                         {"N", 0.5, 0, Status::warning}};
        Rng r2(9);
        for (int k = 0; k < 2000; ++k) CHECK(select_server(mix, P, r2)->value != "R");
    }
    SUBCASE("low-reputation field selects uniformly and reproducibly") {
        std::vector<ServerCandidate> low{{"a", 0.1, 0, Status::normal},
                                         {"b", 0.2, 9, Status::normal},
                                         {"c", 0.3, 3, Status::warning},
                                         {"d", 0.35, 7, Status::warning}};
        auto draw = [&](std::uint64_t seed) {
            Rng r(seed);
            std::map<std::string, int> freq;
            std::vector<std::string> seq;
            for (int k = 0; k < 100000; ++k) {
                auto v = select_server(low, P, r)->value;
                ++freq[v];
                if (k < 100) seq.push_back(v);
            }
            return std::pair{freq, seq};
        };
        auto [freq, seq] = draw(77);
        for (const auto& [id, n] : freq) CHECK(std::abs(n / 1e5 - 0.25) < 0.02);
        CHECK(freq.size() == 4);
        CHECK(draw(77).second == seq);
    }
}

TEST_CASE("parameter validation") {
    TpfsParams p;
    CHECK_NOTHROW(p.validate());
    p.t_low = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.t_revoke = 0.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.simf_floor = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK(parse_mode("TPFS") == ReputationMode::tpfs);
    CHECK(parse_mode("TP_only") == ReputationMode::tp_only);
    CHECK(parse_mode("TWSL_like") == ReputationMode::twsl_like);
    CHECK_FALSE(parse_mode("tpfs").has_value());
}

TEST_CASE("scores stay in range for randomized ledgers") {
    Rng rng(21);
    ReputationLedger l(P);
    std::vector<VehicleId> vs;
    for (int k = 0; k < 8; ++k) {
        vs.push_back("v" + std::to_string(k));
        l.register_vehicle(vs.back());
    }
    double t = 0;
    for (int k = 0; k < 400; ++k) {
        t += rng.uniform();
        auto a = vs[rng.index(vs.size())], b = vs[rng.index(vs.size())];
        if (a == b) continue;
        double r = l.record_rating({a, b, rng.bernoulli(0.6) ? RatingSign::positive : RatingSign::negative, t}, t);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
    for (const auto& i : vs)
        for (const auto& f : vs) {
            if (i == f) continue;
            auto ops = gather_opinions(i, f, vs, l, t);
            for (auto m : {ReputationMode::tpfs, ReputationMode::tp_only, ReputationMode::twsl_like}) {
                double v = final_reputation(i, f, l, ops, P, {m, SimilarityWeighting::deviation, t});
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
}
