#include "doctest.h"

#include <stdexcept>
#include <fstream>
#include <sstream>

#include "rcchain/crypto.hpp"
#include "rcchain/ledger/export.hpp"
#include "rcchain/scenario.hpp"

using namespace rcchain;
using namespace rcchain::scenario;

namespace {

std::string example_path() { return std::string(RCCHAIN_TEST_DATA_DIR) + "/scenario_example.json"; }

ScenarioConfig one_mission() {
    ScenarioConfig c;
    c.duration_min = 5;
    c.seed = 42;
    c.organizations = {{"org1", 2, 1}, {"org2", 2, 1}};
    c.policy = {{"org1", "org2"}, 1};
    c.rsus = {{"rsu1", "org1", "a"}};
    c.vehicles = {{"req", "org1", "a", true, false, {}}, {"srv", "org2", "a", false, true, {}}};
    c.missions.script = {{1.0, "req", MissionKind::qa}};
    return c;
}

std::string digest(const RunReport& r) {
    std::string all = r.ledger_export() + r.world_state_export() + r.reputation_table().to_csv() +
                      r.missions_table().to_csv() + r.perf_table().to_csv() + r.summary_json();
    return crypto::to_hex(crypto::sha256(std::string_view(all)));
}

} // namespace

TEST_CASE("empty roster yields a genesis-only ledger") {
    ScenarioConfig c;
    c.duration_min = 10;
    c.seed = 1;
    auto r = run_scenario(c);
    CHECK(r.missions.empty());
    CHECK(r.summary.missions_created == 0);
    CHECK(r.chain.blocks().size() == 1);
    CHECK(r.chain.tx_log().empty());
    std::istringstream in(r.ledger_export());
    CHECK(ledger::verify_export(in).ok);
}

TEST_CASE("single mission produces the four lifecycle transactions") {
    auto r = run_scenario(one_mission());
    REQUIRE(r.missions.size() == 1);
    CHECK(r.missions[0].outcome == Outcome::completed_good);
    CHECK(r.missions[0].selected == std::optional<std::string>("srv"));
    CHECK(r.summary.invalid_txs == 0);
    std::map<std::string, std::size_t> expected{
        {"qa_request", 1}, {"service_proposal", 1}, {"service_process", 1}, {"reputation_update", 1}};
    CHECK(r.summary.valid_tx_by_kind == expected);
    CHECK(r.chain.tx_log().size() == 4);
    for (const auto& e : r.chain.tx_log()) CHECK(e.code == ledger::ValidationCode::valid);
    CHECK(r.summary.reputation_updates == 1);
    CHECK(r.reputation.direct("req", "srv") > 0.5);
    CHECK(r.summary.traceable);
    CHECK(r.summary.replicas_consistent);
}

TEST_CASE("data share missions index the data instead") {
    auto c = one_mission();
    c.missions.script[0].kind = MissionKind::data_share;
    auto r = run_scenario(c);
    CHECK(r.summary.valid_tx_by_kind.at("data_index") == 1);
    CHECK_FALSE(r.summary.valid_tx_by_kind.contains("service_process"));
}

TEST_CASE("no server in the area abandons the mission") {
    auto c = one_mission();
    c.vehicles[1].area = "b";
    c.rsus.push_back({"rsu2", "org2", "b"});
    auto r = run_scenario(c);
    REQUIRE(r.missions.size() == 1);
    CHECK(r.missions[0].outcome == Outcome::abandoned);
    CHECK(r.summary.missions_abandoned == 1);
}

TEST_CASE("endorser outage forces resubmission") {
    auto c = one_mission();
    c.endorser_outages = {{"org2.peer0", {0, 63}}, {"org2.peer1", {0, 63}}};
    auto r = run_scenario(c);
    CHECK(r.summary.resubmissions >= 1);
    CHECK(r.missions[0].outcome == Outcome::completed_good);

    c.endorser_outages = {{"org2.peer0", {0, 300}}, {"org2.peer1", {0, 300}}};
    auto dead = run_scenario(c);
    CHECK(dead.missions[0].outcome == Outcome::abandoned);
    CHECK(dead.summary.resubmissions == c.timing.max_resubmits);
}

TEST_CASE("orderer majority outage delays but does not lose transactions") {
    auto c = one_mission();
    c.orderer_outages = {{0, {0, 90}}, {1, {0, 90}}};
    auto r = run_scenario(c);
    CHECK(r.missions[0].outcome == Outcome::completed_good);
    REQUIRE(r.missions[0].t_commit);
    CHECK(*r.missions[0].t_commit >= 90);
    CHECK(r.chain.tx_log().size() == 4);
}

TEST_CASE("committer outage is caught up by sync") {
    auto c = one_mission();
    c.committer_outages = {{"org1.committer0", {0, 200}}};
    auto r = run_scenario(c);
    CHECK(r.summary.replicas_consistent);
}

TEST_CASE("example scenario invariants") {
    auto cfg = load_scenario_config(example_path());
    for (auto mode : {reputation::ReputationMode::tpfs, reputation::ReputationMode::tp_only,
                      reputation::ReputationMode::twsl_like}) {
        cfg.mode = mode;
        auto r = run_scenario(cfg);
        CAPTURE(reputation::to_string(mode));
        CHECK(r.summary.missions_created > 20);
        CHECK(r.summary.missions_created == r.summary.missions_completed + r.summary.missions_abandoned);
        CHECK(r.summary.missions_created == r.missions.size());
        CHECK(r.summary.replicas_consistent);

        // traceability: every update matches one valid reputation_update tx,
        // and the ledger alone rebuilds the reputation state
        std::size_t valid_updates = 0;
        for (const auto& e : r.chain.tx_log())
            if (e.code == ledger::ValidationCode::valid && e.tx.proposal.kind == ledger::TxKind::reputation_update)
                ++valid_updates;
        CHECK(valid_updates == r.summary.reputation_updates);
        CHECK(replay_reputation(cfg, r.chain) == r.reputation);
        CHECK(r.summary.traceable);

        for (const auto& m : r.missions) {
            if (!m.selected) continue;
            CHECK(std::find(m.candidates.begin(), m.candidates.end(), *m.selected) != m.candidates.end());
            auto it = r.summary.revoked_at_s.find(*m.selected);
            if (it != r.summary.revoked_at_s.end()) CHECK(*m.t_select <= it->second);
        }
        std::istringstream in(r.ledger_export());
        CHECK(ledger::verify_export(in).ok);
    }
}

TEST_CASE("malicious servers lose reputation and get revoked") {
    auto cfg = load_scenario_config(example_path());
    cfg.duration_min = 120;
    auto r = run_scenario(cfg);
    CHECK(std::find(r.summary.revoked.begin(), r.summary.revoked.end(), "v09") != r.summary.revoked.end());
    CHECK(r.reputation.status("v09") == reputation::Status::revoked);
    CHECK(r.reputation.status("v04") != reputation::Status::revoked);
}

TEST_CASE("determinism across seeds") {
    auto cfg = load_scenario_config(example_path());
    std::set<std::string> distinct;
    for (std::uint64_t seed : {1u, 42u, 2024u}) {
        cfg.seed = seed;
        auto a = digest(run_scenario(cfg));
        auto b = digest(run_scenario(cfg));
        CHECK(a == b);
        distinct.insert(a);
    }
    CHECK(distinct.size() == 3);
}

TEST_CASE("untruthful raters report the complement") {
    reputation::ReputationLedger l;
    for (auto v : {"i", "j", "k", "f"}) l.register_vehicle(v);
    l.record_rating({"j", "f", reputation::RatingSign::positive, 0}, 0);
    l.record_rating({"k", "f", reputation::RatingSign::positive, 0}, 0);
    std::map<reputation::VehicleId, BehaviorProfile> profiles{
        {"j", {BehaviorKind::honest, 0, 0}}, {"k", {BehaviorKind::untruthful_rater, 0, 1.0}}};
    std::vector<reputation::VehicleId> roster{"i", "j", "k", "f"};
    auto ops = reported_opinions("i", "f", roster, l, profiles, 0);
    REQUIRE(ops.size() == 2);
    CHECK(ops[0].r_jf == doctest::Approx(l.direct("j", "f")));
    CHECK(ops[1].r_jf == doctest::Approx(1 - l.direct("k", "f")));
}

TEST_CASE("strict config parsing") {
    const std::string good = R"({"duration_min": 5, "seed": 3})";
    CHECK_NOTHROW(parse_scenario_config(good));
    CHECK_THROWS_AS(parse_scenario_config(R"({"duration_min": 5})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"seed": 3, "bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"seed": 3, "tpfs": {"t_lo": 0.4}})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"seed": 3, "mode": "tpfs"})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(R"({"seed": 3, "vehicles": [{"id": "v", "org": "nope", "area": "a"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario_config(
                        R"({"seed": 3, "organizations": [{"name": "o"}], "missions": {"script": [{"at_min": 1, "requester": "ghost"}]}})"),
                    ConfigError);

    auto c = load_scenario_config(example_path());
    auto round = parse_scenario_config(to_json(c));
    CHECK(to_json(round) == to_json(c));
    CHECK_THROWS(load_scenario_config("/nonexistent/cfg.json"));
}

TEST_CASE("behavior profiles") {
    BehaviorProfile honest{BehaviorKind::honest, 0, 0};
    CHECK_FALSE(honest.fakes(10, 0.0));
    BehaviorProfile pt{BehaviorKind::p_type, 50, 1.0};
    CHECK_FALSE(pt.fakes(49.9, 0.0));
    CHECK(pt.fakes(51, 0.5));
    BehaviorProfile mal{BehaviorKind::malicious, 0, 0.3};
    CHECK(mal.fakes(0, 0.1));
    CHECK_FALSE(mal.fakes(0, 0.5));
}
