#include "rcchain/scenario_config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

namespace rcchain::scenario {

using nlohmann::json;

const char* to_string(BehaviorKind k) {
    switch (k) {
    case BehaviorKind::honest: return "honest";
    case BehaviorKind::malicious: return "malicious";
    case BehaviorKind::p_type: return "p_type";
    case BehaviorKind::untruthful_rater: return "untruthful_rater";
    }
    return "unknown";
}

const char* to_string(MissionKind k) { return k == MissionKind::qa ? "qa" : "data_share"; }

bool BehaviorProfile::fakes(double minute, double draw) const {
    switch (kind) {
    case BehaviorKind::malicious: return draw < fake_rate;
    case BehaviorKind::p_type: return minute >= switch_at && draw < fake_rate;
    default: return false;
    }
}

bool BehaviorProfile::inverts_rating(double draw) const {
    return kind == BehaviorKind::untruthful_rater && draw < fake_rate;
}

std::string endorsing_peer_id(const std::string& org, unsigned k) {
    return org + ".peer" + std::to_string(k);
}

std::string committing_peer_id(const std::string& org, unsigned k) {
    return org + ".committer" + std::to_string(k);
}

namespace {

// Reader over one JSON object that rejects keys it was not told about.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail("expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, _] : j_.items())
            if (!ok.contains(k)) fail("unknown key '" + k + "'");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& at(const char* key) const { return j_.at(key); }

    double number(const char* key, double def) const {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number()) fail(std::string("'") + key + "' must be a number");
        return v.get<double>();
    }

    std::uint64_t unsigned_int(const char* key, std::uint64_t def) const {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned()) fail(std::string("'") + key + "' must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool def) const {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) fail(std::string("'") + key + "' must be a boolean");
        return v.get<bool>();
    }

    std::string string(const char* key, std::optional<std::string> def = std::nullopt) const {
        if (!has(key)) {
            if (!def) fail(std::string("missing '") + key + "'");
            return *def;
        }
        const auto& v = j_.at(key);
        if (!v.is_string()) fail(std::string("'") + key + "' must be a string");
        return v.get<std::string>();
    }

    const json& array(const char* key) const {
        static const json empty = json::array();
        if (!has(key)) return empty;
        const auto& v = j_.at(key);
        if (!v.is_array()) fail(std::string("'") + key + "' must be an array");
        return v;
    }

    std::string where(const std::string& sub) const { return where_ + "." + sub; }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

private:
    const json& j_;
    std::string where_;
};

reputation::TpfsParams parse_tpfs(const json& j, const std::string& where) {
    Fields f(j, where);
    f.allow({"t_low", "t_high", "t_service", "t_revoke", "t_trades", "q_select", "gamma", "eta",
             "theta", "simf_floor", "decay_per_minute", "negative_penalty"});
    reputation::TpfsParams p;
    p.t_low = f.number("t_low", p.t_low);
    p.t_high = f.number("t_high", p.t_high);
    p.t_service = f.number("t_service", p.t_service);
    p.t_revoke = f.number("t_revoke", p.t_revoke);
    p.t_trades = f.unsigned_int("t_trades", p.t_trades);
    p.q_select = f.number("q_select", p.q_select);
    p.gamma = f.number("gamma", p.gamma);
    p.eta = f.number("eta", p.eta);
    p.theta = f.number("theta", p.theta);
    p.simf_floor = f.number("simf_floor", p.simf_floor);
    p.decay_per_minute = f.number("decay_per_minute", p.decay_per_minute);
    p.negative_penalty = f.number("negative_penalty", p.negative_penalty);
    return p;
}

Window parse_window(const Fields& f) {
    Window w{f.number("from_s", 0.0), f.number("to_s", 0.0)};
    if (!(w.to_s > w.from_s)) f.fail("window needs to_s > from_s");
    return w;
}

BehaviorProfile parse_profile(const json& j, const std::string& where) {
    Fields f(j, where);
    f.allow({"kind", "switch_at_min", "fake_rate"});
    BehaviorProfile p;
    const auto kind = f.string("kind", "honest");
    static const std::map<std::string, BehaviorKind> kinds{
        {"honest", BehaviorKind::honest},
        {"malicious", BehaviorKind::malicious},
        {"p_type", BehaviorKind::p_type},
        {"untruthful_rater", BehaviorKind::untruthful_rater}};
    auto it = kinds.find(kind);
    if (it == kinds.end()) f.fail("unknown behavior kind '" + kind + "'");
    p.kind = it->second;
    p.switch_at = f.number("switch_at_min", 0.0);
    p.fake_rate = f.number("fake_rate", p.kind == BehaviorKind::honest ? 0.0 : 1.0);
    return p;
}

} // namespace

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(duration_min >= 0.0) || !std::isfinite(duration_min)) fail("duration_min must be >= 0");
    try {
        tpfs.validate();
        ordering.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (policy.threshold < 1) fail("policy.threshold must be >= 1");

    std::set<std::string> orgs, ids, areas, peers, committers;
    for (const auto& o : organizations) {
        if (o.name.empty() || !orgs.insert(o.name).second) fail("duplicate or empty org '" + o.name + "'");
        for (unsigned k = 0; k < o.endorsing_peers; ++k) peers.insert(endorsing_peer_id(o.name, k));
        for (unsigned k = 0; k < o.committing_peers; ++k)
            committers.insert(committing_peer_id(o.name, k));
    }
    for (const auto& org : policy.required_orgs)
        if (!orgs.contains(org)) fail("policy references unknown org '" + org + "'");
    for (const auto& org : policy.required_orgs) {
        for (const auto& o : organizations)
            if (o.name == org && o.endorsing_peers < policy.threshold)
                fail("org '" + org + "' has fewer endorsing peers than the policy threshold");
    }
    for (const auto& r : rsus) {
        if (r.id.empty() || !ids.insert(r.id).second) fail("duplicate or empty id '" + r.id + "'");
        if (!orgs.contains(r.org)) fail("rsu '" + r.id + "' references unknown org '" + r.org + "'");
        areas.insert(r.area);
    }
    for (const auto& v : vehicles) {
        if (v.id.empty() || !ids.insert(v.id).second) fail("duplicate or empty id '" + v.id + "'");
        if (!orgs.contains(v.org)) fail("vehicle '" + v.id + "' references unknown org '" + v.org + "'");
        if (!areas.contains(v.area)) fail("vehicle '" + v.id + "' is in area '" + v.area + "' with no rsu");
        const auto& p = v.profile;
        if (!(p.fake_rate >= 0.0 && p.fake_rate <= 1.0)) fail("fake_rate must lie in [0, 1]");
        if (p.kind == BehaviorKind::honest && p.fake_rate != 0.0) fail("honest vehicles have fake_rate 0");
        if (p.switch_at < 0.0) fail("switch_at_min must be >= 0");
    }
    for (const auto& id : peers)
        if (ids.contains(id)) fail("id '" + id + "' collides with a peer id");

    if (!(missions.rate_per_min >= 0.0)) fail("missions.rate_per_min must be >= 0");
    if (!(missions.data_share_fraction >= 0.0 && missions.data_share_fraction <= 1.0))
        fail("missions.data_share_fraction must lie in [0, 1]");
    for (const auto& m : missions.script) {
        auto it = std::find_if(vehicles.begin(), vehicles.end(),
                               [&](const VehicleSpec& v) { return v.id == m.requester; });
        if (it == vehicles.end()) fail("scripted mission references unknown vehicle '" + m.requester + "'");
        if (!it->requester) fail("scripted mission requester '" + m.requester + "' is not a requester");
        if (m.at_min < 0.0 || m.at_min > duration_min) fail("scripted mission outside the run");
    }

    const auto& t = timing;
    if (!(t.endorse_latency_s > 0.0 && t.commit_latency_s > 0.0 && t.offer_window_s >= 0.0 &&
          t.service_time_s >= 0.0 && t.resubmit_delay_s > 0.0))
        fail("timing values must be positive");

    for (const auto& o : orderer_outages)
        if (o.orderer >= ordering.orderer_count) fail("orderer outage references unknown orderer");
    for (const auto& o : endorser_outages)
        if (!peers.contains(o.peer)) fail("endorser outage references unknown peer '" + o.peer + "'");
    for (const auto& o : committer_outages)
        if (!committers.contains(o.peer)) fail("committer outage references unknown peer '" + o.peer + "'");
}

ScenarioConfig parse_scenario_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    Fields f(doc, "config");
    f.allow({"duration_min", "seed", "tpfs", "mode", "similarity_weighting", "ordering", "policy",
             "organizations", "rsus", "vehicles", "missions", "timing", "endorser_outages",
             "committer_outages"});

    ScenarioConfig c;
    if (!f.has("seed")) f.fail("missing 'seed'");
    c.seed = f.unsigned_int("seed", 0);
    c.duration_min = f.number("duration_min", c.duration_min);
    if (f.has("tpfs")) c.tpfs = parse_tpfs(f.at("tpfs"), f.where("tpfs"));

    const auto mode = f.string("mode", "TPFS");
    auto parsed = reputation::parse_mode(mode);
    if (!parsed) f.fail("unknown mode '" + mode + "'");
    c.mode = *parsed;

    const auto weighting = f.string("similarity_weighting", "uniform");
    if (weighting == "uniform") c.weighting = reputation::SimilarityWeighting::uniform;
    else if (weighting == "deviation") c.weighting = reputation::SimilarityWeighting::deviation;
    else f.fail("unknown similarity_weighting '" + weighting + "'");

    if (f.has("ordering")) {
        Fields o(f.at("ordering"), f.where("ordering"));
        o.allow({"batch_size", "batch_timeout_s", "orderer_count", "crashed", "outages"});
        c.ordering.batch_size = o.unsigned_int("batch_size", c.ordering.batch_size);
        c.ordering.batch_timeout = o.number("batch_timeout_s", c.ordering.batch_timeout);
        c.ordering.orderer_count =
            static_cast<unsigned>(o.unsigned_int("orderer_count", c.ordering.orderer_count));
        for (const auto& id : o.array("crashed")) {
            if (!id.is_number_unsigned()) o.fail("crashed entries must be orderer indices");
            c.ordering.crashed.insert(id.get<unsigned>());
        }
        std::size_t k = 0;
        for (const auto& item : o.array("outages")) {
            Fields w(item, o.where("outages[" + std::to_string(k++) + "]"));
            w.allow({"orderer", "from_s", "to_s"});
            c.orderer_outages.push_back(
                {static_cast<unsigned>(w.unsigned_int("orderer", 0)), parse_window(w)});
        }
    }

    if (f.has("policy")) {
        Fields p(f.at("policy"), f.where("policy"));
        p.allow({"required_orgs", "threshold"});
        for (const auto& org : p.array("required_orgs")) {
            if (!org.is_string()) p.fail("required_orgs entries must be strings");
            c.policy.required_orgs.insert(org.get<std::string>());
        }
        c.policy.threshold = static_cast<unsigned>(p.unsigned_int("threshold", 1));
    }

    std::size_t k = 0;
    for (const auto& item : f.array("organizations")) {
        Fields o(item, f.where("organizations[" + std::to_string(k++) + "]"));
        o.allow({"name", "endorsing_peers", "committing_peers"});
        c.organizations.push_back({o.string("name"),
                                   static_cast<unsigned>(o.unsigned_int("endorsing_peers", 2)),
                                   static_cast<unsigned>(o.unsigned_int("committing_peers", 1))});
    }
    k = 0;
    for (const auto& item : f.array("rsus")) {
        Fields r(item, f.where("rsus[" + std::to_string(k++) + "]"));
        r.allow({"id", "org", "area"});
        c.rsus.push_back({r.string("id"), r.string("org"), r.string("area")});
    }
    k = 0;
    for (const auto& item : f.array("vehicles")) {
        const auto where = f.where("vehicles[" + std::to_string(k++) + "]");
        Fields v(item, where);
        v.allow({"id", "org", "area", "requester", "server", "profile"});
        VehicleSpec spec{v.string("id"), v.string("org"), v.string("area"),
                         v.boolean("requester", true), v.boolean("server", true), {}};
        if (v.has("profile")) spec.profile = parse_profile(v.at("profile"), where + ".profile");
        c.vehicles.push_back(std::move(spec));
    }

    if (f.has("missions")) {
        Fields m(f.at("missions"), f.where("missions"));
        m.allow({"rate_per_min", "data_share_fraction", "script"});
        c.missions.rate_per_min = m.number("rate_per_min", 0.0);
        c.missions.data_share_fraction = m.number("data_share_fraction", 0.0);
        k = 0;
        for (const auto& item : m.array("script")) {
            Fields s(item, m.where("script[" + std::to_string(k++) + "]"));
            s.allow({"at_min", "requester", "kind"});
            const auto kind = s.string("kind", "qa");
            if (kind != "qa" && kind != "data_share") s.fail("unknown mission kind '" + kind + "'");
            c.missions.script.push_back({s.number("at_min", 0.0), s.string("requester"),
                                         kind == "qa" ? MissionKind::qa : MissionKind::data_share});
        }
    }

    if (f.has("timing")) {
        Fields t(f.at("timing"), f.where("timing"));
        t.allow({"endorse_latency_s", "commit_latency_s", "offer_window_s", "service_time_s",
                 "resubmit_delay_s", "max_resubmits"});
        auto& tm = c.timing;
        tm.endorse_latency_s = t.number("endorse_latency_s", tm.endorse_latency_s);
        tm.commit_latency_s = t.number("commit_latency_s", tm.commit_latency_s);
        tm.offer_window_s = t.number("offer_window_s", tm.offer_window_s);
        tm.service_time_s = t.number("service_time_s", tm.service_time_s);
        tm.resubmit_delay_s = t.number("resubmit_delay_s", tm.resubmit_delay_s);
        tm.max_resubmits = static_cast<unsigned>(t.unsigned_int("max_resubmits", tm.max_resubmits));
    }

    auto outages = [&](const char* key, std::vector<PeerOutage>& out) {
        std::size_t n = 0;
        for (const auto& item : f.array(key)) {
            Fields o(item, f.where(std::string(key) + "[" + std::to_string(n++) + "]"));
            o.allow({"peer", "from_s", "to_s"});
            out.push_back({o.string("peer"), parse_window(o)});
        }
    };
    outages("endorser_outages", c.endorser_outages);
    outages("committer_outages", c.committer_outages);

    c.validate();
    return c;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_config(ss.str());
}

std::string to_json(const ScenarioConfig& c) {
    const auto& p = c.tpfs;
    json doc = {
        {"duration_min", c.duration_min},
        {"seed", c.seed},
        {"mode", reputation::to_string(c.mode)},
        {"similarity_weighting",
         c.weighting == reputation::SimilarityWeighting::uniform ? "uniform" : "deviation"},
        {"tpfs",
         {{"t_low", p.t_low}, {"t_high", p.t_high}, {"t_service", p.t_service},
          {"t_revoke", p.t_revoke}, {"t_trades", p.t_trades}, {"q_select", p.q_select},
          {"gamma", p.gamma}, {"eta", p.eta}, {"theta", p.theta}, {"simf_floor", p.simf_floor},
          {"decay_per_minute", p.decay_per_minute}, {"negative_penalty", p.negative_penalty}}},
    };
    json outages = json::array();
    for (const auto& o : c.orderer_outages)
        outages.push_back({{"orderer", o.orderer}, {"from_s", o.window.from_s}, {"to_s", o.window.to_s}});
    doc["ordering"] = {{"batch_size", c.ordering.batch_size},
                       {"batch_timeout_s", c.ordering.batch_timeout},
                       {"orderer_count", c.ordering.orderer_count},
                       {"crashed", c.ordering.crashed},
                       {"outages", outages}};
    doc["policy"] = {{"required_orgs", c.policy.required_orgs}, {"threshold", c.policy.threshold}};
    doc["organizations"] = json::array();
    for (const auto& o : c.organizations)
        doc["organizations"].push_back({{"name", o.name},
                                        {"endorsing_peers", o.endorsing_peers},
                                        {"committing_peers", o.committing_peers}});
    doc["rsus"] = json::array();
    for (const auto& r : c.rsus) doc["rsus"].push_back({{"id", r.id}, {"org", r.org}, {"area", r.area}});
    doc["vehicles"] = json::array();
    for (const auto& v : c.vehicles)
        doc["vehicles"].push_back({{"id", v.id},
                                   {"org", v.org},
                                   {"area", v.area},
                                   {"requester", v.requester},
                                   {"server", v.server},
                                   {"profile",
                                    {{"kind", to_string(v.profile.kind)},
                                     {"switch_at_min", v.profile.switch_at},
                                     {"fake_rate", v.profile.fake_rate}}}});
    json script = json::array();
    for (const auto& m : c.missions.script)
        script.push_back({{"at_min", m.at_min}, {"requester", m.requester}, {"kind", to_string(m.kind)}});
    doc["missions"] = {{"rate_per_min", c.missions.rate_per_min},
                       {"data_share_fraction", c.missions.data_share_fraction},
                       {"script", script}};
    const auto& t = c.timing;
    doc["timing"] = {{"endorse_latency_s", t.endorse_latency_s},
                     {"commit_latency_s", t.commit_latency_s},
                     {"offer_window_s", t.offer_window_s},
                     {"service_time_s", t.service_time_s},
                     {"resubmit_delay_s", t.resubmit_delay_s},
                     {"max_resubmits", t.max_resubmits}};
    auto peer_outages = [](const std::vector<PeerOutage>& v) {
        json a = json::array();
        for (const auto& o : v) a.push_back({{"peer", o.peer}, {"from_s", o.window.from_s}, {"to_s", o.window.to_s}});
        return a;
    };
    doc["endorser_outages"] = peer_outages(c.endorser_outages);
    doc["committer_outages"] = peer_outages(c.committer_outages);
    return doc.dump(2) + "\n";
}

} // namespace rcchain::scenario
