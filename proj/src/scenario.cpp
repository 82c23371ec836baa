#include "rcchain/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "rcchain/ledger/export.hpp"
#include "rcchain/ledger/identity.hpp"
#include "rcchain/ledger/ordering.hpp"
#include "rcchain/random.hpp"
#include "rcchain/scheduler.hpp"

namespace rcchain::scenario {

namespace rep = reputation;
namespace lg = ledger;

const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::pending: return "pending";
    case Outcome::completed_good: return "completed_good";
    case Outcome::completed_bad: return "completed_bad";
    case Outcome::abandoned: return "abandoned";
    }
    return "unknown";
}

namespace {

constexpr double seconds_per_minute = 60.0;

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_number(const std::optional<double>& v) {
    return v ? io::format_number(*v) : std::string{};
}

struct RepContext {
    rep::TpfsParams params;
    rep::EvalOptions options;
    std::vector<rep::VehicleId> roster;
    std::map<rep::VehicleId, BehaviorProfile> profiles;

    explicit RepContext(const ScenarioConfig& cfg) : params(cfg.tpfs) {
        options.mode = cfg.mode;
        options.weighting = cfg.weighting;
        for (const auto& v : cfg.vehicles) {
            roster.emplace_back(v.id);
            profiles.emplace(rep::VehicleId(v.id), v.profile);
        }
    }

    double rfin(const rep::ReputationLedger& led, const rep::VehicleId& i, const rep::VehicleId& f,
                double now_min) const {
        auto ops = reported_opinions(i, f, roster, led, profiles, now_min);
        rep::EvalOptions o = options;
        o.now = now_min;
        return rep::final_reputation(i, f, led, ops, params, o);
    }
};

std::string rating_value(const rep::RatingEvent& ev) {
    return ev.rater.value + "|" + ev.ratee.value + "|" +
           (ev.sign == rep::RatingSign::positive ? "+" : "-") + "|" + exact(ev.timestamp);
}

std::optional<rep::RatingEvent> parse_rating_value(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : v) {
        if (c == '|') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() != 4 || (parts[2] != "+" && parts[2] != "-")) return std::nullopt;
    try {
        return rep::RatingEvent{parts[0], parts[1],
                                parts[2] == "+" ? rep::RatingSign::positive : rep::RatingSign::negative,
                                std::stod(parts[3])};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// The step-7 state transition, shared by the engine and the chain replay.
struct AppliedUpdate {
    double rfin;
    rep::Status status;
};

AppliedUpdate apply_update(rep::ReputationLedger& led, const RepContext& ctx,
                           const rep::RatingEvent& ev) {
    led.record_rating(ev, ev.timestamp);
    const double r = ctx.rfin(led, ev.rater, ev.ratee, ev.timestamp);
    const rep::Status s = led.classify(ev.ratee, r, ctx.params);
    led.add_trade(ev.ratee);
    return {r, s};
}

enum class Stage { request, proposal, process, update };

struct TxPurpose {
    std::uint64_t mission;
    Stage stage;
    lg::TxKind kind;
    std::string creator;
    std::string payload;
    unsigned attempt;
    std::optional<rep::RatingEvent> rating;
};

enum class Act {
    mission_start,
    endorse,
    orderer_tick,
    orderer_crash,
    orderer_recover,
    deliver,
    committer_recover,
    offers_close,
    service_done,
    resubmit,
};

struct Event {
    Act act;
    std::uint64_t a = 0; // mission id, proposal index, orderer, or block number
    std::int64_t replica = -1; // deliver / recover target, -1 for the reference ledger
};

class Engine {
public:
    explicit Engine(const ScenarioConfig& cfg)
        : cfg_(cfg), ctx_(cfg), ca_(cfg.seed), reputation_(cfg.tpfs), orderer_(cfg.ordering),
          select_rng_(mix_seed(cfg.seed, 2)), fake_rng_(mix_seed(cfg.seed, 3)),
          invert_rng_(mix_seed(cfg.seed, 4)) {}

    RunReport run();

private:
    // Step 1: the CA registers every participant.
    void register_all();
    void schedule_missions();
    void schedule_faults();

    void start_mission(std::uint64_t id, double now);
    void submit(std::uint64_t mission, Stage stage, lg::TxKind kind, const std::string& creator,
                std::string payload, unsigned attempt, double now,
                std::optional<rep::RatingEvent> rating = std::nullopt);
    void endorse(std::uint64_t proposal, double now);
    void tick_orderer(double now);
    void deliver(std::uint64_t block, std::int64_t replica, double now);
    void on_committed(const lg::EndorsedTransaction& tx, lg::ValidationCode code, double now);
    void retry(std::uint64_t proposal, const std::string& why, double now);
    void close_offers(std::uint64_t mission, double now);
    void finish_service(std::uint64_t mission, double now);
    void abandon(std::uint64_t mission, const std::string& why);

    bool endorser_up(const std::string& peer, double now) const;
    bool committer_down(std::size_t replica, double now) const;

    const ScenarioConfig& cfg_;
    RepContext ctx_;
    lg::CertificateAuthority ca_;
    rep::ReputationLedger reputation_;
    lg::OrderingService orderer_;
    EventQueue<Event> events_;
    Rng select_rng_;
    Rng fake_rng_;
    Rng invert_rng_;

    lg::ChainLedger reference_;
    std::vector<std::string> replica_ids_;
    std::vector<lg::ChainLedger> replicas_;
    std::map<std::uint64_t, lg::Block> cut_blocks_;
    std::vector<lg::EndorsingPeer> peers_;

    std::vector<TxPurpose> proposals_;
    std::vector<lg::TransactionProposal> proposal_objs_;
    std::map<std::string, std::size_t> proposal_by_tx_;
    std::map<std::string, std::size_t> perf_index_;
    std::uint64_t nonce_ = 0;

    std::vector<MissionRecord> missions_;
    std::vector<TxTiming> perf_;
    std::vector<ReputationSample> trajectory_;
    RunSummary summary_;
    std::map<std::string, const VehicleSpec*> vehicles_;
    std::map<std::string, std::vector<const RsuSpec*>> rsus_by_area_;
    std::map<std::uint64_t, bool> mission_fake_;
};

void Engine::register_all() {
    for (const auto& o : cfg_.organizations) {
        for (unsigned k = 0; k < o.endorsing_peers; ++k) {
            auto id = ca_.register_identity(o.name, lg::Role::endorsing_peer, endorsing_peer_id(o.name, k));
            peers_.push_back({id.id, true});
        }
        for (unsigned k = 0; k < o.committing_peers; ++k) {
            auto id = ca_.register_identity(o.name, lg::Role::committing_peer,
                                            committing_peer_id(o.name, k));
            replica_ids_.push_back(id.id);
            replicas_.emplace_back();
        }
    }
    for (unsigned k = 0; k < cfg_.ordering.orderer_count; ++k)
        ca_.register_identity("ordering", lg::Role::orderer, "orderer" + std::to_string(k));
    for (const auto& r : cfg_.rsus) {
        ca_.register_identity(r.org, lg::Role::leading_peer, r.id);
        rsus_by_area_[r.area].push_back(&r);
    }
    for (const auto& v : cfg_.vehicles) {
        ca_.register_identity(v.org, lg::Role::client, v.id, reputation_);
        vehicles_[v.id] = &v;
    }
}

void Engine::schedule_missions() {
    struct Start {
        double t;
        std::string requester;
        MissionKind kind;
    };
    std::vector<Start> starts;
    const double horizon = cfg_.duration_min * seconds_per_minute;
    if (cfg_.missions.rate_per_min > 0.0) {
        const double rate = cfg_.missions.rate_per_min / seconds_per_minute;
        for (std::size_t k = 0; k < cfg_.vehicles.size(); ++k) {
            const auto& v = cfg_.vehicles[k];
            if (!v.requester) continue;
            Rng rng(mix_seed(cfg_.seed, 1000 + k));
            for (double t = rng.exponential(rate); t < horizon; t += rng.exponential(rate)) {
                const bool data = rng.bernoulli(cfg_.missions.data_share_fraction);
                starts.push_back({t, v.id, data ? MissionKind::data_share : MissionKind::qa});
            }
        }
    }
    for (const auto& m : cfg_.missions.script)
        starts.push_back({m.at_min * seconds_per_minute, m.requester, m.kind});
    std::stable_sort(starts.begin(), starts.end(),
                     [](const Start& a, const Start& b) { return a.t < b.t; });
    for (const auto& s : starts) {
        MissionRecord m;
        m.id = missions_.size();
        m.kind = s.kind;
        m.requester = s.requester;
        m.t_request = s.t;
        missions_.push_back(std::move(m));
        events_.push(s.t, {Act::mission_start, missions_.back().id});
    }
}

void Engine::schedule_faults() {
    for (const auto& o : cfg_.orderer_outages) {
        events_.push(o.window.from_s, {Act::orderer_crash, o.orderer});
        events_.push(o.window.to_s, {Act::orderer_recover, o.orderer});
    }
    for (const auto& o : cfg_.committer_outages) {
        auto it = std::find(replica_ids_.begin(), replica_ids_.end(), o.peer);
        events_.push(o.window.to_s,
                     {Act::committer_recover, 0, static_cast<std::int64_t>(it - replica_ids_.begin())});
    }
}

bool Engine::endorser_up(const std::string& peer, double now) const {
    for (const auto& o : cfg_.endorser_outages)
        if (o.peer == peer && o.window.contains(now)) return false;
    return true;
}

bool Engine::committer_down(std::size_t replica, double now) const {
    for (const auto& o : cfg_.committer_outages)
        if (o.peer == replica_ids_[replica] && o.window.contains(now)) return true;
    return false;
}

void Engine::abandon(std::uint64_t mission, const std::string& why) {
    auto& m = missions_[mission];
    if (m.outcome != Outcome::pending) return;
    m.outcome = Outcome::abandoned;
    m.note = why;
}

void Engine::start_mission(std::uint64_t id, double now) {
    auto& m = missions_[id];
    if (ca_.is_revoked(m.requester)) {
        abandon(id, "requester revoked");
        return;
    }
    // Step 2: the request itself goes through consensus first.
    submit(id, Stage::request, lg::TxKind::qa_request, m.requester,
           "put mission/" + std::to_string(id) + " " + m.requester + "|" + to_string(m.kind) + "\n",
           0, now);
}

void Engine::submit(std::uint64_t mission, Stage stage, lg::TxKind kind, const std::string& creator,
                    std::string payload, unsigned attempt, double now,
                    std::optional<rep::RatingEvent> rating) {
    if (ca_.is_revoked(creator)) {
        abandon(mission, "signer revoked");
        return;
    }
    auto p = lg::make_proposal(ca_, creator, kind, payload, nonce_++, now);
    proposal_by_tx_[p.tx_id] = proposals_.size();
    perf_index_[p.tx_id] = perf_.size();
    perf_.push_back({p.tx_id, now, std::nullopt, std::nullopt, std::nullopt, false});
    proposals_.push_back({mission, stage, kind, creator, std::move(payload), attempt, std::move(rating)});
    proposal_objs_.push_back(std::move(p));
    events_.push(now + cfg_.timing.endorse_latency_s, {Act::endorse, proposals_.size() - 1});
}

void Engine::retry(std::uint64_t proposal, const std::string& why, double now) {
    const TxPurpose& p = proposals_[proposal];
    if (p.attempt >= cfg_.timing.max_resubmits) {
        abandon(p.mission, why);
        return;
    }
    ++summary_.resubmissions;
    events_.push(now + cfg_.timing.resubmit_delay_s, {Act::resubmit, proposal});
}

void Engine::endorse(std::uint64_t proposal, double now) {
    std::vector<lg::EndorsingPeer> reachable = peers_;
    for (auto& peer : reachable) peer.reachable = endorser_up(peer.id, now);
    auto res = lg::endorse(proposal_objs_[proposal], cfg_.policy, reachable,
                           reference_.world_state(), ca_);
    if (res.status == lg::EndorseStatus::insufficient) {
        retry(proposal, "insufficient endorsements", now);
        return;
    }
    perf_[perf_index_[res.tx.proposal.tx_id]].t_endorsed = now;
    orderer_.submit(std::move(res.tx), now);
    tick_orderer(now);
}

void Engine::tick_orderer(double now) {
    while (auto block = orderer_.order_batch(now)) {
        for (const auto& tx : block->txs) perf_[perf_index_[tx.proposal.tx_id]].t_ordered = now;
        const std::uint64_t number = block->number;
        cut_blocks_.emplace(number, std::move(*block));
        const double at = now + cfg_.timing.commit_latency_s;
        events_.push(at, {Act::deliver, number, -1});
        for (std::size_t r = 0; r < replicas_.size(); ++r)
            events_.push(at, {Act::deliver, number, static_cast<std::int64_t>(r)});
    }
    if (auto t = orderer_.next_timeout(); t && orderer_.available())
        events_.push(std::max(*t, now), {Act::orderer_tick});
}

void Engine::deliver(std::uint64_t number, std::int64_t replica, double now) {
    const lg::Block& block = cut_blocks_.at(number);
    if (replica < 0) {
        auto report = lg::validate_and_commit(block, reference_, cfg_.policy, ca_);
        for (std::size_t k = 0; k < block.txs.size(); ++k)
            on_committed(block.txs[k], report.codes[k], now);
        return;
    }
    auto r = static_cast<std::size_t>(replica);
    if (committer_down(r, now)) return;
    auto& led = replicas_[r];
    if (led.tip_number() >= number) return; // already caught up
    if (led.tip_number() + 1 == number) lg::validate_and_commit(block, led, cfg_.policy, ca_);
    else lg::sync_peer(led, reference_, cfg_.policy, ca_);
}

void Engine::on_committed(const lg::EndorsedTransaction& tx, lg::ValidationCode code, double now) {
    auto& timing = perf_[perf_index_[tx.proposal.tx_id]];
    timing.t_committed = now;
    timing.valid = code == lg::ValidationCode::valid;
    const std::size_t idx = proposal_by_tx_.at(tx.proposal.tx_id);
    const TxPurpose purpose = proposals_[idx];
    if (!timing.valid) {
        ++summary_.invalid_txs;
        retry(idx, std::string("invalid: ") + lg::to_string(code), now);
        return;
    }
    ++summary_.valid_tx_by_kind[lg::to_string(purpose.kind)];
    auto& m = missions_[purpose.mission];

    switch (purpose.stage) {
    case Stage::request:
        // Step 3: offers are collected for a fixed window.
        events_.push(now + cfg_.timing.offer_window_s, {Act::offers_close, purpose.mission});
        break;
    case Stage::proposal:
        events_.push(now + cfg_.timing.service_time_s, {Act::service_done, purpose.mission});
        break;
    case Stage::process: {
        // Step 6: the requester rates the delivered message.
        const bool fake = mission_fake_.at(purpose.mission);
        const auto& profile = vehicles_.at(m.requester)->profile;
        bool positive = !fake;
        if (profile.inverts_rating(invert_rng_.uniform())) positive = !positive;
        m.outcome = fake ? Outcome::completed_bad : Outcome::completed_good;
        const rep::RatingEvent ev{m.requester, *m.selected,
                                  positive ? rep::RatingSign::positive : rep::RatingSign::negative,
                                  now / seconds_per_minute};
        // Step 7: the rating reaches the reputation ledger only via the chain.
        submit(purpose.mission, Stage::update, lg::TxKind::reputation_update, m.requester,
               "put rep/" + *m.selected + "/" + std::to_string(purpose.mission) + " " +
                   rating_value(ev) + "\n",
               0, now, ev);
        break;
    }
    case Stage::update: {
        const auto ev = *purpose.rating;
        const auto applied = apply_update(reputation_, ctx_, ev);
        ++summary_.reputation_updates;
        m.t_commit = now;
        trajectory_.push_back({ev.timestamp, ev.rater.value, ev.ratee.value, applied.rfin, applied.status});
        if (applied.status == rep::Status::revoked && !ca_.is_revoked(ev.ratee.value)) {
            ca_.revoke(ev.ratee.value);
            summary_.revoked.push_back(ev.ratee.value);
            summary_.revoked_at_s[ev.ratee.value] = now;
        }
        break;
    }
    }
}

void Engine::close_offers(std::uint64_t mission, double now) {
    auto& m = missions_[mission];
    const auto& requester = *vehicles_.at(m.requester);
    const double minute = now / seconds_per_minute;

    std::vector<rep::ServerCandidate> candidates;
    for (const auto& v : cfg_.vehicles) {
        if (!v.server || v.id == m.requester || v.area != requester.area) continue;
        if (ca_.is_revoked(v.id)) continue;
        m.candidates.push_back(v.id);
        candidates.push_back({v.id, ctx_.rfin(reputation_, m.requester, v.id, minute),
                              reputation_.trade_count(v.id), reputation_.status(v.id)});
    }
    if (candidates.empty()) {
        abandon(mission, "no servers");
        return;
    }

    // Step 4: each RSU of the area nominates, the leading RSU draws one.
    const auto& area_rsus = rsus_by_area_.at(requester.area);
    std::vector<std::string> nominations;
    for (std::size_t k = 0; k < area_rsus.size(); ++k) {
        if (auto pick = rep::select_server(candidates, cfg_.tpfs, select_rng_))
            nominations.push_back(pick->value);
    }
    if (nominations.empty()) {
        abandon(mission, "no eligible servers");
        return;
    }
    m.selected = nominations[select_rng_.index(nominations.size())];
    m.t_select = now;
    submit(mission, Stage::proposal, lg::TxKind::service_proposal, area_rsus.front()->id,
           "put mission/" + std::to_string(mission) + "/server " + *m.selected + "\n", 0, now);
}

void Engine::finish_service(std::uint64_t mission, double now) {
    auto& m = missions_[mission];
    if (ca_.is_revoked(*m.selected)) {
        abandon(mission, "server revoked");
        return;
    }
    // Step 5: the server's answer or shared data is indexed on chain.
    const auto& profile = vehicles_.at(*m.selected)->profile;
    const bool fake = profile.fakes(now / seconds_per_minute, fake_rng_.uniform());
    mission_fake_[mission] = fake;
    const auto digest = crypto::to_hex(crypto::sha256(std::to_string(mission) + (fake ? "fake" : "real")));
    submit(mission, Stage::process,
           m.kind == MissionKind::qa ? lg::TxKind::service_process : lg::TxKind::data_index,
           *m.selected, "put data/" + std::to_string(mission) + " " + digest + "\n", 0, now);
}

RunReport Engine::run() {
    register_all();
    schedule_missions();
    schedule_faults();

    while (!events_.empty()) {
        auto [now, ev] = events_.pop();
        switch (ev.act) {
        case Act::mission_start: start_mission(ev.a, now); break;
        case Act::endorse: endorse(ev.a, now); break;
        case Act::orderer_tick: tick_orderer(now); break;
        case Act::orderer_crash: orderer_.crash(static_cast<unsigned>(ev.a)); break;
        case Act::orderer_recover:
            orderer_.recover(static_cast<unsigned>(ev.a));
            tick_orderer(now);
            break;
        case Act::deliver: deliver(ev.a, ev.replica, now); break;
        case Act::committer_recover: {
            auto& led = replicas_[static_cast<std::size_t>(ev.replica)];
            if (led.tip_number() < reference_.tip_number())
                lg::sync_peer(led, reference_, cfg_.policy, ca_);
            break;
        }
        case Act::offers_close: close_offers(ev.a, now); break;
        case Act::service_done: finish_service(ev.a, now); break;
        case Act::resubmit: {
            const TxPurpose p = proposals_[ev.a];
            submit(p.mission, p.stage, p.kind, p.creator, p.payload, p.attempt + 1, now, p.rating);
            break;
        }
        }
    }

    // Anything still pending is stuck behind a stalled orderer.
    for (auto& m : missions_) {
        if (m.outcome == Outcome::pending) {
            m.outcome = Outcome::abandoned;
            m.note = "stalled";
        }
    }
    for (auto& led : replicas_) {
        if (led.tip_number() < reference_.tip_number()) lg::sync_peer(led, reference_, cfg_.policy, ca_);
        summary_.replicas_consistent = summary_.replicas_consistent && led == reference_;
    }

    summary_.missions_created = missions_.size();
    for (const auto& m : missions_) {
        if (m.outcome == Outcome::abandoned) ++summary_.missions_abandoned;
        else ++summary_.missions_completed;
    }
    summary_.traceable = replay_reputation(cfg_, reference_) == reputation_ &&
                         summary_.valid_tx_by_kind["reputation_update"] == summary_.reputation_updates;

    RunReport out;
    out.mode = cfg_.mode;
    out.chain = std::move(reference_);
    out.reputation = std::move(reputation_);
    out.missions = std::move(missions_);
    out.perf = std::move(perf_);
    out.trajectory = std::move(trajectory_);
    out.summary = std::move(summary_);
    return out;
}

} // namespace

std::vector<rep::Opinion> reported_opinions(const rep::VehicleId& evaluator,
                                            const rep::VehicleId& subject,
                                            std::span<const rep::VehicleId> roster,
                                            const rep::ReputationLedger& ledger,
                                            const std::map<rep::VehicleId, BehaviorProfile>& profiles,
                                            double now_min) {
    auto ops = rep::gather_opinions(evaluator, subject, roster, ledger, now_min);
    for (auto& o : ops) {
        auto it = profiles.find(o.recommender);
        if (it != profiles.end() && it->second.kind == BehaviorKind::untruthful_rater)
            o.r_jf = 1.0 - o.r_jf;
    }
    return ops;
}

rep::ReputationLedger replay_reputation(const ScenarioConfig& cfg, const lg::ChainLedger& chain) {
    RepContext ctx(cfg);
    rep::ReputationLedger led(cfg.tpfs);
    for (const auto& v : cfg.vehicles) led.register_vehicle(v.id);
    for (const auto& entry : chain.tx_log()) {
        if (entry.code != lg::ValidationCode::valid ||
            entry.tx.proposal.kind != lg::TxKind::reputation_update)
            continue;
        for (const auto& w : entry.tx.rw.writes) {
            if (auto ev = parse_rating_value(w.value)) apply_update(led, ctx, *ev);
        }
    }
    return led;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Engine engine(cfg);
    return engine.run();
}

std::string RunReport::ledger_export() const { return lg::export_chain(chain); }

std::string RunReport::world_state_export() const { return lg::export_world_state(chain.world_state()); }

io::Table RunReport::reputation_table() const {
    io::Table t{{"time_min", "rater", "ratee", "mode", "rfin", "status"}, {}};
    for (const auto& s : trajectory)
        t.add_row({io::format_number(s.time_min), s.rater, s.ratee, rep::to_string(mode),
                   io::format_number(s.rfin), rep::to_string(s.status)});
    return t;
}

io::Table RunReport::missions_table() const {
    io::Table t{{"mission_id", "kind", "requester", "selected", "outcome", "t_request", "t_commit"}, {}};
    for (const auto& m : missions)
        t.add_row({std::to_string(m.id), to_string(m.kind), m.requester, m.selected.value_or(""),
                   to_string(m.outcome), io::format_number(m.t_request), opt_number(m.t_commit)});
    return t;
}

io::Table RunReport::perf_table() const {
    io::Table t{{"tx_id", "t_arrive", "t_endorsed", "t_ordered", "t_committed", "valid"}, {}};
    for (const auto& p : perf)
        t.add_row({p.tx_id, io::format_number(p.t_arrive), opt_number(p.t_endorsed),
                   opt_number(p.t_ordered), opt_number(p.t_committed), p.valid ? "true" : "false"});
    return t;
}

std::string RunReport::summary_json() const {
    nlohmann::json j = {
        {"missions_created", summary.missions_created},
        {"missions_completed", summary.missions_completed},
        {"missions_abandoned", summary.missions_abandoned},
        {"resubmissions", summary.resubmissions},
        {"reputation_updates", summary.reputation_updates},
        {"valid_tx_by_kind", summary.valid_tx_by_kind},
        {"invalid_txs", summary.invalid_txs},
        {"revoked", summary.revoked},
        {"replicas_consistent", summary.replicas_consistent},
        {"traceable", summary.traceable},
        {"blocks", chain.blocks().size() - 1},
        {"mode", rep::to_string(mode)},
    };
    return j.dump(2) + "\n";
}

} // namespace rcchain::scenario
