#include "rcchain/presets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcchain/random.hpp"

namespace rcchain::presets {

namespace rep = reputation;
using rep::ReputationMode;
using rep::VehicleId;

namespace {

constexpr ReputationMode all_modes[] = {ReputationMode::tpfs, ReputationMode::tp_only,
                                        ReputationMode::twsl_like};

std::string fmt(double v) { return io::format_number(v); }

void rate(rep::ReputationLedger& led, const VehicleId& from, const VehicleId& to, bool positive,
          double t) {
    led.record_rating({from, to, positive ? rep::RatingSign::positive : rep::RatingSign::negative, t}, t);
}

Check make_check(std::string name, bool ok, std::string detail) {
    return {std::move(name), ok, std::move(detail)};
}

} // namespace

bool PresetResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

io::Table PresetResult::checks_table() const {
    io::Table t{{"preset", "check", "result", "detail"}, {}};
    for (const auto& c : checks) t.add_row({name, c.name, c.passed ? "PASS" : "FAIL", c.detail});
    return t;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"reputation-timeline", "neighbor-sweep",
                                                "ptype-field", "queueing-validation"};
    return names;
}

// ---------------------------------------------------------------------------

PresetResult reputation_timeline(TimelineSeries* series) {
    const rep::TpfsParams params;
    rep::ReputationLedger led(params);
    const VehicleId i{"i"}, j{"j"};
    std::vector<VehicleId> honest, colluders;
    for (int k = 0; k < 8; ++k) honest.emplace_back("h" + std::to_string(k));
    for (int k = 0; k < 2; ++k) colluders.emplace_back("c" + std::to_string(k));
    std::vector<VehicleId> roster = honest;
    roster.insert(roster.end(), colluders.begin(), colluders.end());

    // Background at minute 0: j's mixed record with the honest neighbors,
    // i's poor experience with the colluders, who vouch for j.
    for (const auto& h : honest) {
        for (int k = 0; k < 4; ++k) rate(led, j, h, true, 0.0);
        rate(led, j, h, false, 0.0);
    }
    for (const auto& c : colluders) {
        rate(led, i, c, false, 0.0);
        rate(led, c, j, true, 0.0);
    }

    std::map<ReputationMode, std::vector<double>> rfin;
    std::map<ReputationMode, rep::ReputationLedger> status_books;
    for (auto m : all_modes) status_books.emplace(m, rep::ReputationLedger(params));

    io::Table table{{"time_min", "rater", "ratee", "mode", "rfin", "status"}, {}};
    std::vector<std::vector<std::string>> rows_by_mode[3];

    for (int t = 1; t <= 100; ++t) {
        const double now = t;
        rate(led, i, honest[static_cast<std::size_t>(t) % honest.size()], true, now);
        if (t % 10 == 0)
            for (const auto& c : colluders) rate(led, i, c, false, now);
        if (t <= 80) {
            const bool real = t <= 50;
            rate(led, i, j, real, now);
            for (const auto& h : honest) rate(led, h, j, real, now);
        }

        auto honest_ops = rep::gather_opinions(i, j, honest, led, now);
        for (const auto& c : colluders)
            honest_ops.push_back({c, j, led.direct_at(i, c, now), 1.0});

        int col = 0;
        for (auto m : all_modes) {
            rep::EvalOptions o{m, rep::SimilarityWeighting::uniform, now};
            const double v = rep::final_reputation(i, j, led, honest_ops, params, o);
            rfin[m].push_back(v);
            const auto st = status_books.at(m).classify(j, v, params);
            rows_by_mode[col++].push_back(
                {std::to_string(t), "i", "j", rep::to_string(m), fmt(v), rep::to_string(st)});
        }
    }
    for (auto& rows : rows_by_mode)
        for (auto& r : rows) table.add_row(std::move(r));

    PresetResult out;
    out.name = "reputation-timeline";
    out.tables.emplace("reputation", std::move(table));

    // minute m lives at index m - 1
    auto at = [&](ReputationMode m, int minute) { return rfin[m][static_cast<std::size_t>(minute - 1)]; };
    {
        bool ok = true;
        std::ostringstream d;
        for (auto m : all_modes) {
            ok = ok && at(m, 50) > 0.5;
            d << rep::to_string(m) << "=" << fmt(at(m, 50)) << " ";
        }
        out.checks.push_back(make_check("minute50_high", ok, d.str()));
    }
    {
        bool ok = true;
        std::string detail = "all modes";
        for (auto m : all_modes)
            for (int t = 51; t <= 80; ++t)
                if (!(at(m, t) <= at(m, t - 1))) {
                    ok = false;
                    detail = std::string(rep::to_string(m)) + " rises at minute " + std::to_string(t);
                }
        out.checks.push_back(make_check("decline_51_80", ok, detail));
    }
    {
        bool ok = true;
        std::string detail = "pointwise on 50..100";
        for (int t = 50; t <= 100; ++t) {
            const double tw = at(ReputationMode::twsl_like, t);
            if (at(ReputationMode::tpfs, t) > tw || at(ReputationMode::tp_only, t) > tw) {
                ok = false;
                detail = "violated at minute " + std::to_string(t);
                break;
            }
        }
        out.checks.push_back(make_check("tp_family_below_twsl", ok, detail));
    }
    if (series) series->rfin = std::move(rfin);
    return out;
}

// ---------------------------------------------------------------------------

PresetResult neighbor_sweep(SweepSeries* series) {
    const rep::TpfsParams params;
    const VehicleId i{"i"}, j{"j"};
    constexpr int total = 30;

    SweepSeries s;
    io::Table table{{"truthful_pct", "mode", "rfin"}, {}};
    for (int pct = 0; pct <= 100; pct += 10) {
        const int truthful = total * pct / 100;
        rep::ReputationLedger led(params);
        std::vector<rep::Opinion> ops;
        for (int k = 0; k < total; ++k) {
            const VehicleId r{"r" + std::to_string(k)};
            const bool honest = k < truthful;
            // Truthful recommenders earned i's trust; the others did not.
            if (honest) {
                for (int n = 0; n < 10; ++n) rate(led, i, r, true, 0.0);
            } else {
                rate(led, i, r, true, 0.0);
                for (int n = 0; n < 3; ++n) rate(led, i, r, false, 0.0);
            }
            for (int n = 0; n < 8; ++n) rate(led, r, j, true, 0.0);
            // Untruthful recommenders vouch for j at full strength.
            ops.push_back({r, j, led.direct_at(i, r, 0.0), honest ? led.direct_at(r, j, 0.0) : 1.0});
        }
        s.truthful_pct.push_back(pct);
        for (auto m : all_modes) {
            rep::EvalOptions o{m, rep::SimilarityWeighting::uniform, 0.0};
            const double v = rep::final_reputation(i, j, led, ops, params, o);
            s.rfin[m].push_back(v);
            table.add_row({std::to_string(pct), rep::to_string(m), fmt(v)});
        }
    }

    PresetResult out;
    out.name = "neighbor-sweep";
    out.tables.emplace("neighbor_sweep", std::move(table));
    {
        bool ok = true;
        for (auto m : all_modes)
            for (std::size_t k = 1; k < s.truthful_pct.size(); ++k)
                ok = ok && s.rfin[m][k] >= s.rfin[m][k - 1];
        out.checks.push_back(make_check("monotone_in_truthful_share", ok, "all modes"));
    }
    {
        bool ok = true;
        for (std::size_t k = 0; k < s.truthful_pct.size(); ++k)
            ok = ok && s.rfin[ReputationMode::tp_only][k] <= s.rfin[ReputationMode::twsl_like][k] &&
                 s.rfin[ReputationMode::tpfs][k] <= s.rfin[ReputationMode::twsl_like][k];
        out.checks.push_back(make_check("tp_below_twsl", ok, "pointwise"));
    }
    {
        bool ok = true;
        for (auto m : all_modes) {
            const auto& v = s.rfin[m];
            ok = ok && v.back() == *std::max_element(v.begin(), v.end());
        }
        out.checks.push_back(make_check("full_truth_is_max", ok, "all modes"));
    }
    if (series) *series = std::move(s);
    return out;
}

// ---------------------------------------------------------------------------

PresetResult ptype_field(std::uint64_t seed, FieldSeries* series) {
    const rep::TpfsParams params;
    rep::ReputationLedger led(params);
    Rng rng(mix_seed(seed, 77));

    const VehicleId i{"i"};
    constexpr int server_count = 15;
    constexpr int neighbor_count = 10;
    constexpr double switch_at = 50.0;
    constexpr double fake_rate = 0.9;

    std::vector<VehicleId> servers, neighbors;
    for (int k = 1; k <= server_count; ++k) servers.emplace_back("s" + std::to_string(k));
    for (int k = 1; k <= neighbor_count; ++k) neighbors.emplace_back("n" + std::to_string(k));
    const VehicleId& ptype = servers.front();

    auto serve = [&](const VehicleId& server, double t) {
        if (server == ptype && t > switch_at) return !rng.bernoulli(fake_rate);
        return true;
    };
    // After its switch the P-type vehicle also rates dishonestly.
    auto rating_of = [&](const VehicleId& rater, bool real, double t) {
        return (rater == ptype && t > switch_at) ? !real : real;
    };

    std::vector<VehicleId> clients = neighbors;
    clients.insert(clients.begin(), i);
    for (int t = 1; t <= 100; ++t) {
        const double now = t;
        for (const auto& c : clients) {
            const auto& s = servers[rng.index(servers.size())];
            rate(led, c, s, serve(s, now), now);
        }
        for (const auto& s : servers) {
            auto other = servers[rng.index(servers.size() - 1)];
            if (other == s) other = servers.back();
            rate(led, s, other, rating_of(s, serve(other, now), now), now);
        }
        rate(led, i, neighbors[rng.index(neighbors.size())], true, now);
    }

    const double now = 100.0;
    FieldSeries fs;
    io::Table table{{"server", "mode", "rfin"}, {}};
    for (const auto& s : servers) fs.servers.push_back(s.value);
    for (auto m : all_modes) {
        for (const auto& s : servers) {
            auto ops = rep::gather_opinions(i, s, clients, led, now);
            rep::EvalOptions o{m, rep::SimilarityWeighting::uniform, now};
            const double v = rep::final_reputation(i, s, led, ops, params, o);
            fs.rfin[m].push_back(v);
            table.add_row({s.value, rep::to_string(m), fmt(v)});
        }
    }

    PresetResult out;
    out.name = "ptype-field";
    out.tables.emplace("ptype_field", std::move(table));
    const auto& tpfs = fs.rfin[ReputationMode::tpfs];
    const auto& tp = fs.rfin[ReputationMode::tp_only];
    const auto& tw = fs.rfin[ReputationMode::twsl_like];
    {
        const bool ok = std::min_element(tpfs.begin(), tpfs.end()) == tpfs.begin() &&
                        std::count(tpfs.begin(), tpfs.end(), tpfs.front()) == 1;
        out.checks.push_back(make_check("ptype_lowest_under_tpfs", ok, "s1=" + fmt(tpfs.front())));
    }
    out.checks.push_back(make_check("ptype_tpfs_below_tp_only", tpfs[0] < tp[0],
                                    fmt(tpfs[0]) + " vs " + fmt(tp[0])));
    out.checks.push_back(make_check("ptype_tpfs_below_twsl", tpfs[0] < tw[0],
                                    fmt(tpfs[0]) + " vs " + fmt(tw[0])));
    {
        double worst = 0.0;
        for (std::size_t k = 1; k < tpfs.size(); ++k) worst = std::max(worst, std::abs(tpfs[k] - tw[k]));
        out.checks.push_back(make_check("honest_tpfs_near_twsl", worst <= 0.1, "max gap " + fmt(worst)));
    }
    if (series) *series = std::move(fs);
    return out;
}

// ---------------------------------------------------------------------------

PresetResult queueing_validation(const QueueingValidationOptions& opts) {
    des::DesConfig cfg;
    cfg.net.lambda0 = opts.lambda0;
    cfg.net.batch_size = opts.batch_size;
    cfg.net.orderer_mode = opts.orderer_mode;
    cfg.transactions = opts.transactions;
    cfg.warmup = std::min<std::size_t>(10'000, opts.transactions / 10);
    cfg.seed = opts.seed;
    cfg.record_samples = true;

    // Closed-form comparison is always at block granularity; the literal
    // reading has no steady state to compare against for M >= 2.
    queueing::QueueNetworkConfig closed = cfg.net;
    closed.orderer_mode = queueing::OrdererMode::block_granularity;
    const auto cf = queueing::performance(closed);
    const auto sim = des::run_pipeline(cfg);

    des::DesConfig big = cfg;
    big.net.batch_size = 100;
    big.record_samples = false;
    const auto sim100 = des::run_pipeline(big);

    const double expect_thr = cfg.net.q23 * cfg.net.q01 * cfg.net.lambda0;
    auto rel = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); };

    io::Table dev{{"metric", "des", "closed_form", "rel_error"}, {}};
    auto row = [&](const char* name, double d, double c) {
        dev.add_row({name, fmt(d), fmt(c), fmt(rel(d, c))});
    };
    row("D0", sim.d0, cf.d0);
    row("D1", sim.d1, cf.d1);
    row("D2", sim.d2, cf.d2);
    row("D", sim.confirmation, cf.d);
    row("N0", sim.n0, cf.n0);
    row("N2", sim.n2, cf.n2);
    row("H_valid", sim.throughput_valid, expect_thr);
    dev.add_row({"D_se", fmt(sim.confirmation_se), "", ""});
    dev.add_row({"D_M100", fmt(sim100.confirmation), "", ""});

    io::Table perf{{"tx_id", "t_arrive", "t_endorsed", "t_ordered", "t_committed", "valid"}, {}};
    const std::size_t keep = std::min<std::size_t>(sim.samples.size(), 1000);
    for (std::size_t k = 0; k < keep; ++k) {
        const auto& s = sim.samples[k];
        perf.add_row({std::to_string(s.tx), fmt(s.t_arrive), fmt(s.t_endorsed), fmt(s.t_ordered),
                      fmt(s.t_committed), s.valid ? "true" : "false"});
    }

    PresetResult out;
    out.name = "queueing-validation";
    out.tables.emplace("queueing_validation", std::move(dev));
    out.tables.emplace("perf", std::move(perf));

    out.checks.push_back(make_check("d0_within_5pct", rel(sim.d0, cf.d0) <= 0.05, fmt(rel(sim.d0, cf.d0))));
    out.checks.push_back(make_check("d2_within_5pct", rel(sim.d2, cf.d2) <= 0.05, fmt(rel(sim.d2, cf.d2))));
    out.checks.push_back(make_check("throughput_within_5pct", rel(sim.throughput_valid, expect_thr) <= 0.05,
                                    fmt(sim.throughput_valid) + " vs " + fmt(expect_thr)));
    if (opts.batch_size == 10)
        out.checks.push_back(make_check("confirmation_in_band",
                                        sim.confirmation >= 0.28 && sim.confirmation <= 0.35,
                                        fmt(sim.confirmation) + " s in [0.28, 0.35]"));
    if (opts.batch_size < 100)
        out.checks.push_back(make_check("larger_batch_slower", sim.confirmation < sim100.confirmation,
                                        fmt(sim.confirmation) + " < " + fmt(sim100.confirmation)));
    return out;
}

std::optional<PresetResult> run_preset(const std::string& name, std::uint64_t seed,
                                       const QueueingValidationOptions& qopts) {
    if (name == "reputation-timeline") return reputation_timeline();
    if (name == "neighbor-sweep") return neighbor_sweep();
    if (name == "ptype-field") return ptype_field(seed);
    if (name == "queueing-validation") {
        auto o = qopts;
        o.seed = seed;
        return queueing_validation(o);
    }
    return std::nullopt;
}

} // namespace rcchain::presets
