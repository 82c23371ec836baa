#include "cli.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "rcchain/ledger/export.hpp"
#include "rcchain/pipeline_des.hpp"
#include "rcchain/presets.hpp"
#include "rcchain/queueing.hpp"
#include "rcchain/scenario.hpp"
#include "rcchain/table.hpp"

namespace rcchain::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
    std::optional<std::string> mode;
    std::optional<std::string> orderer_mode;
    std::optional<double> lambda0;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> transactions;
    std::string preset_name;
    std::string ledger_path;
};

class CliError : public std::runtime_error {
public:
    CliError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

fs::path out_dir(const Options& o) {
    if (const char* env = std::getenv("RCCHAIN_OUT"); env && *env) return env;
    return o.out;
}

io::Format format_of(const Options& o) {
    return o.format == "json" ? io::Format::json : io::Format::csv;
}

std::string table_file(const std::string& stem, io::Format f) {
    return stem + (f == io::Format::csv ? ".csv" : ".json");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(io_or_parse, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Queueing grid used by analyze and compare.
struct Grid {
    queueing::QueueNetworkConfig base;
    std::vector<double> lambdas;
    std::vector<std::size_t> batch_sizes;
    std::size_t transactions = 200'000;
    std::uint64_t seed = presets::default_seed;
};

Grid default_grid() {
    Grid g;
    for (int l = 10; l <= 110; l += 10) g.lambdas.push_back(l);
    g.batch_sizes = {10, 50, 100};
    return g;
}

Grid load_grid(const std::string& path) {
    const auto text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CliError(usage_or_config, std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) throw CliError(usage_or_config, "config must be a JSON object");
    static const std::set<std::string> allowed{"lambda0", "batch_size", "q01", "q23", "mu0", "mu2",
                                               "orderer_mode", "transactions", "seed"};
    for (const auto& [k, _] : doc.items())
        if (!allowed.contains(k)) throw CliError(usage_or_config, "unknown config key '" + k + "'");

    Grid g = default_grid();
    auto number = [&](const char* key, double& dst) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_number()) throw CliError(usage_or_config, std::string("'") + key + "' must be a number");
        dst = doc[key].get<double>();
    };
    if (doc.contains("lambda0")) {
        g.lambdas.clear();
        const auto& v = doc["lambda0"];
        if (v.is_number()) g.lambdas.push_back(v.get<double>());
        else if (v.is_array() && !v.empty()) {
            for (const auto& x : v) {
                if (!x.is_number()) throw CliError(usage_or_config, "'lambda0' entries must be numbers");
                g.lambdas.push_back(x.get<double>());
            }
        } else throw CliError(usage_or_config, "'lambda0' must be a number or nonempty array");
    }
    if (doc.contains("batch_size")) {
        g.batch_sizes.clear();
        const auto& v = doc["batch_size"];
        auto take = [&](const json& x) {
            if (!x.is_number_unsigned() || x.get<std::size_t>() == 0)
                throw CliError(usage_or_config, "'batch_size' entries must be positive integers");
            g.batch_sizes.push_back(x.get<std::size_t>());
        };
        if (v.is_array() && !v.empty()) for (const auto& x : v) take(x);
        else if (!v.is_array()) take(v);
        else throw CliError(usage_or_config, "'batch_size' must not be empty");
    }
    number("q01", g.base.q01);
    number("q23", g.base.q23);
    number("mu0", g.base.mu0);
    number("mu2", g.base.mu2);
    if (doc.contains("orderer_mode")) {
        auto m = doc["orderer_mode"].is_string()
                     ? queueing::parse_orderer_mode(doc["orderer_mode"].get<std::string>())
                     : std::nullopt;
        if (!m) throw CliError(usage_or_config, "unknown orderer_mode");
        g.base.orderer_mode = *m;
    }
    if (doc.contains("transactions")) {
        if (!doc["transactions"].is_number_unsigned())
            throw CliError(usage_or_config, "'transactions' must be a positive integer");
        g.transactions = doc["transactions"].get<std::size_t>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw CliError(usage_or_config, "'seed' must be an unsigned integer");
        g.seed = doc["seed"].get<std::uint64_t>();
    }
    return g;
}

Grid grid_from(const Options& o) {
    Grid g = o.config.empty() ? default_grid() : load_grid(o.config);
    if (o.lambda0) g.lambdas = {*o.lambda0};
    if (o.batch_size) g.batch_sizes = {*o.batch_size};
    if (o.transactions) g.transactions = *o.transactions;
    if (o.seed) g.seed = *o.seed;
    if (o.orderer_mode) g.base.orderer_mode = *queueing::parse_orderer_mode(*o.orderer_mode);
    try {
        for (double l : g.lambdas) {
            auto c = g.base;
            c.lambda0 = l;
            c.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw CliError(usage_or_config, e.what());
    }
    return g;
}

io::Table queueing_table(const std::vector<queueing::SweepRow>& rows) {
    io::Table t{{"lambda0", "M", "mode", "R0", "R1", "R2", "stable", "N0", "N1", "N2", "N", "D0", "D1",
                 "D2", "D", "H_eq31", "H_flow"},
                {}};
    auto f = io::format_number;
    for (const auto& r : rows) {
        std::vector<std::string> cells{f(r.lambda0), std::to_string(r.batch_size),
                                       queueing::to_string(r.mode), f(r.util.r0), f(r.util.r1),
                                       f(r.util.r2), r.util.stable ? "true" : "false"};
        if (r.metrics) {
            const auto& m = *r.metrics;
            for (double v : {m.n0, m.n1, m.n2, m.n, m.d0, m.d1, m.d2, m.d, m.throughput_eq31,
                             m.throughput_flow})
                cells.push_back(f(v));
        } else {
            cells.resize(t.columns.size());
        }
        t.add_row(std::move(cells));
    }
    return t;
}

int cmd_analyze(const Options& o, std::ostream& out) {
    const Grid g = grid_from(o);
    const auto rows = queueing::sweep(g.base, g.lambdas, g.batch_sizes);
    const auto fmt = format_of(o);

    json summary = {{"rows", rows.size()}, {"stable_rows", 0}, {"unstable", json::array()}};
    std::size_t stable = 0;
    for (const auto& r : rows) {
        if (r.util.stable) {
            ++stable;
            continue;
        }
        summary["unstable"].push_back({{"lambda0", r.lambda0},
                                       {"M", r.batch_size},
                                       {"node", r.util.unstable_node()}});
    }
    summary["stable_rows"] = stable;

    io::OutputSet files;
    const auto dir = out_dir(o);
    files.add(dir / table_file("queueing_report", fmt), queueing_table(rows).render(fmt));
    files.add(dir / "stability_summary.json", summary.dump(2) + "\n");
    files.commit();
    out << "analyze: " << rows.size() << " rows (" << stable << " stable) -> " << dir.string() << "\n";
    return ok;
}

scenario::ScenarioConfig scenario_from(const Options& o) {
    if (o.config.empty()) throw CliError(usage_or_config, "--config is required");
    if (!fs::exists(o.config)) throw CliError(io_or_parse, "cannot read " + o.config);
    auto cfg = scenario::load_scenario_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.mode) cfg.mode = *reputation::parse_mode(*o.mode);
    return cfg;
}

int cmd_simulate(const Options& o, std::ostream& out, bool ledger_only) {
    const auto cfg = scenario_from(o);
    const auto report = scenario::run_scenario(cfg);
    const auto fmt = format_of(o);
    const auto dir = out_dir(o);

    io::OutputSet files;
    files.add(dir / "ledger.jsonl", report.ledger_export());
    files.add(dir / "world_state.json", report.world_state_export());
    if (!ledger_only) {
        files.add(dir / table_file("reputation", fmt), report.reputation_table().render(fmt));
        files.add(dir / table_file("missions", fmt), report.missions_table().render(fmt));
        files.add(dir / table_file("perf", fmt), report.perf_table().render(fmt));
        files.add(dir / "summary.json", report.summary_json());
    }
    files.commit();
    out << (ledger_only ? "ledger-export: " : "simulate: ") << report.summary.missions_created
        << " missions, " << report.chain.blocks().size() - 1 << " blocks -> " << dir.string() << "\n";
    if (!report.summary.replicas_consistent || !report.summary.traceable) {
        out << "integrity: replicas_consistent=" << report.summary.replicas_consistent
            << " traceable=" << report.summary.traceable << "\n";
        return integrity;
    }
    return ok;
}

int cmd_preset(const Options& o, std::ostream& out) {
    const auto& names = presets::preset_names();
    if (std::find(names.begin(), names.end(), o.preset_name) == names.end()) {
        std::string list;
        for (const auto& n : names) list += "\n  " + n;
        throw CliError(usage_or_config, "unknown preset '" + o.preset_name + "'; available:" + list);
    }
    presets::QueueingValidationOptions q;
    if (o.lambda0) q.lambda0 = *o.lambda0;
    if (o.batch_size) q.batch_size = *o.batch_size;
    if (o.transactions) q.transactions = *o.transactions;
    if (o.orderer_mode) q.orderer_mode = *queueing::parse_orderer_mode(*o.orderer_mode);
    const auto result = *presets::run_preset(o.preset_name, o.seed.value_or(presets::default_seed), q);

    const auto fmt = format_of(o);
    const auto dir = out_dir(o);
    io::OutputSet files;
    for (const auto& [stem, table] : result.tables) files.add(dir / table_file(stem, fmt), table.render(fmt));
    files.add(dir / table_file("checks", fmt), result.checks_table().render(fmt));
    files.commit();
    for (const auto& c : result.checks)
        out << (c.passed ? "PASS " : "FAIL ") << result.name << "/" << c.name << ": " << c.detail << "\n";
    return result.passed() ? ok : assertion;
}

int cmd_ledger_verify(const Options& o, std::ostream& out) {
    std::ifstream in(o.ledger_path, std::ios::binary);
    if (!in) throw CliError(io_or_parse, "cannot read " + o.ledger_path);
    ledger::VerifyResult v;
    try {
        v = ledger::verify_export(in);
    } catch (const ledger::ExportParseError& e) {
        throw CliError(io_or_parse, std::string("parse error: ") + e.what());
    }
    if (v.ok) {
        out << "ok\n";
        return ok;
    }
    out << "first bad block " << *v.first_bad_block << " (" << v.reason << ")\n";
    return integrity;
}

int cmd_compare(const Options& o, std::ostream& out) {
    const Grid g = grid_from(o);
    io::Table t{{"lambda0", "M", "stable", "D_des", "D_closed_form", "D0_des", "D0_closed_form", "D2_des",
                 "D2_closed_form", "H_valid_des", "H_flow_closed_form", "D_rel_error"},
                {}};
    auto f = io::format_number;
    for (std::size_t m : g.batch_sizes) {
        for (double l : g.lambdas) {
            des::DesConfig c;
            c.net = g.base;
            c.net.lambda0 = l;
            c.net.batch_size = m;
            c.net.orderer_mode = queueing::OrdererMode::block_granularity;
            c.transactions = g.transactions;
            c.warmup = std::min<std::size_t>(10'000, g.transactions / 10);
            c.seed = g.seed;
            const auto u = queueing::utilizations(c.net);
            if (!u.stable) {
                t.add_row({f(l), std::to_string(m), "false", "", "", "", "", "", "", "", "", ""});
                continue;
            }
            const auto cf = queueing::performance(c.net);
            const auto s = des::run_pipeline(c);
            t.add_row({f(l), std::to_string(m), "true", f(s.confirmation), f(cf.d), f(s.d0), f(cf.d0),
                       f(s.d2), f(cf.d2), f(s.throughput_valid), f(c.net.q23 * c.net.q01 * l),
                       f(std::abs(s.confirmation - cf.d) / cf.d)});
        }
    }
    const auto fmt = format_of(o);
    const auto dir = out_dir(o);
    io::write_atomic(dir / table_file("compare", fmt), t.render(fmt));
    out << "compare: " << t.rows.size() << " points -> " << dir.string() << "\n";
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"rcchain: reputation-based consortium chain simulator and analytics"};
    app.require_subcommand(1, 1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "config file (JSON)");
        sub->add_option("--out", o.out, "output directory (RCCHAIN_OUT overrides)");
        sub->add_option("--seed", o.seed, "seed override");
        sub->add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--mode", o.mode, "reputation mode")
            ->check(CLI::IsMember({"TPFS", "TP_only", "TWSL_like"}));
        sub->add_option("--orderer-mode", o.orderer_mode, "orderer model")
            ->check(CLI::IsMember({"block_granularity", "literal_eq19"}));
    };
    auto qflags = [&](CLI::App* sub) {
        sub->add_option("--lambda0", o.lambda0, "external arrival rate (tx/s)");
        sub->add_option("--batch-size", o.batch_size, "batch size M")->check(CLI::PositiveNumber);
        sub->add_option("--transactions", o.transactions, "DES arrivals")->check(CLI::PositiveNumber);
    };

    auto* analyze = app.add_subcommand("analyze", "closed-form queueing report");
    common(analyze);
    qflags(analyze);
    auto* simulate = app.add_subcommand("simulate", "run a scenario");
    common(simulate);
    auto* preset = app.add_subcommand("preset", "run a canned experiment");
    common(preset);
    qflags(preset);
    preset->add_option("name", o.preset_name, "preset name")->required();
    auto* verify = app.add_subcommand("ledger-verify", "audit a ledger export");
    verify->add_option("path", o.ledger_path, "ledger export (JSON lines)")->required();
    auto* exporter = app.add_subcommand("ledger-export", "run a scenario and export its ledger");
    common(exporter);
    auto* compare = app.add_subcommand("compare", "DES against closed form over a grid");
    common(compare);
    qflags(compare);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return usage_or_config;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out, false);
        if (preset->parsed()) return cmd_preset(o, out);
        if (verify->parsed()) return cmd_ledger_verify(o, out);
        if (exporter->parsed()) return cmd_simulate(o, out, true);
        if (compare->parsed()) return cmd_compare(o, out);
    } catch (const CliError& e) {
        err << "error: " << e.what() << "\n";
        return e.code();
    } catch (const scenario::ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return usage_or_config;
    } catch (const queueing::InstabilityError& e) {
        err << "refused: " << e.what() << "\n";
        return instability;
    } catch (const ledger::IntegrityError& e) {
        err << "integrity failure: " << e.what() << "\n";
        return integrity;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return io_or_parse;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return io_or_parse;
    }
    return usage_or_config;
}

} // namespace rcchain::cli
