#pragma once
// Command-line front end. One subcommand per experiment:
//
//   synth     synthetic towers, residents and raw records
//   detect    raw records -> activity table and detected homes
//   agree     agreement (SMC) between HDAs per stream
//   evaluate  accuracy against the ground truth, distance error
//   minimize  accuracy under per-user record subsampling
//   report    every metric from a released-format bundle
//
// Exit codes: 0 success, 1 other failure, 2 parse / I/O error, 3 schema
// error, 64 usage error. Failures print one JSON object on stderr.

#include "homeloc/homeloc.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace homeloc::cli {

using nlohmann::json;

struct Options {
    std::string cdr, xdr, cpr, towers, ground_truth, home_points, roster, activity;
    std::string hda = "all";
    std::string stream = "all";
    int k = 1;
    std::string mode = "three-nearest";
    int night_start = 19;
    int night_end = 7;
    double radius_km = 1.0;
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    unsigned trials = 5;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::string format = "csv";
    std::string out = ".";
    std::string window_start, window_end;
    std::vector<std::string> cpr_exclude;
    bool lenient = false;
    bool no_callee = false;
    bool exclude_inactive = false;
    bool undetected_agree = false;
    bool strict = false;

    // synth
    std::size_t n_users = 65;
    std::size_t n_towers = 200;
    double night_home_prob = 0.85;
    bool decoy = false;
    double cdr_rate = 6.0, xdr_rate = 25.0, cpr_rate = 150.0;
    double burstiness = 1.5;
};

// Outputs and the manifest written next to them.
class Run {
public:
    Run(std::string command, const Options& opt, std::vector<std::string> argv)
        : command_(std::move(command)), opt_(opt), argv_(std::move(argv)), started_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(opt_.out);
    }

    void input(const std::string& path) {
        if (path.empty()) return;
        inputs_.push_back({{"path", path}, {"sha256", io::sha256_hex(csv::read_file(path))}});
    }

    void input(const std::string& path, std::string_view content) {
        inputs_.push_back({{"path", path}, {"sha256", io::sha256_hex(content)}});
    }

    void output(const std::string& name, const std::string& content) {
        const auto path = (std::filesystem::path(opt_.out) / name).string();
        csv::write_file(path, content);
        outputs_.push_back({{"path", path}, {"sha256", io::sha256_hex(content)}});
    }

    void finish(json config) {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        json manifest{{"command", command_}, {"argv", argv_},       {"config", std::move(config)},
                      {"seed", opt_.seed},   {"inputs", inputs_},   {"outputs", outputs_},
                      {"duration_s", seconds}};
        csv::write_file((std::filesystem::path(opt_.out) / "run_manifest.json").string(), manifest.dump(2) + "\n");
    }

private:
    std::string command_;
    const Options& opt_;
    std::vector<std::string> argv_;
    std::chrono::steady_clock::time_point started_;
    json inputs_ = json::array();
    json outputs_ = json::array();
};

inline json config_json(const Options& o) {
    return {{"hda", o.hda},
            {"stream", o.stream},
            {"k", o.k},
            {"mode", o.mode},
            {"night_start", o.night_start},
            {"night_end", o.night_end},
            {"radius_km", o.radius_km},
            {"fractions", o.fractions},
            {"trials", o.trials},
            {"seed", o.seed},
            {"jobs", o.jobs},
            {"format", o.format},
            {"window_start", o.window_start},
            {"window_end", o.window_end},
            {"cpr_exclude", o.cpr_exclude},
            {"lenient", o.lenient},
            {"include_callee", !o.no_callee},
            {"exclude_inactive", o.exclude_inactive},
            {"undetected_agree", o.undetected_agree}};
}

inline std::vector<Stream> selected_streams(const Options& o) {
    if (o.stream == "all") return {kAllStreams.begin(), kAllStreams.end()};
    auto s = parse_stream_name(o.stream);
    if (!s) throw Error(ErrorKind::ConfigInvalid, "unknown stream '" + o.stream + "'");
    return {*s};
}

inline std::vector<HdaId> selected_hdas(const Options& o) {
    if (o.hda == "all") return {kAllHdas.begin(), kAllHdas.end()};
    auto h = parse_hda_label(o.hda);
    if (!h) throw Error(ErrorKind::ConfigInvalid, "unknown HDA '" + o.hda + "'");
    return {*h};
}

inline TruthMode selected_mode(const Options& o) {
    auto m = parse_mode(o.mode);
    if (!m) throw Error(ErrorKind::ConfigInvalid, "unknown mode '" + o.mode + "'");
    return *m;
}

inline NightWindow night_of(const Options& o) {
    NightWindow n{o.night_start, o.night_end};
    n.validate();
    return n;
}

inline bool json_format(const Options& o) {
    if (o.format != "csv" && o.format != "json") throw Error(ErrorKind::ConfigInvalid, "format must be csv or json");
    return o.format == "json";
}

inline TowerRegistry load_registry(const Options& o) {
    if (o.towers.empty()) throw Error(ErrorKind::ConfigInvalid, "--towers is required");
    return TowerRegistry(io::parse_towers(csv::read_file(o.towers), o.towers));
}

inline std::vector<GroundTruthEntry> load_truth(const Options& o, bool required) {
    if (o.ground_truth.empty()) {
        if (required) throw Error(ErrorKind::MissingGroundTruth, "--ground-truth is required");
        return {};
    }
    auto truth = io::parse_ground_truth(csv::read_file(o.ground_truth), o.ground_truth);
    if (!o.home_points.empty()) {
        const auto homes = io::parse_home_points(csv::read_file(o.home_points), o.home_points);
        for (auto& g : truth) {
            auto it = homes.find(g.device);
            if (it != homes.end()) g.home_point = it->second;
        }
    }
    return truth;
}

struct RawData {
    StreamEvents events;
    std::map<Stream, ObservationWindow> windows;
    std::map<Stream, NormalizeStats> stats;
};

// Reads and normalizes the selected raw streams.
inline RawData load_raw(const Options& o, const TowerRegistry& registry, Run& run) {
    const std::map<Stream, const std::string*> paths{
        {Stream::CDR, &o.cdr}, {Stream::XDR, &o.xdr}, {Stream::CPR, &o.cpr}};
    const bool explicit_stream = o.stream != "all";

    std::vector<CdrRecord> cdr;
    std::vector<XdrRecord> xdr;
    std::vector<CprRecord> cpr;
    std::vector<Stream> streams;
    for (Stream s : selected_streams(o)) {
        const std::string& path = *paths.at(s);
        if (path.empty()) {
            if (explicit_stream) {
                throw Error(ErrorKind::ConfigInvalid,
                            "--" + std::string(s == Stream::CDR ? "cdr" : s == Stream::XDR ? "xdr" : "cpr") +
                                " is required for the selected stream");
            }
            continue;
        }
        const auto text = csv::read_file(path);
        run.input(path, text);
        if (s == Stream::CDR) cdr = io::parse_cdr(text, path);
        if (s == Stream::XDR) xdr = io::parse_xdr(text, path);
        if (s == Stream::CPR) cpr = io::parse_cpr(text, path);
        streams.push_back(s);
    }
    if (streams.empty()) throw Error(ErrorKind::ConfigInvalid, "no raw record files given (--cdr/--xdr/--cpr)");

    // Window: explicit bounds, otherwise the dates spanned by all records.
    std::optional<Date> start, end;
    if (!o.window_start.empty()) start = require_date(o.window_start);
    if (!o.window_end.empty()) end = require_date(o.window_end);
    auto widen = [&](Timestamp ts) {
        const Date d = date_of(ts);
        if (o.window_start.empty() && (!start || day_number(d) < day_number(*start))) start = d;
        if (o.window_end.empty() && (!end || day_number(d) > day_number(*end))) end = d;
    };
    for (const auto& r : cdr) widen(r.timestamp);
    for (const auto& r : xdr) widen(r.timestamp);
    for (const auto& r : cpr) widen(r.timestamp);
    if (!start || !end) {
        const Date fallback = start ? *start : end ? *end : Date{std::chrono::year{1970}, std::chrono::January,
                                                                   std::chrono::day{1}};
        if (!start) start = fallback;
        if (!end) end = fallback;
    }
    std::vector<Date> excluded;
    for (const auto& d : o.cpr_exclude) excluded.push_back(require_date(d));

    NormalizeOptions nopt;
    nopt.strict = !o.lenient;
    nopt.include_callee = !o.no_callee;
    const std::string& roster_path = !o.roster.empty() ? o.roster : o.ground_truth;
    if (!roster_path.empty()) {
        const auto t = csv::read(roster_path);
        const auto col = csv::resolve_columns(t, {{"device", "user"}});
        nopt.roster.emplace();
        for (const auto& row : t.rows) nopt.roster->insert(csv::field(t, row, col[0]));
    }

    RawData raw;
    for (Stream s : streams) {
        const auto window = s == Stream::CPR ? ObservationWindow::with_exclusions(*start, *end, excluded)
                                             : ObservationWindow(*start, *end);
        NormalizedStream ns;
        if (s == Stream::CDR) ns = normalize_stream(cdr, window, registry, nopt);
        if (s == Stream::XDR) ns = normalize_stream(xdr, window, registry, nopt);
        if (s == Stream::CPR) ns = normalize_stream(cpr, window, registry, nopt);
        raw.events.emplace(s, std::move(ns.events));
        raw.stats.emplace(s, ns.stats);
        raw.windows.emplace(s, window);
    }
    return raw;
}

inline json stats_json(const std::map<Stream, NormalizeStats>& stats) {
    json j = json::object();
    for (const auto& [s, st] : stats) {
        j[std::string(stream_label(s))] = {{"input_records", st.input_records},
                                           {"emitted_events", st.emitted_events},
                                           {"dropped_outside_window", st.dropped_outside_window},
                                           {"skipped_unknown_tower", st.skipped_unknown_tower},
                                           {"skipped_not_in_roster", st.skipped_not_in_roster}};
    }
    return j;
}

// Detections either from an activity file or from raw records.
inline DetectionTable obtain_detections(const Options& o, const TowerRegistry& registry, Run& run,
                                        json& extra) {
    if (!o.activity.empty()) {
        run.input(o.activity);
        const auto rows = io::parse_activity(csv::read_file(o.activity), o.activity);
        auto table = detections_from_activity(rows);
        const auto streams = selected_streams(o);
        std::erase_if(table, [&](const auto& kv) {
            return std::find(streams.begin(), streams.end(), kv.first.first) == streams.end();
        });
        return table;
    }
    const auto raw = load_raw(o, registry, run);
    extra["normalization"] = stats_json(raw.stats);
    const HdaContext ctx(registry, night_of(o), o.radius_km);
    return detect_all(raw.events, ctx, kAllHdas, o.jobs, &raw.windows);
}

inline void cmd_synth(const Options& o, Run& run) {
    SynthConfig cfg;
    cfg.n_users = o.n_users;
    cfg.n_towers = o.n_towers;
    cfg.night_home_prob = o.night_home_prob;
    cfg.decoy_night_tower = o.decoy;
    cfg.rates = {o.cdr_rate, o.xdr_rate, o.cpr_rate};
    cfg.burstiness = o.burstiness;
    cfg.night = night_of(o);
    cfg.seed = o.seed;
    if (!o.window_start.empty()) cfg.window_start = require_date(o.window_start);
    if (!o.window_end.empty()) cfg.window_end = require_date(o.window_end);
    if (!o.cpr_exclude.empty()) {
        cfg.cpr_excluded.clear();
        for (const auto& d : o.cpr_exclude) cfg.cpr_excluded.push_back(require_date(d));
    } else if (!o.window_start.empty() || !o.window_end.empty()) {
        std::erase_if(cfg.cpr_excluded, [&](Date d) {
            return day_number(d) < day_number(cfg.window_start) || day_number(d) > day_number(cfg.window_end);
        });
    }
    const auto world = generate_world(cfg);
    const auto truth = ground_truth_from_addresses(world.home_points(), world.registry);

    run.output("towers.csv", io::write_towers(world.registry.towers()));
    run.output("cdr.csv", io::write_cdr(world.traces.cdr));
    run.output("xdr.csv", io::write_xdr(world.traces.xdr));
    run.output("cpr.csv", io::write_cpr(world.traces.cpr));
    run.output("ground_truth.csv", io::write_ground_truth(truth));
    run.output("home_points.csv", io::write_home_points(world.home_points()));
}

inline void cmd_detect(const Options& o, Run& run, json& extra) {
    run.input(o.towers);
    const auto registry = load_registry(o);
    if (!o.roster.empty()) run.input(o.roster);
    else run.input(o.ground_truth);
    const auto raw = load_raw(o, registry, run);
    extra["normalization"] = stats_json(raw.stats);
    const HdaContext ctx(registry, night_of(o), o.radius_km);
    const auto hdas = selected_hdas(o);
    const auto table = detect_all(raw.events, ctx, hdas, o.jobs, &raw.windows);
    run.output("activity.csv", io::write_activity(build_activity_table(table)));
    if (json_format(o)) {
        json arr = json::array();
        for (const auto& [cell, users] : table) {
            for (const auto& [user, ranking] : users) {
                json row{{"device", user}, {"stream", stream_label(cell.first)}, {"HDA", hda_label(cell.second)}};
                row["home"] = ranking.empty() ? json(nullptr) : json(ranking.front().tower);
                row["activity"] = ranking.empty() ? json(nullptr) : json(ranking.front().activity);
                arr.push_back(std::move(row));
            }
        }
        run.output("detections.json", arr.dump(2) + "\n");
    } else {
        run.output("detections.csv", io::write_detections(table));
    }
}

inline void cmd_agree(const Options& o, Run& run, json& extra) {
    const bool as_json = json_format(o);
    std::optional<TowerRegistry> registry;
    if (o.activity.empty()) {
        run.input(o.towers);
        registry = load_registry(o);
    }
    const auto truth = load_truth(o, false);
    run.input(o.ground_truth);
    const auto table = obtain_detections(o, registry ? *registry : TowerRegistry{}, run, extra);

    SmcOptions sopt{o.undetected_agree};
    std::vector<SmcMatrix> matrices;
    std::set<Stream> streams;
    for (const auto& [cell, r] : table) streams.insert(cell.first);
    for (Stream s : streams) {
        const auto users = truth.empty() ? users_in_stream(table, s) : truth_devices(truth);
        if (users.empty()) continue;
        matrices.push_back(smc_matrix(table, s, users, sopt));
    }
    if (as_json) {
        run.output("smc.json", report::smc_json(matrices).dump(2) + "\n");
    } else {
        run.output("smc.csv", report::smc_csv(matrices));
        run.output("smc_average.csv", report::smc_average_csv(matrices));
    }
}

inline void cmd_evaluate(const Options& o, Run& run, json& extra) {
    const bool as_json = json_format(o);
    run.input(o.towers);
    const auto registry = load_registry(o);
    run.input(o.ground_truth);
    run.input(o.home_points);
    const auto truth = load_truth(o, true);
    const auto table = obtain_detections(o, registry, run, extra);
    if (o.k < 1 || o.k > 3) throw Error(ErrorKind::ConfigInvalid, "--k must be 1, 2 or 3");

    EvaluationOptions eopt;
    eopt.ks = {static_cast<std::size_t>(o.k)};
    eopt.modes = {selected_mode(o)};
    eopt.exclude_inactive = o.exclude_inactive;
    eopt.smc.both_undetected_agree = o.undetected_agree;
    auto result = evaluate(table, truth, eopt, &registry);

    const auto hdas = selected_hdas(o);
    auto keep = [&](HdaId h) { return std::find(hdas.begin(), hdas.end(), h) != hdas.end(); };
    std::erase_if(result.accuracy, [&](const AccuracyReport& r) { return !keep(r.hda); });
    std::erase_if(result.geo, [&](const GeoErrorReport& r) { return !keep(r.hda); });

    if (as_json) {
        json j{{"accuracy", report::accuracy_json(result.accuracy)}};
        if (!result.geo.empty()) j["geo_error"] = report::geo_json(result.geo);
        run.output("accuracy.json", j.dump(2) + "\n");
    } else {
        run.output("accuracy.csv", report::accuracy_csv(result.accuracy));
        if (!result.geo.empty()) run.output("geo_error.csv", report::geo_csv(result.geo));
    }
}

inline void cmd_minimize(const Options& o, Run& run, json& extra) {
    const bool as_json = json_format(o);
    run.input(o.towers);
    const auto registry = load_registry(o);
    run.input(o.ground_truth);
    const auto truth = load_truth(o, true);
    const auto raw = load_raw(o, registry, run);
    extra["normalization"] = stats_json(raw.stats);
    if (o.k < 1 || o.k > 3) throw Error(ErrorKind::ConfigInvalid, "--k must be 1, 2 or 3");

    MinimizationConfig cfg;
    cfg.fractions = o.fractions;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    const HdaContext ctx(registry, night_of(o), o.radius_km);
    AccuracyOptions acc{static_cast<std::size_t>(o.k), selected_mode(o), o.exclude_inactive};
    const auto hdas = selected_hdas(o);
    const auto curves = run_minimization(raw.events, truth, cfg, ctx, acc, o.jobs, hdas);
    if (as_json) {
        run.output("minimization.json", report::minimization_json(curves).dump(2) + "\n");
    } else {
        run.output("minimization.csv", report::minimization_trials_csv(curves));
        run.output("minimization_summary.csv", report::minimization_summary_csv(curves));
    }
}

inline void cmd_report(const Options& o, Run& run, json& extra) {
    const bool as_json = json_format(o);
    if (o.activity.empty() || o.towers.empty() || o.ground_truth.empty()) {
        throw Error(ErrorKind::ConfigInvalid, "report needs --activity, --towers and --ground-truth");
    }
    io::BundlePaths paths{o.activity, o.towers, o.ground_truth, std::nullopt};
    if (!o.home_points.empty()) paths.home_points = o.home_points;
    io::LoadOptions lopt;
    lopt.strict = o.strict;
    const auto loaded = io::load_bundle(paths, lopt);
    for (const auto& p : {o.activity, o.towers, o.ground_truth, o.home_points}) run.input(p);

    EvaluationOptions eopt;
    eopt.exclude_inactive = o.exclude_inactive;
    eopt.smc.both_undetected_agree = o.undetected_agree;
    const auto result = io::evaluate_from_bundle(loaded.bundle, eopt);
    extra["integrity_clean"] = loaded.report.clean();

    run.output("integrity.json", report::integrity_json(loaded.report).dump(2) + "\n");
    run.output("bundle.json", report::bundle_json(loaded.bundle, loaded.report).dump(2) + "\n");
    if (as_json) {
        json j{{"accuracy", report::accuracy_json(result.accuracy)}, {"agreement", report::smc_json(result.agreement)}};
        if (!result.geo.empty()) j["geo_error"] = report::geo_json(result.geo);
        run.output("report.json", j.dump(2) + "\n");
    } else {
        run.output("accuracy.csv", report::accuracy_csv(result.accuracy));
        for (TruthMode m : kAllModes) {
            for (std::size_t k = 1; k <= 3; ++k) {
                run.output("accuracy_table_" + std::string(mode_label(m)) + "_k" + std::to_string(k) + ".csv",
                           report::accuracy_table(result.accuracy, k, m));
            }
        }
        run.output("smc.csv", report::smc_csv(result.agreement));
        run.output("smc_average.csv", report::smc_average_csv(result.agreement));
        if (!result.geo.empty()) run.output("geo_error.csv", report::geo_csv(result.geo));
    }
}

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ParseError:
        case ErrorKind::IoError: return 2;
        case ErrorKind::SchemaMismatch: return 3;
        default: return 1;
    }
}

inline int fail(std::ostream& err, std::string_view kind, const std::string& message, int code) {
    err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    return code;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Options o;
    CLI::App app{"Home location detection over CDR/XDR/CPR records"};
    app.require_subcommand(1);

    auto add_inputs = [&](CLI::App* c) {
        c->add_option("--cdr", o.cdr, "CDR file (caller,callee,timestamp,duration_min,antenna_out,antenna_in)");
        c->add_option("--xdr", o.xdr, "XDR file (user,timestamp,antenna,kilobytes)");
        c->add_option("--cpr", o.cpr, "CPR file (user,timestamp,antenna,event)");
        c->add_option("--towers", o.towers, "Towers file (tower,lat,lng)");
        c->add_option("--ground-truth", o.ground_truth, "Ground truth file (device,closest,2nd closest,3rd closest)");
        c->add_option("--home-points", o.home_points, "Residence coordinates (device,lat,lng)");
        c->add_option("--roster", o.roster, "File with a device column restricting the users considered");
        c->add_option("--window-start", o.window_start, "First observed date (YYYY-MM-DD)");
        c->add_option("--window-end", o.window_end, "Last observed date (YYYY-MM-DD)");
        c->add_option("--cpr-exclude", o.cpr_exclude, "Dates without CPR data")->delimiter(',');
        c->add_flag("--lenient", o.lenient, "Skip records with unknown towers instead of failing");
        c->add_flag("--no-callee", o.no_callee, "Ignore the callee side of calls");
    };
    auto add_scoring = [&](CLI::App* c) {
        c->add_option("--hda", o.hda, "1..5 or all")->check(CLI::IsMember({"1", "2", "3", "4", "5", "HDA1", "HDA2",
                                                                           "HDA3", "HDA4", "HDA5", "all"}));
        c->add_option("--stream", o.stream, "cdr, xdr, cpr or all")->check(CLI::IsMember({"cdr", "xdr", "cpr", "all"}));
        c->add_option("--night-start", o.night_start, "First night hour")->check(CLI::Range(0, 23));
        c->add_option("--night-end", o.night_end, "Hour the night ends (exclusive)")->check(CLI::Range(0, 24));
        c->add_option("--radius-km", o.radius_km, "Perimeter radius for HDA4/HDA5")->check(CLI::NonNegativeNumber);
        c->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto add_common = [&](CLI::App* c) {
        c->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
        c->add_option("--out", o.out, "Output directory");
        c->add_option("--seed", o.seed, "Random seed");
    };
    auto add_metric = [&](CLI::App* c) {
        c->add_option("--k", o.k, "Rank depth")->check(CLI::Range(1, 3));
        c->add_option("--mode", o.mode, "three-nearest or nearest-only")
            ->check(CLI::IsMember({"three-nearest", "nearest-only", "three_nearest", "nearest_only"}));
        c->add_flag("--exclude-inactive", o.exclude_inactive, "Drop users without records in a stream");
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic world and its raw records");
    add_common(synth);
    synth->add_option("--users", o.n_users, "Number of users")->check(CLI::PositiveNumber);
    synth->add_option("--n-towers", o.n_towers, "Number of towers")->check(CLI::Range(3, 1000000));
    synth->add_option("--night-home-prob", o.night_home_prob, "Probability a night is spent at home")
        ->check(CLI::Range(0.0, 1.0));
    synth->add_flag("--decoy", o.decoy, "Spend non-home nights at a fixed decoy tower");
    synth->add_option("--cdr-rate", o.cdr_rate, "Mean CDRs per day")->check(CLI::PositiveNumber);
    synth->add_option("--xdr-rate", o.xdr_rate, "Mean XDRs per day")->check(CLI::PositiveNumber);
    synth->add_option("--cpr-rate", o.cpr_rate, "Mean CPRs per day")->check(CLI::PositiveNumber);
    synth->add_option("--burstiness", o.burstiness, "CDR inter-event power-law exponent")->check(CLI::PositiveNumber);
    synth->add_option("--night-start", o.night_start, "First night hour")->check(CLI::Range(0, 23));
    synth->add_option("--night-end", o.night_end, "Hour the night ends (exclusive)")->check(CLI::Range(0, 24));
    synth->add_option("--window-start", o.window_start, "First date (YYYY-MM-DD)");
    synth->add_option("--window-end", o.window_end, "Last date (YYYY-MM-DD)");
    synth->add_option("--cpr-exclude", o.cpr_exclude, "Dates without CPR data")->delimiter(',');

    auto* detect = app.add_subcommand("detect", "Activity table and detected homes from raw records");
    add_inputs(detect);
    add_scoring(detect);
    add_common(detect);

    auto* agree = app.add_subcommand("agree", "Agreement between HDAs (SMC)");
    add_inputs(agree);
    add_scoring(agree);
    add_common(agree);
    agree->add_option("--activity", o.activity, "Use an activity table instead of raw records");
    agree->add_flag("--undetected-agree", o.undetected_agree, "Count users undetected by both HDAs as agreeing");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Accuracy against the ground truth");
    add_inputs(evaluate_cmd);
    add_scoring(evaluate_cmd);
    add_common(evaluate_cmd);
    add_metric(evaluate_cmd);
    evaluate_cmd->add_option("--activity", o.activity, "Use an activity table instead of raw records");

    auto* minimize = app.add_subcommand("minimize", "Accuracy under per-user record subsampling");
    add_inputs(minimize);
    add_scoring(minimize);
    add_common(minimize);
    add_metric(minimize);
    minimize->add_option("--fractions", o.fractions, "Fractions of records kept")->delimiter(',');
    minimize->add_option("--trials", o.trials, "Trials per fraction")->check(CLI::PositiveNumber);

    auto* report_cmd = app.add_subcommand("report", "All metrics from an activity/towers/ground-truth bundle");
    add_common(report_cmd);
    report_cmd->add_option("--activity", o.activity, "Activity file")->required();
    report_cmd->add_option("--towers", o.towers, "Towers file")->required();
    report_cmd->add_option("--ground-truth", o.ground_truth, "Ground truth file")->required();
    report_cmd->add_option("--home-points", o.home_points, "Residence coordinates (device,lat,lng)");
    report_cmd->add_flag("--strict", o.strict, "Fail on integrity problems");
    report_cmd->add_flag("--exclude-inactive", o.exclude_inactive, "Drop users without records in a stream");
    report_cmd->add_flag("--undetected-agree", o.undetected_agree, "Count users undetected by both HDAs as agreeing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail(err, "UsageError", e.what(), 64);
    }

    CLI::App* cmd = app.get_subcommands().front();
    std::vector<std::string> args(argv, argv + argc);
    try {
        Run run(cmd->get_name(), o, args);
        json config = config_json(o);
        if (cmd == synth) {
            config["users"] = o.n_users;
            config["n_towers"] = o.n_towers;
            config["night_home_prob"] = o.night_home_prob;
            config["decoy"] = o.decoy;
            config["rates"] = {o.cdr_rate, o.xdr_rate, o.cpr_rate};
            config["burstiness"] = o.burstiness;
            cmd_synth(o, run);
        } else if (cmd == detect) {
            cmd_detect(o, run, config);
        } else if (cmd == agree) {
            cmd_agree(o, run, config);
        } else if (cmd == evaluate_cmd) {
            cmd_evaluate(o, run, config);
        } else if (cmd == minimize) {
            cmd_minimize(o, run, config);
        } else {
            cmd_report(o, run, config);
        }
        run.finish(std::move(config));
    } catch (const Error& e) {
        return fail(err, to_string(e.kind()), e.what(), exit_code_for(e.kind()));
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(err, "IoError", e.what(), 2);
    } catch (const std::exception& e) {
        return fail(err, "InternalError", e.what(), 1);
    }
    return 0;
}

}  // namespace homeloc::cli
