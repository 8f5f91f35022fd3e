// Acceptance gate. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any criterion fails.

#include "homeloc/homeloc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace homeloc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kPublishedAccuracyTol = 0.01;
constexpr double kPublishedSmcTol = 0.5;
constexpr double kPublishedRuntimeS = 30.0;
constexpr double kPlantedRuntimeS = 60.0;
constexpr int kSeeds = 20;
constexpr std::size_t kUsers = 65;
constexpr std::size_t kTowers = 200;
constexpr int kOracleQueries = 1000;
constexpr std::size_t kOracleMaxTowers = 2000;
constexpr std::size_t kOracleUsers = 50;
constexpr double kMinimizationFraction = 0.2;
constexpr unsigned kMinimizationTrials = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    enum class State { Pass, Fail, Skip } state = State::Pass;
    std::string detail;
};

Verdict pass(std::string d) { return {Verdict::State::Pass, std::move(d)}; }
Verdict fail(std::string d) { return {Verdict::State::Fail, std::move(d)}; }
Verdict skip(std::string d) { return {Verdict::State::Skip, std::move(d)}; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

SynthConfig world_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_users = kUsers;
    cfg.n_towers = kTowers;
    return cfg;
}

struct Instance {
    SynthConfig cfg;
    SynthWorld world;
    StreamEvents streams;
    std::vector<GroundTruthEntry> truth;
};

Instance make_instance(const SynthConfig& cfg) {
    Instance in{cfg, generate_world(cfg), {}, {}};
    in.streams = normalize_world(in.world, cfg);
    in.truth = ground_truth_from_addresses(in.world.home_points(), in.world.registry);
    return in;
}

// ------------------------------------------------------------------ AC1

struct PublishedCell {
    Stream stream;
    HdaId hda;
    TruthMode mode;
    double value;
};

std::vector<PublishedCell> published_accuracy() {
    const double three[5][3] = {{0.25, 0.55, 0.48}, {0.35, 0.63, 0.69}, {0.43, 0.68, 0.68},
                                {0.17, 0.32, 0.25}, {0.26, 0.43, 0.37}};
    const double nearest[5][3] = {{0.14, 0.28, 0.22}, {0.20, 0.32, 0.26}, {0.26, 0.34, 0.34},
                                  {0.06, 0.12, 0.09}, {0.09, 0.22, 0.18}};
    const Stream cols[3] = {Stream::CDR, Stream::XDR, Stream::CPR};
    std::vector<PublishedCell> out;
    for (std::size_t h = 0; h < 5; ++h) {
        for (std::size_t s = 0; s < 3; ++s) {
            out.push_back({cols[s], kAllHdas[h], TruthMode::ThreeNearest, three[h][s]});
            out.push_back({cols[s], kAllHdas[h], TruthMode::NearestOnly, nearest[h][s]});
        }
    }
    return out;
}

Verdict ac1_released_bundle() {
    const char* dir = std::getenv("HOMELOC_RELEASED_DIR");
    if (!dir || !*dir) return skip("HOMELOC_RELEASED_DIR not set; released bundle unavailable");
    const auto t0 = Clock::now();
    io::BundlePaths paths{(fs::path(dir) / "activity.csv").string(), (fs::path(dir) / "towers.csv").string(),
                          (fs::path(dir) / "ground_truth.csv").string(), std::nullopt};
    const auto loaded = io::load_bundle(paths);
    EvaluationOptions opt;
    opt.ks = {1};
    const auto res = io::evaluate_from_bundle(loaded.bundle, opt);
    const double elapsed = seconds_since(t0);

    std::ostringstream bad;
    for (const auto& c : published_accuracy()) {
        for (const auto& r : res.accuracy) {
            if (r.stream == c.stream && r.hda == c.hda && r.mode == c.mode &&
                std::abs(r.value - c.value) > kPublishedAccuracyTol) {
                bad << " " << stream_label(c.stream) << "/" << hda_label(c.hda) << "/" << mode_label(c.mode) << "="
                    << r.value << "(want " << c.value << ")";
            }
        }
    }
    for (const auto& m : res.agreement) {
        const double want = m.stream == Stream::XDR ? 41.09 : m.stream == Stream::CPR ? 27.85 : NAN;
        if (std::isfinite(want) && std::abs(m.stream_average - want) > kPublishedSmcTol) {
            bad << " SMC " << stream_label(m.stream) << "=" << m.stream_average << "(want " << want << ")";
        }
    }
    if (elapsed >= kPublishedRuntimeS) bad << " runtime " << elapsed << "s";
    if (!bad.str().empty()) return fail("mismatches:" + bad.str());
    return pass("accuracy table and SMC averages within tolerance in " + fmt("%.2f", elapsed) + "s");
}

// ------------------------------------------------------------------ AC2

Verdict ac2_planted_homes() {
    const auto t0 = Clock::now();
    std::size_t checked = 0, skipped = 0, decoy_users = 0;
    std::ostringstream bad;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto cfg = world_config(static_cast<std::uint64_t>(seed));
        cfg.night_home_prob = 1.0;
        const auto in = make_instance(cfg);
        const HdaContext ctx(in.world.registry, cfg.night);
        const auto det = detect_all(in.streams, ctx, std::array{HdaId::HDA3});
        for (Stream s : kAllStreams) {
            // every user needs at least one nighttime event in the stream
            bool eligible = true;
            const auto& cell = det.at({s, HdaId::HDA3});
            for (const auto& g : in.truth) {
                auto it = cell.find(g.device);
                if (it == cell.end() || it->second.empty()) eligible = false;
            }
            if (!eligible) {
                ++skipped;
                continue;
            }
            ++checked;
            const auto acc = accuracy(cell, in.truth, s, HdaId::HDA3);
            if (acc.value != 1.0) bad << " seed " << seed << " " << stream_label(s) << "=" << acc.value;
        }

        auto dcfg = world_config(static_cast<std::uint64_t>(seed));
        dcfg.decoy_night_tower = true;
        dcfg.night_home_prob = 0.0;
        const auto din = make_instance(dcfg);
        const HdaContext dctx(din.world.registry, dcfg.night);
        const auto ddet = detect_all(din.streams, dctx, std::array{HdaId::HDA3});
        for (Stream s : kAllStreams) {
            // every user spends every night at the decoy, so all are affected
            const auto acc = accuracy(ddet.at({s, HdaId::HDA3}), din.truth, s, HdaId::HDA3);
            decoy_users += acc.n_users;
            if (acc.correct != 0) bad << " decoy seed " << seed << " " << stream_label(s) << " correct=" << acc.correct;
        }
    }
    const double elapsed = seconds_since(t0);
    if (checked == 0) bad << " no eligible stream";
    if (elapsed >= kPlantedRuntimeS) bad << " runtime " << elapsed << "s";
    const std::string summary = std::to_string(checked) + " stream runs at 1.0 (" + std::to_string(skipped) +
                                " without night coverage), " + std::to_string(decoy_users) +
                                " decoy user-streams at 0.0, " + fmt("%.1f", elapsed) + "s";
    if (!bad.str().empty()) return fail(summary + ";" + bad.str());
    return pass(summary);
}

// ------------------------------------------------------------------ AC3

std::vector<Tower> random_registry(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lat(-33.7, -33.2), lng(-70.9, -70.4);
    std::vector<Tower> out;
    for (std::size_t i = 0; i < n; ++i) {
        LatLng p{lat(rng), lng(rng)};
        if (i > 0 && rng() % 25 == 0) p = out[rng() % i].pos;
        out.push_back({"Q" + std::to_string(i), p});
    }
    return out;
}

Verdict ac3_oracles() {
    std::mt19937_64 rng(2024);
    std::size_t mismatches = 0;
    const std::size_t sizes[] = {10, 250, 1000, kOracleMaxTowers};
    std::vector<std::pair<std::vector<Tower>, TowerRegistry>> regs;
    for (auto n : sizes) {
        auto towers = random_registry(n, rng);
        TowerRegistry reg(towers);
        regs.emplace_back(std::move(towers), std::move(reg));
    }
    std::uniform_real_distribution<double> lat(-33.75, -33.15), lng(-70.95, -70.35), rad(0.0, 5.0);
    for (int q = 0; q < kOracleQueries; ++q) {
        const auto& [towers, reg] = regs[static_cast<std::size_t>(q) % regs.size()];
        const LatLng p{lat(rng), lng(rng)};
        const std::size_t k = 1 + rng() % std::min<std::size_t>(towers.size(), 10);

        std::vector<std::pair<double, std::string>> all;
        for (const auto& t : towers) all.emplace_back(haversine_km(p, t.pos), t.id);
        std::sort(all.begin(), all.end());
        std::vector<std::string> want_k;
        for (std::size_t i = 0; i < k; ++i) want_k.push_back(all[i].second);
        if (reg.nearest_k(p, k) != want_k) ++mismatches;

        const Tower& c = towers[rng() % towers.size()];
        const double r = rad(rng);
        std::vector<std::string> want_r;
        for (const auto& t : towers) {
            if (haversine_km(c.pos, t.pos) <= r) want_r.push_back(t.id);
        }
        std::sort(want_r.begin(), want_r.end());
        if (reg.within_radius(c.id, r) != want_r) ++mismatches;
    }

    // perimeter scores against the quadratic definition
    const auto in = make_instance(world_config(99));
    const HdaContext ctx(in.world.registry);
    const auto& reg = in.world.registry;
    std::size_t users = 0, score_mismatches = 0;
    auto oracle = [&](std::span<const Event> events, const std::function<bool(const Event&)>& admit) {
        ScoreMap out;
        for (const auto& a : events) {
            if (!admit(a) || out.count(a.tower_id)) continue;
            std::int64_t total = 0;
            for (const auto& b : events) {
                if (admit(b) && haversine_km(reg.tower(a.tower_id).pos, reg.tower(b.tower_id).pos) <= ctx.radius_km()) {
                    ++total;
                }
            }
            out.emplace(a.tower_id, total);
        }
        return out;
    };
    std::vector<std::span<const Event>> pool;
    for (const auto& [s, events] : in.streams) {
        for (auto slice : split_by_user(events)) pool.push_back(slice);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < pool.size() && users < kOracleUsers; ++i, ++users) {
        const auto e = pool[i];
        if (score(e, HdaId::HDA4, ctx) != oracle(e, [](const Event&) { return true; })) ++score_mismatches;
        if (score(e, HdaId::HDA5, ctx) != oracle(e, [&](const Event& x) { return ctx.night().contains(x.timestamp); })) {
            ++score_mismatches;
        }
    }
    const std::string summary = std::to_string(kOracleQueries) + " queries up to " +
                                std::to_string(kOracleMaxTowers) + " towers: " + std::to_string(mismatches) +
                                " mismatches; " + std::to_string(users) + " users HDA4/HDA5: " +
                                std::to_string(score_mismatches) + " mismatches";
    if (mismatches || score_mismatches || users < kOracleUsers) return fail(summary);
    return pass(summary);
}

// ------------------------------------------------------------------ AC4

std::string check_invariants(const Instance& in) {
    std::ostringstream bad;
    const HdaContext ctx(in.world.registry, in.cfg.night);
    const auto det = detect_all(in.streams, ctx);
    const auto users = truth_devices(in.truth);
    for (Stream s : kAllStreams) {
        const auto m = smc_matrix(det, s, users);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                if (m.values[i][j] != m.values[j][i]) bad << " smc asymmetric";
            }
        }
        const auto self = smc_matrix(det, s, users, {true});
        for (std::size_t i = 0; i < 5; ++i) {
            if (self.values[i][i] != 100.0) bad << " self-agreement " << self.values[i][i];
        }
        for (HdaId h : kAllHdas) {
            const auto& r = det.at({s, h});
            for (TruthMode mode : kAllModes) {
                double prev = -1.0;
                for (std::size_t k = 1; k <= 3; ++k) {
                    const double v = accuracy(r, in.truth, s, h, {k, mode}).value;
                    if (v < prev) bad << " ACC(k) decreasing";
                    prev = v;
                }
            }
            for (std::size_t k = 1; k <= 3; ++k) {
                if (accuracy(r, in.truth, s, h, {k, TruthMode::ThreeNearest}).value <
                    accuracy(r, in.truth, s, h, {k, TruthMode::NearestOnly}).value) {
                    bad << " three-nearest below nearest-only";
                }
            }
        }
        for (auto slice : split_by_user(in.streams.at(s))) {
            const auto h1 = score(slice, HdaId::HDA1, ctx);
            const auto h3 = score(slice, HdaId::HDA3, ctx);
            const auto h4 = score(slice, HdaId::HDA4, ctx);
            const auto h5 = score(slice, HdaId::HDA5, ctx);
            for (const auto& [t, v] : h3) {
                if (v > h1.at(t)) bad << " HDA3>HDA1";
            }
            for (const auto& [t, v] : h5) {
                if (v > h4.at(t)) bad << " HDA5>HDA4";
            }
            for (const auto& [t, v] : h1) {
                if (h4.at(t) < v) bad << " HDA4<HDA1";
            }
        }
    }
    return bad.str();
}

// ------------------------------------------------------------------ AC5

Verdict ac5_minimization(const std::vector<Instance>& instances) {
    std::ostringstream bad;
    double cdr_std = 0.0, cpr_std = 0.0;
    std::size_t exact = 0;
    for (const auto& in : instances) {
        const HdaContext ctx(in.world.registry, in.cfg.night);
        MinimizationConfig cfg;
        cfg.fractions = {kMinimizationFraction, 1.0};
        cfg.trials = kMinimizationTrials;
        cfg.seed = in.cfg.seed;
        const auto a = run_minimization(in.streams, in.truth, cfg, ctx, {}, 1);
        const auto b = run_minimization(in.streams, in.truth, cfg, ctx, {}, 4);
        const auto det = detect_all(in.streams, ctx);
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t p = 0; p < a[i].points.size(); ++p) {
                const auto& x = a[i].points[p];
                const auto& y = b[i].points[p];
                if (x.trial_values != y.trial_values || x.mean != y.mean || x.std != y.std) {
                    bad << " jobs-dependent curve seed " << in.cfg.seed;
                }
            }
            const auto& full = a[i].points.back();
            const double want = accuracy(det.at({a[i].stream, a[i].hda}), in.truth, a[i].stream, a[i].hda).value;
            if (full.std != 0.0 || full.mean != want) {
                bad << " fraction 1.0 mismatch seed " << in.cfg.seed;
            } else {
                ++exact;
            }
            const double s = a[i].points.front().std;
            if (a[i].stream == Stream::CDR) cdr_std += s;
            if (a[i].stream == Stream::CPR) cpr_std += s;
        }
    }
    const double denom = static_cast<double>(instances.size() * kAllHdas.size());
    cdr_std /= denom;
    cpr_std /= denom;
    if (!(cdr_std > cpr_std)) bad << " std(CDR) " << cdr_std << " <= std(CPR) " << cpr_std;
    const std::string summary = std::to_string(exact) + " curves exact at 1.0, mean std at " +
                                fmt("%.1f", kMinimizationFraction) + ": CDR " + fmt("%.4f", cdr_std) + " vs CPR " +
                                fmt("%.4f", cpr_std);
    if (!bad.str().empty()) return fail(summary + ";" + bad.str());
    return pass(summary);
}

// ------------------------------------------------------------------ AC6

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_result(const EvaluationResult& a, const EvaluationResult& b) {
    if (a.accuracy != b.accuracy || a.agreement != b.agreement || a.geo.size() != b.geo.size()) return false;
    for (std::size_t i = 0; i < a.geo.size(); ++i) {
        const auto& x = a.geo[i];
        const auto& y = b.geo[i];
        if (x.stream != y.stream || x.hda != y.hda || x.only_correct != y.only_correct || x.n_users != y.n_users ||
            !same_number(x.mean_km, y.mean_km)) {
            return false;
        }
    }
    return true;
}

Verdict ac6_pipeline(const std::vector<Instance>& instances) {
    std::ostringstream bad;
    for (const auto& in : instances) {
        const HdaContext ctx(in.world.registry, in.cfg.night);
        const auto windows = in.cfg.windows();
        const auto det = detect_all(in.streams, ctx, kAllHdas, 1, &windows);
        const auto raw = evaluate(det, in.truth, {}, &in.world.registry);

        const auto loaded = io::assemble_bundle({"activity.csv", "towers.csv", "ground_truth.csv", "home_points.csv"},
                                                io::write_activity(build_activity_table(det)),
                                                io::write_towers(in.world.registry.towers()),
                                                io::write_ground_truth(in.truth),
                                                io::write_home_points(in.world.home_points()));
        if (!loaded.report.clean()) bad << " unclean bundle seed " << in.cfg.seed;
        if (detections_from_activity(loaded.bundle.activity) != det) bad << " detections differ seed " << in.cfg.seed;
        if (!same_result(io::evaluate_from_bundle(loaded.bundle), raw)) bad << " metrics differ seed " << in.cfg.seed;
    }
    const std::string summary = std::to_string(instances.size()) + " worlds compared";
    if (!bad.str().empty()) return fail(summary + ";" + bad.str());
    return pass(summary + ", detections and metrics identical");
}

// ------------------------------------------------------------------ AC7

Verdict ac7_round_trip(const std::vector<Instance>& instances) {
    const fs::path dir = fs::temp_directory_path() / "homeloc_acceptance_io";
    fs::create_directories(dir);
    std::ostringstream bad;
    std::size_t files = 0;
    for (const auto& in : instances) {
        const HdaContext ctx(in.world.registry, in.cfg.night);
        const std::string activity = io::write_activity(build_activity_table(detect_all(in.streams, ctx)));
        const std::string towers = io::write_towers(in.world.registry.towers());
        const std::string truth = io::write_ground_truth(in.truth);
        const io::BundlePaths paths{(dir / "activity.csv").string(), (dir / "towers.csv").string(),
                                    (dir / "ground_truth.csv").string(), std::nullopt};
        csv::write_file(paths.activity, activity);
        csv::write_file(paths.towers, towers);
        csv::write_file(paths.ground_truth, truth);
        const auto loaded = io::load_bundle(paths);
        if (io::write_activity(loaded.bundle.activity) != csv::read_file(paths.activity)) bad << " activity";
        if (io::write_towers(loaded.bundle.registry.towers()) != csv::read_file(paths.towers)) bad << " towers";
        if (io::write_ground_truth(loaded.bundle.ground_truth) != csv::read_file(paths.ground_truth)) bad << " truth";
        files += 3;
    }
    fs::remove_all(dir);
    const std::string summary = std::to_string(files) + " files reloaded and rewritten";
    if (!bad.str().empty()) return fail(summary + "; differs:" + bad.str());
    return pass(summary + " byte-identical");
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* id, const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        const char* tag = v.state == Verdict::State::Pass ? "PASS" : v.state == Verdict::State::Fail ? "FAIL" : "SKIP";
        if (v.state == Verdict::State::Fail) ++failures;
        std::printf("%s %s %s: %s\n", id, tag, name, v.detail.c_str());
        std::fflush(stdout);
    };

    report("AC1", "released-bundle reproduction", ac1_released_bundle);
    report("AC2", "planted homes and decoy nights", ac2_planted_homes);
    report("AC3", "index and perimeter oracles", ac3_oracles);

    std::vector<Instance> instances;
    for (int seed = 1; seed <= kSeeds; ++seed) instances.push_back(make_instance(world_config(static_cast<std::uint64_t>(seed))));

    report("AC4", "metric invariants", [&] {
        std::ostringstream bad;
        for (const auto& in : instances) {
            const auto b = check_invariants(in);
            if (!b.empty()) bad << " seed " << in.cfg.seed << ":" << b.substr(0, 200);
        }
        if (!bad.str().empty()) return fail(bad.str());
        return pass(std::to_string(instances.size()) + " worlds, all invariants hold");
    });
    report("AC5", "minimization contract", [&] { return ac5_minimization(instances); });
    report("AC6", "raw and bundle pipelines agree", [&] { return ac6_pipeline(instances); });
    report("AC7", "canonical file round trip", [&] { return ac7_round_trip(instances); });

    std::printf("%s\n", failures ? "ACCEPTANCE FAIL" : "ACCEPTANCE PASS");
    return failures ? 1 : 0;
}
