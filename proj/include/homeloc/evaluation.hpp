#pragma once
// Validation metrics: agreement between HDAs (simple matching coefficient),
// accuracy against the three towers nearest each user's residence, k-accuracy,
// and distance error of detected homes.

#include "homeloc/error.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/hda.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homeloc {

struct GroundTruthEntry {
    std::string device;
    std::array<std::string, 3> towers;  // closest, 2nd closest, 3rd closest
    std::optional<LatLng> home_point;

    const std::string& closest() const { return towers[0]; }

    friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

using HomePoints = std::map<std::string, LatLng>;

// Three nearest towers to each residence, ties by tower id.
inline std::vector<GroundTruthEntry> ground_truth_from_addresses(const HomePoints& homes,
                                                                 const TowerRegistry& registry) {
    std::vector<GroundTruthEntry> out;
    out.reserve(homes.size());
    for (const auto& [device, point] : homes) {
        auto nearest = registry.nearest_k(point, 3);
        out.push_back({device, {nearest[0], nearest[1], nearest[2]}, point});
    }
    return out;
}

enum class TruthMode : std::uint8_t { ThreeNearest, NearestOnly };

inline constexpr std::array<TruthMode, 2> kAllModes{TruthMode::ThreeNearest, TruthMode::NearestOnly};

constexpr std::string_view mode_label(TruthMode m) {
    return m == TruthMode::ThreeNearest ? "three_nearest" : "nearest_only";
}

inline std::optional<TruthMode> parse_mode(std::string_view s) {
    if (s == "three_nearest" || s == "three-nearest") return TruthMode::ThreeNearest;
    if (s == "nearest_only" || s == "nearest-only") return TruthMode::NearestOnly;
    return std::nullopt;
}

// True when any of the top-k ranked towers is in the truth set.
inline bool is_correct(const Ranking& ranking, const GroundTruthEntry& truth, std::size_t k, TruthMode mode) {
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        const auto& t = ranking[i].tower;
        if (mode == TruthMode::NearestOnly) {
            if (t == truth.towers[0]) return true;
        } else if (t == truth.towers[0] || t == truth.towers[1] || t == truth.towers[2]) {
            return true;
        }
    }
    return false;
}

struct AccuracyOptions {
    std::size_t k = 1;
    TruthMode mode = TruthMode::ThreeNearest;
    // Drop users with no events at all in the stream from the denominator.
    // Users with events but nothing the HDA admits always count as incorrect.
    bool exclude_inactive = false;
};

struct AccuracyReport {
    Stream stream = Stream::CDR;
    HdaId hda = HdaId::HDA1;
    std::size_t k = 1;
    TruthMode mode = TruthMode::ThreeNearest;
    std::size_t correct = 0;
    std::size_t n_users = 0;
    double value = 0.0;  // correct / n_users

    friend bool operator==(const AccuracyReport&, const AccuracyReport&) = default;
};

inline AccuracyReport accuracy(const UserRankings& rankings, std::span<const GroundTruthEntry> truth, Stream stream,
                               HdaId hda, const AccuracyOptions& opt = {}) {
    if (truth.empty()) throw Error(ErrorKind::MissingGroundTruth, "ground truth is empty");
    if (opt.k == 0) throw Error(ErrorKind::ConfigInvalid, "k must be positive");
    AccuracyReport r{stream, hda, opt.k, opt.mode, 0, 0, 0.0};
    for (const auto& g : truth) {
        auto it = rankings.find(g.device);
        if (it == rankings.end()) {
            if (!opt.exclude_inactive) ++r.n_users;
            continue;
        }
        ++r.n_users;
        if (is_correct(it->second, g, opt.k, opt.mode)) ++r.correct;
    }
    r.value = r.n_users == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.n_users);
    return r;
}

// Detected home per user; nullopt when the HDA produced no detection.
using HomeAssignment = std::map<std::string, std::optional<std::string>>;

inline HomeAssignment homes_of(const UserRankings& rankings, std::span<const std::string> users) {
    HomeAssignment out;
    for (const auto& u : users) {
        auto it = rankings.find(u);
        if (it == rankings.end() || it->second.empty()) {
            out.emplace(u, std::nullopt);
        } else {
            out.emplace(u, it->second.front().tower);
        }
    }
    return out;
}

struct SmcOptions {
    // Count a user undetected under both HDAs as agreement.
    bool both_undetected_agree = false;
};

// Percentage of users whose two detected homes are the same tower id.
inline double smc(const HomeAssignment& x, const HomeAssignment& y, const SmcOptions& opt = {}) {
    if (x.size() != y.size()) throw Error(ErrorKind::UserSetMismatch, "assignments cover different user counts");
    if (x.empty()) throw Error(ErrorKind::UserSetMismatch, "no users to compare");
    std::size_t agree = 0;
    auto iy = y.begin();
    for (auto ix = x.begin(); ix != x.end(); ++ix, ++iy) {
        if (ix->first != iy->first) {
            throw Error(ErrorKind::UserSetMismatch, "user '" + ix->first + "' missing from one assignment");
        }
        if (ix->second && iy->second) {
            if (*ix->second == *iy->second) ++agree;
        } else if (!ix->second && !iy->second && opt.both_undetected_agree) {
            ++agree;
        }
    }
    return 100.0 * static_cast<double>(agree) / static_cast<double>(x.size());
}

struct SmcMatrix {
    Stream stream = Stream::CDR;
    std::size_t n_users = 0;
    std::array<std::array<double, 5>, 5> values{};
    std::array<double, 5> hda_average{};  // mean against the four other HDAs
    double stream_average = 0.0;          // mean over the ten distinct pairs

    friend bool operator==(const SmcMatrix&, const SmcMatrix&) = default;
};

inline SmcMatrix smc_matrix(const DetectionTable& detections, Stream stream, std::span<const std::string> users,
                            const SmcOptions& opt = {}) {
    static const UserRankings kNone;
    std::array<HomeAssignment, 5> homes;
    for (HdaId h : kAllHdas) {
        auto it = detections.find({stream, h});
        homes[hda_index(h)] = homes_of(it == detections.end() ? kNone : it->second, users);
    }
    SmcMatrix m;
    m.stream = stream;
    m.n_users = users.size();
    double pair_sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        m.values[i][i] = smc(homes[i], homes[i], opt);
        for (std::size_t j = i + 1; j < 5; ++j) {
            const double v = smc(homes[i], homes[j], opt);
            m.values[i][j] = v;
            m.values[j][i] = v;
            pair_sum += v;
        }
    }
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            if (j != i) s += m.values[i][j];
        }
        m.hda_average[i] = s / 4.0;
    }
    m.stream_average = pair_sum / 10.0;
    return m;
}

// Users that appear in any cell of the stream, sorted.
inline std::vector<std::string> users_in_stream(const DetectionTable& detections, Stream stream) {
    std::set<std::string> users;
    for (const auto& [cell, rankings] : detections) {
        if (cell.first != stream) continue;
        for (const auto& [u, r] : rankings) users.insert(u);
    }
    return {users.begin(), users.end()};
}

struct GeoErrorReport {
    Stream stream = Stream::CDR;
    HdaId hda = HdaId::HDA1;
    bool only_correct = false;
    std::size_t n_users = 0;  // users contributing a distance
    double mean_km = std::numeric_limits<double>::quiet_NaN();
};

// Mean distance between each user's detected home tower and their residence.
// Users without a detection contribute nothing. With only_correct, only users
// detected correctly at rank 1 under `mode` contribute.
inline GeoErrorReport geo_error(const UserRankings& rankings, std::span<const GroundTruthEntry> truth,
                                const TowerRegistry& registry, Stream stream, HdaId hda, bool only_correct,
                                TruthMode mode = TruthMode::ThreeNearest) {
    GeoErrorReport r{stream, hda, only_correct, 0, std::numeric_limits<double>::quiet_NaN()};
    double sum = 0.0;
    for (const auto& g : truth) {
        if (!g.home_point) throw Error(ErrorKind::MissingHomePoint, "device '" + g.device + "'");
        auto it = rankings.find(g.device);
        if (it == rankings.end() || it->second.empty()) continue;
        if (only_correct && !is_correct(it->second, g, 1, mode)) continue;
        sum += haversine_km(registry.tower(it->second.front().tower).pos, *g.home_point);
        ++r.n_users;
    }
    if (r.n_users > 0) r.mean_km = sum / static_cast<double>(r.n_users);
    return r;
}

struct EvaluationOptions {
    std::vector<std::size_t> ks{1, 2, 3};
    std::vector<TruthMode> modes{TruthMode::ThreeNearest, TruthMode::NearestOnly};
    bool exclude_inactive = false;
    SmcOptions smc;
};

struct EvaluationResult {
    std::vector<AccuracyReport> accuracy;
    std::vector<SmcMatrix> agreement;
    std::vector<GeoErrorReport> geo;  // empty unless home points are known
};

inline bool has_home_points(std::span<const GroundTruthEntry> truth) {
    return !truth.empty() &&
           std::all_of(truth.begin(), truth.end(), [](const GroundTruthEntry& g) { return g.home_point.has_value(); });
}

inline std::vector<std::string> truth_devices(std::span<const GroundTruthEntry> truth) {
    std::vector<std::string> users;
    users.reserve(truth.size());
    for (const auto& g : truth) users.push_back(g.device);
    std::sort(users.begin(), users.end());
    return users;
}

// Every metric for every stream present in the detection table. Agreement is
// computed over the ground-truth users.
inline EvaluationResult evaluate(const DetectionTable& detections, std::span<const GroundTruthEntry> truth,
                                 const EvaluationOptions& opt = {}, const TowerRegistry* registry = nullptr) {
    if (truth.empty()) throw Error(ErrorKind::MissingGroundTruth, "ground truth is empty");
    std::set<Stream> streams;
    for (const auto& [cell, r] : detections) streams.insert(cell.first);

    static const UserRankings kNone;
    EvaluationResult out;
    const auto users = truth_devices(truth);
    const bool geo = registry && has_home_points(truth);
    for (Stream s : streams) {
        for (HdaId h : kAllHdas) {
            auto it = detections.find({s, h});
            const UserRankings& rankings = it == detections.end() ? kNone : it->second;
            for (TruthMode mode : opt.modes) {
                for (std::size_t k : opt.ks) {
                    out.accuracy.push_back(accuracy(rankings, truth, s, h, {k, mode, opt.exclude_inactive}));
                }
            }
            if (geo) {
                out.geo.push_back(geo_error(rankings, truth, *registry, s, h, false));
                out.geo.push_back(geo_error(rankings, truth, *registry, s, h, true));
            }
        }
        out.agreement.push_back(smc_matrix(detections, s, users, opt.smc));
    }
    return out;
}

}  // namespace homeloc
