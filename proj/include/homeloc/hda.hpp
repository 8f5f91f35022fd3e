#pragma once
// Home detection algorithms.
//
//   HDA1  records per tower
//   HDA2  distinct active days per tower
//   HDA3  records per tower during the night window
//   HDA4  HDA1 counts summed over each visited tower's radius neighborhood
//   HDA5  HDA4 restricted to the night window
//
// Every score map ranks by activity descending, then tower id ascending; the
// first entry is the detected home.

#include "homeloc/error.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/parallel.hpp"
#include "homeloc/record_model.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace homeloc {

enum class HdaId : std::uint8_t { HDA1, HDA2, HDA3, HDA4, HDA5 };

inline constexpr std::array<HdaId, 5> kAllHdas{HdaId::HDA1, HdaId::HDA2, HdaId::HDA3, HdaId::HDA4, HdaId::HDA5};

constexpr std::string_view hda_label(HdaId h) {
    switch (h) {
        case HdaId::HDA1: return "HDA1";
        case HdaId::HDA2: return "HDA2";
        case HdaId::HDA3: return "HDA3";
        case HdaId::HDA4: return "HDA4";
        case HdaId::HDA5: return "HDA5";
    }
    return "";
}

constexpr std::size_t hda_index(HdaId h) { return static_cast<std::size_t>(h); }

inline std::optional<HdaId> parse_hda_label(std::string_view s) {
    for (HdaId h : kAllHdas) {
        if (hda_label(h) == s) return h;
    }
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '5') return kAllHdas[static_cast<std::size_t>(s[0] - '1')];
    return std::nullopt;
}

// Hour-of-day window on the local clock. start is included, end excluded,
// wrapping past midnight when start > end. The default admits 19:00:00
// through 06:59:59. start == end admits every hour.
struct NightWindow {
    int start_hour = 19;
    int end_hour = 7;

    void validate() const {
        if (start_hour < 0 || start_hour > 23 || end_hour < 0 || end_hour > 24) {
            throw Error(ErrorKind::ConfigInvalid, "night window hours must satisfy 0<=start<=23, 0<=end<=24");
        }
    }

    bool contains_hour(int h) const {
        if (start_hour == end_hour) return true;
        if (start_hour < end_hour) return h >= start_hour && h < end_hour;
        return h >= start_hour || h < end_hour;
    }

    bool contains(Timestamp ts) const { return contains_hour(hour_of(ts)); }
};

using ScoreMap = std::map<std::string, std::int64_t>;

struct RankedTower {
    std::string tower;
    std::int64_t activity = 0;

    friend bool operator==(const RankedTower&, const RankedTower&) = default;
};

using Ranking = std::vector<RankedTower>;

struct DetectionResult {
    std::string user_id;
    Stream stream = Stream::CDR;
    HdaId hda = HdaId::HDA1;
    Ranking ranking;

    const std::string& home() const { return ranking.front().tower; }
};

// Shared scoring configuration. Holds a reference to the registry, which must
// outlive the context.
class HdaContext {
public:
    explicit HdaContext(const TowerRegistry& registry, NightWindow night = {}, double radius_km = 1.0)
        : registry_(&registry), night_(night), perimeter_(registry, radius_km) {
        night_.validate();
        if (!(radius_km >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "radius must be non-negative");
    }

    const TowerRegistry& registry() const { return *registry_; }
    const NightWindow& night() const { return night_; }
    double radius_km() const { return perimeter_.radius_km(); }
    const PerimeterIndex& perimeter() const { return perimeter_; }

private:
    const TowerRegistry* registry_;
    NightWindow night_;
    PerimeterIndex perimeter_;
};

inline ScoreMap score_hda1(std::span<const Event> events) {
    ScoreMap scores;
    for (const auto& e : events) ++scores[e.tower_id];
    return scores;
}

// Distinct calendar days per tower. With a window, days outside it are ignored.
inline ScoreMap score_hda2(std::span<const Event> events, const ObservationWindow* window = nullptr) {
    std::map<std::string, std::set<std::int64_t>> days;
    for (const auto& e : events) {
        const Date d = date_of(e.timestamp);
        if (window && !window->contains(d)) continue;
        days[e.tower_id].insert(day_number(d));
    }
    ScoreMap scores;
    for (const auto& [tower, set] : days) scores.emplace(tower, static_cast<std::int64_t>(set.size()));
    return scores;
}

inline ScoreMap score_hda2(std::span<const Event> events, const ObservationWindow& window) {
    return score_hda2(events, &window);
}

inline ScoreMap score_hda3(std::span<const Event> events, const NightWindow& night = {}) {
    ScoreMap scores;
    for (const auto& e : events) {
        if (night.contains(e.timestamp)) ++scores[e.tower_id];
    }
    return scores;
}

namespace detail {

template <typename Filter>
ScoreMap perimeter_scores(std::span<const Event> events, const TowerRegistry& registry,
                          const PerimeterIndex& perimeter, Filter&& admit) {
    std::unordered_map<TowerRegistry::Index, std::int64_t> counts;
    for (const auto& e : events) {
        if (admit(e)) ++counts[registry.index_of(e.tower_id)];
    }
    ScoreMap scores;
    for (const auto& [center, own] : counts) {
        std::int64_t total = 0;
        for (auto n : perimeter.neighbors(center)) {
            auto it = counts.find(n);
            if (it != counts.end()) total += it->second;
        }
        scores.emplace(registry.at(center).id, total);
    }
    return scores;
}

}  // namespace detail

// Candidates are the towers the user visited; each scores the total count of
// events within radius of it, its own included.
inline ScoreMap score_hda4(std::span<const Event> events, const TowerRegistry& registry,
                           const PerimeterIndex& perimeter) {
    return detail::perimeter_scores(events, registry, perimeter, [](const Event&) { return true; });
}

inline ScoreMap score_hda4(std::span<const Event> events, const TowerRegistry& registry, double radius_km = 1.0) {
    return score_hda4(events, registry, PerimeterIndex(registry, radius_km));
}

inline ScoreMap score_hda5(std::span<const Event> events, const TowerRegistry& registry,
                           const PerimeterIndex& perimeter, const NightWindow& night = {}) {
    return detail::perimeter_scores(events, registry, perimeter,
                                    [&night](const Event& e) { return night.contains(e.timestamp); });
}

inline ScoreMap score_hda5(std::span<const Event> events, const TowerRegistry& registry,
                           const NightWindow& night = {}, double radius_km = 1.0) {
    return score_hda5(events, registry, PerimeterIndex(registry, radius_km), night);
}

inline ScoreMap score(std::span<const Event> events, HdaId hda, const HdaContext& ctx,
                      const ObservationWindow* window = nullptr) {
    switch (hda) {
        case HdaId::HDA1: return score_hda1(events);
        case HdaId::HDA2: return score_hda2(events, window);
        case HdaId::HDA3: return score_hda3(events, ctx.night());
        case HdaId::HDA4: return score_hda4(events, ctx.registry(), ctx.perimeter());
        case HdaId::HDA5: return score_hda5(events, ctx.registry(), ctx.perimeter(), ctx.night());
    }
    return {};
}

// Activity descending, tower id ascending. Zero scores are dropped.
inline Ranking rank(const ScoreMap& scores) {
    Ranking ranking;
    ranking.reserve(scores.size());
    for (const auto& [tower, activity] : scores) {
        if (activity > 0) ranking.push_back({tower, activity});
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const RankedTower& a, const RankedTower& b) {
        if (a.activity != b.activity) return a.activity > b.activity;
        return a.tower < b.tower;
    });
    return ranking;
}

inline Ranking rank_towers(std::span<const Event> events, HdaId hda, const HdaContext& ctx,
                           const ObservationWindow* window = nullptr) {
    return rank(score(events, hda, ctx, window));
}

// Throws NoQualifyingActivity when the selected HDA admits no event.
inline DetectionResult detect_home(std::span<const Event> events, HdaId hda, const HdaContext& ctx,
                                   const ObservationWindow* window = nullptr) {
    DetectionResult result;
    if (!events.empty()) {
        result.user_id = events.front().user_id;
        result.stream = events.front().stream;
    }
    result.hda = hda;
    result.ranking = rank_towers(events, hda, ctx, window);
    if (result.ranking.empty()) {
        throw Error(ErrorKind::NoQualifyingActivity,
                    "user '" + result.user_id + "' has no events admitted by " + std::string(hda_label(hda)));
    }
    return result;
}

// Rankings for every (stream, HDA) cell, keyed by user. A user with events in
// a stream has an entry for every HDA, empty when the HDA admits none of them.
using UserRankings = std::map<std::string, Ranking>;
using CellKey = std::pair<Stream, HdaId>;
using DetectionTable = std::map<CellKey, UserRankings>;

// Sorted events per stream.
using StreamEvents = std::map<Stream, std::vector<Event>>;

inline std::vector<CellKey> all_cells(std::span<const Stream> streams = kAllStreams,
                                      std::span<const HdaId> hdas = kAllHdas) {
    std::vector<CellKey> cells;
    for (Stream s : streams) {
        for (HdaId h : hdas) cells.emplace_back(s, h);
    }
    return cells;
}

// Scores every user of every stream under the requested HDAs. Work is split
// by user; the output does not depend on `jobs`.
inline DetectionTable detect_all(const StreamEvents& streams, const HdaContext& ctx,
                                 std::span<const HdaId> hdas = kAllHdas, unsigned jobs = 1,
                                 const std::map<Stream, ObservationWindow>* windows = nullptr) {
    DetectionTable table;
    for (const auto& [stream, events] : streams) {
        const ObservationWindow* window = nullptr;
        if (windows) {
            auto it = windows->find(stream);
            if (it != windows->end()) window = &it->second;
        }
        const auto users = split_by_user(events);
        std::vector<std::vector<Ranking>> results(users.size());
        parallel_for(users.size(), jobs, [&](std::size_t u) {
            results[u].reserve(hdas.size());
            for (HdaId h : hdas) results[u].push_back(rank_towers(users[u], h, ctx, window));
        });
        for (std::size_t hi = 0; hi < hdas.size(); ++hi) {
            auto& cell = table[{stream, hdas[hi]}];
            for (std::size_t u = 0; u < users.size(); ++u) {
                cell.emplace(users[u].front().user_id, std::move(results[u][hi]));
            }
        }
    }
    return table;
}

struct ActivityRow {
    std::string device;
    std::string tower;
    std::int64_t activity = 0;
    Stream stream = Stream::CDR;
    HdaId hda = HdaId::HDA1;

    friend bool operator==(const ActivityRow&, const ActivityRow&) = default;
};

// Canonical order: device, stream label, HDA label, activity descending, tower.
inline bool activity_row_less(const ActivityRow& a, const ActivityRow& b) {
    if (a.device != b.device) return a.device < b.device;
    if (a.stream != b.stream) return stream_label(a.stream) < stream_label(b.stream);
    if (a.hda != b.hda) return hda_label(a.hda) < hda_label(b.hda);
    if (a.activity != b.activity) return a.activity > b.activity;
    return a.tower < b.tower;
}

inline std::vector<ActivityRow> build_activity_table(const DetectionTable& detections) {
    std::vector<ActivityRow> rows;
    for (const auto& [cell, users] : detections) {
        for (const auto& [user, ranking] : users) {
            for (const auto& rt : ranking) {
                if (rt.activity > 0) rows.push_back({user, rt.tower, rt.activity, cell.first, cell.second});
            }
        }
    }
    std::sort(rows.begin(), rows.end(), activity_row_less);
    return rows;
}

// Rebuilds rankings from activity rows. Devices that appear in a stream under
// any HDA get an (empty) entry under every HDA of that stream.
inline DetectionTable detections_from_activity(std::span<const ActivityRow> rows) {
    std::map<Stream, std::set<std::string>> active;
    DetectionTable table;
    for (const auto& r : rows) {
        active[r.stream].insert(r.device);
        auto& ranking = table[{r.stream, r.hda}][r.device];
        if (r.activity > 0) ranking.push_back({r.tower, r.activity});
    }
    for (const auto& [stream, devices] : active) {
        for (HdaId h : kAllHdas) {
            auto& cell = table[{stream, h}];
            for (const auto& d : devices) cell.try_emplace(d);
        }
    }
    for (auto& [cell, users] : table) {
        for (auto& [user, ranking] : users) {
            std::stable_sort(ranking.begin(), ranking.end(), [](const RankedTower& a, const RankedTower& b) {
                if (a.activity != b.activity) return a.activity > b.activity;
                return a.tower < b.tower;
            });
        }
    }
    return table;
}

}  // namespace homeloc
