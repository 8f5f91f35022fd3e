#pragma once

#include "homeloc/homeloc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testkit {

using namespace homeloc;

inline Timestamp ts(const std::string& s) {
    auto t = parse_timestamp(s);
    if (!t) throw std::invalid_argument("bad timestamp " + s);
    return *t;
}

inline Date date(const std::string& s) { return require_date(s); }

inline Event ev(const std::string& user, const std::string& when, const std::string& tower, Stream s = Stream::CDR) {
    return Event{user, ts(when), tower, s};
}

// Great-circle distance from the spherical law of cosines.
inline double cosine_law_km(LatLng a, LatLng b) {
    const double d = std::numbers::pi / 180.0;
    const double c = std::sin(a.lat * d) * std::sin(b.lat * d) +
                     std::cos(a.lat * d) * std::cos(b.lat * d) * std::cos((b.lng - a.lng) * d);
    return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

inline std::vector<Tower> random_towers(std::size_t n, std::mt19937_64& rng, double span_deg = 0.3) {
    std::uniform_real_distribution<double> lat(-33.45 - span_deg / 2, -33.45 + span_deg / 2);
    std::uniform_real_distribution<double> lng(-70.65 - span_deg / 2, -70.65 + span_deg / 2);
    std::vector<Tower> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "R%05zu", i);
        LatLng p{lat(rng), lng(rng)};
        // occasional exact duplicates of an earlier position
        if (i > 0 && rng() % 20 == 0) p = out[rng() % i].pos;
        out.push_back({id, p});
    }
    return out;
}

// Full scans, no index.
inline std::vector<std::string> brute_nearest(std::span<const Tower> towers, LatLng p, std::size_t k) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& t : towers) all.emplace_back(haversine_km(p, t.pos), t.id);
    std::sort(all.begin(), all.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k && i < all.size(); ++i) out.push_back(all[i].second);
    return out;
}

inline std::vector<std::string> brute_within(std::span<const Tower> towers, LatLng c, double r) {
    std::vector<std::string> out;
    for (const auto& t : towers) {
        if (haversine_km(c, t.pos) <= r) out.push_back(t.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Quadratic perimeter score: for each visited tower, count every admitted
// event whose tower lies within r of it.
template <typename Admit>
ScoreMap brute_perimeter(std::span<const Event> events, const TowerRegistry& reg, double r, Admit admit) {
    ScoreMap out;
    for (const auto& a : events) {
        if (!admit(a)) continue;
        if (out.count(a.tower_id)) continue;
        std::int64_t total = 0;
        for (const auto& b : events) {
            if (admit(b) && haversine_km(reg.tower(a.tower_id).pos, reg.tower(b.tower_id).pos) <= r) ++total;
        }
        out.emplace(a.tower_id, total);
    }
    return out;
}

inline SynthConfig small_config(std::uint64_t seed, std::size_t users = 20, std::size_t towers = 80) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_users = users;
    cfg.n_towers = towers;
    return cfg;
}

}  // namespace testkit
