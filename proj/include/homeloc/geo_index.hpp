#pragma once
// Great-circle geometry over a tower registry.
//
// The registry keeps towers sorted by latitude. Since the great-circle
// distance between two points is never smaller than R * |dlat|, latitude
// bands bound every query; candidates inside the band are then tested with
// the same haversine function a brute-force scan would use, so indexed
// results equal exhaustive results exactly.

#include "homeloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace homeloc {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct LatLng {
    double lat = 0.0;
    double lng = 0.0;

    friend bool operator==(const LatLng&, const LatLng&) = default;
};

struct Tower {
    std::string id;
    LatLng pos;

    friend bool operator==(const Tower&, const Tower&) = default;
};

inline bool valid_coordinate(LatLng p) {
    return std::isfinite(p.lat) && std::isfinite(p.lng) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lng >= -180.0 && p.lng <= 180.0;
}

inline void require_valid(LatLng p) {
    if (!valid_coordinate(p)) {
        throw Error(ErrorKind::InvalidCoordinate,
                    "(" + std::to_string(p.lat) + ", " + std::to_string(p.lng) + ") is out of range");
    }
}

namespace detail {

inline double to_radians(double deg) { return deg * (std::numbers::pi / 180.0); }

// No range checks; callers validate once up front.
inline double haversine_unchecked(LatLng a, LatLng b) {
    const double dlat = to_radians(std::fabs(b.lat - a.lat));
    const double dlng = to_radians(std::fabs(b.lng - a.lng));
    const double s_lat = std::sin(dlat / 2.0);
    const double s_lng = std::sin(dlng / 2.0);
    const double h = s_lat * s_lat + std::cos(to_radians(a.lat)) * std::cos(to_radians(b.lat)) * s_lng * s_lng;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

// Lower bound on great-circle distance from latitude difference alone.
inline double latitude_bound_km(double lat_a, double lat_b) {
    return kEarthRadiusKm * to_radians(std::fabs(lat_a - lat_b));
}

// Absorbs rounding differences between the bound and haversine.
inline constexpr double kBoundSlackKm = 1e-6;

}  // namespace detail

// Symmetric, zero on identical points, mean Earth radius.
inline double haversine_km(LatLng a, LatLng b) {
    require_valid(a);
    require_valid(b);
    return detail::haversine_unchecked(a, b);
}

class TowerRegistry {
public:
    using Index = std::uint32_t;

    TowerRegistry() = default;

    explicit TowerRegistry(std::vector<Tower> towers) : towers_(std::move(towers)) {
        by_id_.reserve(towers_.size());
        for (Index i = 0; i < towers_.size(); ++i) {
            require_valid(towers_[i].pos);
            if (towers_[i].id.empty()) throw Error(ErrorKind::ConfigInvalid, "tower with empty id");
            if (!by_id_.emplace(towers_[i].id, i).second) {
                throw Error(ErrorKind::ConfigInvalid, "duplicate tower id '" + towers_[i].id + "'");
            }
        }
        by_lat_.resize(towers_.size());
        for (Index i = 0; i < towers_.size(); ++i) by_lat_[i] = i;
        std::sort(by_lat_.begin(), by_lat_.end(), [this](Index a, Index b) {
            if (towers_[a].pos.lat != towers_[b].pos.lat) return towers_[a].pos.lat < towers_[b].pos.lat;
            return a < b;
        });
        lats_.resize(towers_.size());
        for (std::size_t i = 0; i < by_lat_.size(); ++i) lats_[i] = towers_[by_lat_[i]].pos.lat;
    }

    std::size_t size() const noexcept { return towers_.size(); }
    bool empty() const noexcept { return towers_.empty(); }

    // Towers in insertion order.
    std::span<const Tower> towers() const noexcept { return towers_; }

    const Tower& at(Index i) const { return towers_.at(i); }

    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }

    std::optional<Index> find(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    Index index_of(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) throw Error(ErrorKind::UnknownTower, "'" + id + "'");
        return it->second;
    }

    const Tower& tower(const std::string& id) const { return towers_[index_of(id)]; }

    // The k closest towers to point, ascending by distance, ties by id.
    std::vector<std::string> nearest_k(LatLng point, std::size_t k) const {
        require_valid(point);
        if (k == 0) throw Error(ErrorKind::ConfigInvalid, "k must be positive");
        if (k > towers_.size()) {
            throw Error(ErrorKind::KTooLarge,
                        "k=" + std::to_string(k) + " exceeds registry size " + std::to_string(towers_.size()));
        }

        using Candidate = std::pair<double, Index>;
        auto worse = [this](const Candidate& a, const Candidate& b) {
            if (a.first != b.first) return a.first < b.first;
            return towers_[a.second].id < towers_[b.second].id;
        };
        // Max-heap on (distance, id): top is the current k-th best.
        std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> best(worse);

        const auto start = static_cast<std::ptrdiff_t>(
            std::lower_bound(lats_.begin(), lats_.end(), point.lat) - lats_.begin());
        std::ptrdiff_t up = start;
        std::ptrdiff_t down = start - 1;
        const auto n = static_cast<std::ptrdiff_t>(lats_.size());

        auto offer = [&](std::ptrdiff_t pos) {
            const Index idx = by_lat_[static_cast<std::size_t>(pos)];
            const Candidate c{detail::haversine_unchecked(point, towers_[idx].pos), idx};
            if (best.size() < k) {
                best.push(c);
            } else if (worse(c, best.top())) {
                best.pop();
                best.push(c);
            }
        };
        auto exhausted = [&](std::ptrdiff_t pos) {
            if (best.size() < k) return false;
            const double bound = detail::latitude_bound_km(point.lat, lats_[static_cast<std::size_t>(pos)]);
            return bound - detail::kBoundSlackKm > best.top().first;
        };

        while (up < n || down >= 0) {
            const bool up_open = up < n && !exhausted(up);
            const bool down_open = down >= 0 && !exhausted(down);
            if (!up_open && !down_open) break;
            if (up_open) offer(up++);
            if (down_open) offer(down--);
        }

        std::vector<Candidate> sorted;
        sorted.reserve(best.size());
        while (!best.empty()) {
            sorted.push_back(best.top());
            best.pop();
        }
        std::reverse(sorted.begin(), sorted.end());
        std::vector<std::string> ids;
        ids.reserve(sorted.size());
        for (const auto& c : sorted) ids.push_back(towers_[c.second].id);
        return ids;
    }

    // Indices of all towers within radius_km of center (closed ball), sorted.
    std::vector<Index> within_radius_indices(LatLng center, double radius_km) const {
        require_valid(center);
        if (!(radius_km >= 0.0) || !std::isfinite(radius_km)) {
            throw Error(ErrorKind::ConfigInvalid, "radius must be a non-negative finite number");
        }
        const double band_deg = (radius_km + detail::kBoundSlackKm) / kEarthRadiusKm * (180.0 / std::numbers::pi);
        const auto lo = std::lower_bound(lats_.begin(), lats_.end(), center.lat - band_deg) - lats_.begin();
        const auto hi = std::upper_bound(lats_.begin(), lats_.end(), center.lat + band_deg) - lats_.begin();
        std::vector<Index> out;
        for (auto pos = lo; pos < hi; ++pos) {
            const Index idx = by_lat_[static_cast<std::size_t>(pos)];
            if (detail::haversine_unchecked(center, towers_[idx].pos) <= radius_km) out.push_back(idx);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // Ids of all towers within radius_km of the given tower, itself included.
    std::vector<std::string> within_radius(const std::string& center_id, double radius_km) const {
        const auto& center = towers_[index_of(center_id)];
        std::vector<std::string> ids;
        for (Index idx : within_radius_indices(center.pos, radius_km)) ids.push_back(towers_[idx].id);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

private:
    std::vector<Tower> towers_;
    std::unordered_map<std::string, Index> by_id_;
    std::vector<Index> by_lat_;
    std::vector<double> lats_;
};

// Fixed-radius neighborhoods for every tower, built once per radius.
class PerimeterIndex {
public:
    PerimeterIndex() = default;

    PerimeterIndex(const TowerRegistry& registry, double radius_km) : radius_km_(radius_km) {
        neighbors_.resize(registry.size());
        for (TowerRegistry::Index i = 0; i < registry.size(); ++i) {
            neighbors_[i] = registry.within_radius_indices(registry.at(i).pos, radius_km);
        }
    }

    double radius_km() const noexcept { return radius_km_; }

    std::span<const TowerRegistry::Index> neighbors(TowerRegistry::Index i) const { return neighbors_.at(i); }

private:
    double radius_km_ = 0.0;
    std::vector<std::vector<TowerRegistry::Index>> neighbors_;
};

}  // namespace homeloc
