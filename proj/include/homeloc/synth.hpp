#pragma once
// Synthetic towers, residents with known homes, and CDR/XDR/CPR traces.
//
// Each user gets an hourly schedule of places per day: nights at home (or at
// an alternative night place), weekday office hours at work, commutes between
// the two, and leisure places otherwise. Records are then drawn from a
// per-stream point process and located by the schedule:
//   CDR  bursty renewal process with truncated power-law inter-event times
//   XDR  Poisson process, denser than CDR
//   CPR  dense Poisson process plus a handover on every tower of each commute
// Away from home, the serving tower is jittered among nearby towers. At home
// the home tower always serves, so home-at-night traces are unambiguous.

#include "homeloc/error.hpp"
#include "homeloc/evaluation.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/hda.hpp"
#include "homeloc/random.hpp"
#include "homeloc/record_model.hpp"
#include "homeloc/time.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace homeloc {

struct StreamRates {
    double cdr_per_day = 6.0;
    double xdr_per_day = 25.0;
    double cpr_per_day = 150.0;
};

struct SynthConfig {
    std::size_t n_towers = 200;
    std::size_t n_users = 65;
    Date window_start = Date{std::chrono::year{2019}, std::chrono::September, std::chrono::day{24}};
    Date window_end = Date{std::chrono::year{2019}, std::chrono::October, std::chrono::day{7}};
    std::vector<Date> cpr_excluded{Date{std::chrono::year{2019}, std::chrono::October, std::chrono::day{5}}};
    StreamRates rates;
    double night_home_prob = 0.85;
    // Spend non-home nights at a dedicated tower outside the home's three
    // nearest, instead of at leisure places.
    bool decoy_night_tower = false;
    double work_prob = 0.7;
    // Probability that a place away from home is served by a neighbor tower.
    double serving_jitter = 0.5;
    double jitter_radius_km = 1.5;
    // Power-law exponent of CDR inter-event times.
    double burstiness = 1.5;
    // Upper truncation of CDR inter-event times, in days.
    double cdr_max_gap_days = 2.0;
    NightWindow night;
    std::uint64_t seed = 1;

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (n_towers < 3) throw Error(ErrorKind::ConfigInvalid, "at least 3 towers are required");
        if (!prob(night_home_prob) || !prob(work_prob) || !prob(serving_jitter)) {
            throw Error(ErrorKind::ConfigInvalid, "probabilities must lie in [0, 1]");
        }
        if (!(rates.cdr_per_day > 0 && rates.xdr_per_day > 0 && rates.cpr_per_day > 0)) {
            throw Error(ErrorKind::ConfigInvalid, "rates must be positive");
        }
        if (!(burstiness > 0.0) || !(cdr_max_gap_days > 0.0) || !(jitter_radius_km >= 0.0)) {
            throw Error(ErrorKind::ConfigInvalid, "burstiness, maximum gap and jitter radius must be positive");
        }
        if (!(1.0 / rates.cdr_per_day < cdr_max_gap_days)) {
            throw Error(ErrorKind::ConfigInvalid, "CDR mean gap must be below the maximum gap");
        }
        if (decoy_night_tower && n_towers < 5) {
            throw Error(ErrorKind::ConfigInvalid, "a decoy night tower needs at least 5 towers");
        }
        night.validate();
        (void)window(Stream::CPR);
    }

    ObservationWindow window(Stream s) const {
        if (s == Stream::CPR) return ObservationWindow::with_exclusions(window_start, window_end, cpr_excluded);
        return ObservationWindow(window_start, window_end);
    }

    std::map<Stream, ObservationWindow> windows() const {
        std::map<Stream, ObservationWindow> out;
        for (Stream s : kAllStreams) out.emplace(s, window(s));
        return out;
    }
};

struct SynthUser {
    std::string id;
    LatLng home_point;
    std::string home_tower;
    std::string work_tower;
    std::optional<std::string> decoy_tower;
    std::vector<std::string> leisure;
    std::vector<std::string> commute_path;  // home to work, consecutive duplicates removed
};

struct SynthTraces {
    std::vector<CdrRecord> cdr;
    std::vector<XdrRecord> xdr;
    std::vector<CprRecord> cpr;
};

struct SynthWorld {
    TowerRegistry registry;
    std::vector<SynthUser> users;  // sorted by id
    SynthTraces traces;

    HomePoints home_points() const {
        HomePoints out;
        for (const auto& u : users) out.emplace(u.id, u.home_point);
        return out;
    }
};

namespace synth_detail {

using Rng = std::mt19937_64;

inline double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double normal(Rng& rng) {
    double u1 = unit(rng);
    while (u1 <= 0.0) u1 = unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * unit(rng));
}

inline double exponential(Rng& rng, double mean) { return -mean * std::log1p(-unit(rng)); }

inline bool bernoulli(Rng& rng, double p) { return unit(rng) < p; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform_below(rng, v.size()))];
}

inline double round_to(double v, double scale) { return std::round(v * scale) / scale; }

inline constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

inline LatLng offset_km(LatLng origin, double north_km, double east_km) {
    const double lat = origin.lat + north_km / kKmPerDegree;
    const double lng = origin.lng + east_km / (kKmPerDegree * std::cos(origin.lat * std::numbers::pi / 180.0));
    return {lat, lng};
}

inline LatLng rounded(LatLng p) { return {round_to(p.lat, 1e6), round_to(p.lng, 1e6)}; }

// Mean of the power law tau^-alpha truncated to [a, b].
inline double truncated_power_mean(double alpha, double a, double b) {
    if (std::fabs(alpha - 1.0) < 1e-9) return (b - a) / std::log(b / a);
    if (std::fabs(alpha - 2.0) < 1e-9) return std::log(b / a) / (1.0 / a - 1.0 / b);
    return (1.0 - alpha) / (2.0 - alpha) * (std::pow(b, 2.0 - alpha) - std::pow(a, 2.0 - alpha)) /
           (std::pow(b, 1.0 - alpha) - std::pow(a, 1.0 - alpha));
}

// Lower cutoff giving the requested mean with the upper cutoff fixed.
inline double solve_lower_cutoff(double alpha, double mean, double b) {
    double lo = b * 1e-12;
    double hi = mean;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (truncated_power_mean(alpha, mid, b) < mean) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

inline double truncated_power_draw(Rng& rng, double alpha, double a, double b) {
    const double u = unit(rng);
    if (std::fabs(alpha - 1.0) < 1e-9) return a * std::pow(b / a, u);
    const double e = 1.0 - alpha;
    return std::pow(std::pow(a, e) + u * (std::pow(b, e) - std::pow(a, e)), 1.0 / e);
}

struct Slot {
    TowerRegistry::Index place = 0;
    bool at_home = false;
    bool commute = false;
};

using DaySchedule = std::array<Slot, 24>;

struct UserPlan {
    TowerRegistry::Index home;
    TowerRegistry::Index work;
    std::optional<TowerRegistry::Index> decoy;
    std::vector<TowerRegistry::Index> leisure;
    std::vector<TowerRegistry::Index> path;
};

inline std::string tower_name(std::size_t i, std::size_t n) {
    const int width = n > 9999 ? static_cast<int>(std::to_string(n - 1).size()) : 4;
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return "T" + digits;
}

inline std::string hex_id(Rng& rng, int len) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < len; ++i) s.push_back(kHex[uniform_below(rng, 16)]);
    return s;
}

inline std::vector<Tower> place_towers(const SynthConfig& cfg, Rng& rng) {
    const LatLng core{-33.45, -70.65};
    std::vector<Tower> towers;
    towers.reserve(cfg.n_towers);
    for (std::size_t i = 0; i < cfg.n_towers; ++i) {
        LatLng p;
        if (i > 0 && bernoulli(rng, 0.02)) {
            p = towers.back().pos;  // co-located antenna
        } else if (bernoulli(rng, 0.55)) {
            p = offset_km(core, 2.5 * normal(rng), 2.5 * normal(rng));
        } else {
            p = offset_km(core, 30.0 * (unit(rng) - 0.5), 30.0 * (unit(rng) - 0.5));
        }
        towers.push_back({tower_name(i, cfg.n_towers), rounded(p)});
    }
    return towers;
}

inline std::vector<TowerRegistry::Index> nearest_indices(const TowerRegistry& reg, LatLng p, std::size_t k) {
    std::vector<TowerRegistry::Index> out;
    for (const auto& id : reg.nearest_k(p, std::min(k, reg.size()))) out.push_back(reg.index_of(id));
    return out;
}

// A home point strictly nearest its tower under the id tie-break.
inline LatLng home_point_for(const TowerRegistry& reg, TowerRegistry::Index home, Rng& rng) {
    const LatLng t = reg.at(home).pos;
    double nearest_other = std::numeric_limits<double>::infinity();
    for (TowerRegistry::Index i = 0; i < reg.size(); ++i) {
        if (reg.at(i).pos == t) continue;
        nearest_other = std::min(nearest_other, haversine_km(t, reg.at(i).pos));
    }
    const double radius = std::min(0.5, 0.4 * nearest_other);
    if (!(radius > 0.01)) return t;
    const double r = radius * std::sqrt(unit(rng));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    return rounded(offset_km(t, r * std::cos(theta), r * std::sin(theta)));
}

inline std::vector<TowerRegistry::Index> commute_path(const TowerRegistry& reg, TowerRegistry::Index from,
                                                      TowerRegistry::Index to) {
    std::vector<TowerRegistry::Index> path{from};
    const LatLng a = reg.at(from).pos;
    const LatLng b = reg.at(to).pos;
    constexpr int kSteps = 10;
    for (int s = 1; s < kSteps; ++s) {
        const double f = static_cast<double>(s) / kSteps;
        const LatLng p{a.lat + f * (b.lat - a.lat), a.lng + f * (b.lng - a.lng)};
        const auto idx = reg.index_of(reg.nearest_k(p, 1).front());
        if (idx != path.back()) path.push_back(idx);
    }
    if (to != path.back()) path.push_back(to);
    return path;
}

inline bool is_weekday(Date d) {
    const std::chrono::weekday wd{std::chrono::sys_days{d}};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

inline DaySchedule day_schedule(const SynthConfig& cfg, const UserPlan& plan, Date date, Rng& rng) {
    DaySchedule day{};
    auto home = [&] { return Slot{plan.home, true, false}; };
    auto night_slot = [&] {
        if (bernoulli(rng, cfg.night_home_prob)) return home();
        if (plan.decoy) return Slot{*plan.decoy, false, false};
        return Slot{pick(rng, plan.leisure), false, false};
    };
    const Slot early = night_slot();
    const Slot evening = night_slot();
    const bool weekday = is_weekday(date);
    const bool commutes = plan.work != plan.home;
    const Slot office = bernoulli(rng, cfg.work_prob) ? Slot{plan.work, false, false}
                                                      : Slot{pick(rng, plan.leisure), false, false};
    const Slot lunch = bernoulli(rng, 0.3) ? Slot{pick(rng, plan.leisure), false, false} : office;
    std::array<Slot, 4> weekend_blocks;
    for (auto& b : weekend_blocks) b = bernoulli(rng, 0.5) ? home() : Slot{pick(rng, plan.leisure), false, false};

    for (int h = 0; h < 24; ++h) {
        Slot& s = day[static_cast<std::size_t>(h)];
        if (cfg.night.contains_hour(h)) {
            s = h >= 12 ? evening : early;
        } else if (!weekday) {
            s = weekend_blocks[static_cast<std::size_t>(std::clamp((h - 7) / 3, 0, 3))];
        } else if ((h == 8 || h == 17) && commutes) {
            s = Slot{plan.work, false, true};
        } else if (h == 13) {
            s = lunch;
        } else if (h >= 9 && h <= 16) {
            s = office;
        } else {
            s = home();
        }
    }
    return day;
}

struct Jitter {
    std::vector<std::vector<TowerRegistry::Index>> near;  // per tower, neighbors excluding itself
};

inline Jitter build_jitter(const TowerRegistry& reg, double radius_km) {
    Jitter j;
    j.near.resize(reg.size());
    for (TowerRegistry::Index i = 0; i < reg.size(); ++i) {
        for (auto n : reg.within_radius_indices(reg.at(i).pos, radius_km)) {
            if (n != i) j.near[i].push_back(n);
        }
    }
    return j;
}

// Serving tower for a non-commute slot.
inline TowerRegistry::Index serve(const SynthConfig& cfg, const Jitter& jitter, const Slot& slot, Rng& rng) {
    if (slot.at_home) return slot.place;
    const auto& near = jitter.near[slot.place];
    if (near.empty() || !bernoulli(rng, cfg.serving_jitter)) return slot.place;
    return pick(rng, near);
}

}  // namespace synth_detail

// Registry and users; traces are left empty.
inline SynthWorld generate_population(const SynthConfig& cfg) {
    using namespace synth_detail;
    cfg.validate();
    Rng rng(detail::mix(cfg.seed, 0x746f77657273ULL));

    SynthWorld world;
    world.registry = TowerRegistry(place_towers(cfg, rng));
    const auto& reg = world.registry;

    // Home candidates: the smallest id of each set of co-located towers.
    std::vector<TowerRegistry::Index> home_candidates;
    {
        std::set<std::pair<double, double>> seen;
        for (TowerRegistry::Index i = 0; i < reg.size(); ++i) {
            if (seen.insert({reg.at(i).pos.lat, reg.at(i).pos.lng}).second) home_candidates.push_back(i);
        }
    }
    // Work candidates: the quarter of towers closest to the urban core.
    std::vector<TowerRegistry::Index> core;
    for (const auto& id : reg.nearest_k({-33.45, -70.65}, std::max<std::size_t>(3, reg.size() / 4))) {
        core.push_back(reg.index_of(id));
    }

    std::set<std::string> ids;
    std::vector<std::pair<SynthUser, UserPlan>> users;
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        std::string id = hex_id(rng, 5);
        while (!ids.insert(id).second) id = hex_id(rng, 5);

        UserPlan plan;
        plan.home = pick(rng, home_candidates);
        const LatLng home_point = home_point_for(reg, plan.home, rng);
        const auto triple = nearest_indices(reg, home_point, 3);
        auto outside_triple = [&](const std::vector<TowerRegistry::Index>& pool) {
            std::vector<TowerRegistry::Index> out;
            for (auto i : pool) {
                if (std::find(triple.begin(), triple.end(), i) == triple.end()) out.push_back(i);
            }
            return out;
        };
        std::vector<TowerRegistry::Index> all(reg.size());
        for (TowerRegistry::Index i = 0; i < reg.size(); ++i) all[i] = i;
        const auto far = outside_triple(all);

        auto work_pool = outside_triple(core);
        if (work_pool.empty()) work_pool = far;
        plan.work = work_pool.empty() ? plan.home : pick(rng, work_pool);

        for (int l = 0; l < 3; ++l) plan.leisure.push_back(far.empty() ? plan.home : pick(rng, far));

        if (cfg.decoy_night_tower) {
            // Prefer decoys whose serving neighbors also miss the triple.
            std::vector<TowerRegistry::Index> pool, fallback;
            for (auto i : far) {
                if (i == plan.work) continue;
                fallback.push_back(i);
                const bool clear = std::none_of(triple.begin(), triple.end(), [&](TowerRegistry::Index t) {
                    return haversine_km(reg.at(i).pos, reg.at(t).pos) <= cfg.jitter_radius_km;
                });
                if (clear) pool.push_back(i);
            }
            plan.decoy = pick(rng, pool.empty() ? fallback : pool);
        }
        plan.path = commute_path(reg, plan.home, plan.work);

        SynthUser user;
        user.id = id;
        user.home_point = home_point;
        user.home_tower = reg.at(plan.home).id;
        user.work_tower = reg.at(plan.work).id;
        if (plan.decoy) user.decoy_tower = reg.at(*plan.decoy).id;
        for (auto l : plan.leisure) user.leisure.push_back(reg.at(l).id);
        for (auto p : plan.path) user.commute_path.push_back(reg.at(p).id);
        users.emplace_back(std::move(user), std::move(plan));
    }
    std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) { return a.first.id < b.first.id; });
    for (auto& [user, plan] : users) world.users.push_back(std::move(user));
    return world;
}

// Records for every user of the world. Per-user randomness is derived from
// (seed, user id), so users are independent of each other.
inline SynthTraces generate_traces(const SynthWorld& world, const SynthConfig& cfg) {
    using namespace synth_detail;
    cfg.validate();
    const auto& reg = world.registry;
    const Jitter jitter = build_jitter(reg, cfg.jitter_radius_km);
    static const std::array<std::string, 4> kCprKinds{"attach", "location_update", "paging", "service_request"};

    const auto t0 = Timestamp{std::chrono::local_days{cfg.window_start}};
    const auto t_end = Timestamp{std::chrono::local_days{cfg.window_end} + std::chrono::days{1}};
    const double span_days = std::chrono::duration<double, std::ratio<86400>>(t_end - t0).count();
    const auto cpr_window = cfg.window(Stream::CPR);

    const double cdr_mean = 1.0 / cfg.rates.cdr_per_day;
    const double cdr_min_gap = solve_lower_cutoff(cfg.burstiness, cdr_mean, cfg.cdr_max_gap_days);

    SynthTraces traces;
    for (const auto& user : world.users) {
        Rng rng(detail::mix(cfg.seed, detail::hash_string(user.id)));
        UserPlan plan;
        plan.home = reg.index_of(user.home_tower);
        plan.work = reg.index_of(user.work_tower);
        if (user.decoy_tower) plan.decoy = reg.index_of(*user.decoy_tower);
        for (const auto& l : user.leisure) plan.leisure.push_back(reg.index_of(l));
        for (const auto& p : user.commute_path) plan.path.push_back(reg.index_of(p));

        std::vector<DaySchedule> schedule;
        for (auto d = std::chrono::local_days{cfg.window_start}; d <= std::chrono::local_days{cfg.window_end};
             d += std::chrono::days{1}) {
            schedule.push_back(day_schedule(cfg, plan, Date{d}, rng));
        }

        auto at = [&](double day_offset) {
            return t0 + std::chrono::seconds{static_cast<std::int64_t>(std::floor(day_offset * 86400.0))};
        };
        auto tower_at = [&](Timestamp ts) {
            const auto day = static_cast<std::size_t>(
                (std::chrono::floor<std::chrono::days>(ts) - std::chrono::floor<std::chrono::days>(t0)).count());
            const Slot& s = schedule[day][static_cast<std::size_t>(hour_of(ts))];
            if (s.commute) return pick(rng, plan.path);
            return serve(cfg, jitter, s, rng);
        };

        // CDR: bursty renewal process.
        for (double t = unit(rng) * cdr_mean;; t += truncated_power_draw(rng, cfg.burstiness, cdr_min_gap,
                                                                          cfg.cdr_max_gap_days)) {
            if (t >= span_days) break;
            const Timestamp ts = at(t);
            const auto& here = reg.at(tower_at(ts)).id;
            const auto& there = reg.at(static_cast<TowerRegistry::Index>(uniform_below(rng, reg.size()))).id;
            const std::string other = "x" + hex_id(rng, 5);
            const double minutes = round_to(exponential(rng, 2.0), 100.0);
            if (bernoulli(rng, 0.5)) {
                traces.cdr.push_back({user.id, other, ts, minutes, here, there});
            } else {
                traces.cdr.push_back({other, user.id, ts, minutes, there, here});
            }
        }

        // XDR: Poisson process.
        for (double t = exponential(rng, 1.0 / cfg.rates.xdr_per_day); t < span_days;
             t += exponential(rng, 1.0 / cfg.rates.xdr_per_day)) {
            const Timestamp ts = at(t);
            const double kb = round_to(std::exp(4.0 + 1.5 * normal(rng)), 100.0);
            traces.xdr.push_back({user.id, ts, reg.at(tower_at(ts)).id, kb});
        }

        // CPR: Poisson background plus handovers along each commute.
        for (double t = exponential(rng, 1.0 / cfg.rates.cpr_per_day); t < span_days;
             t += exponential(rng, 1.0 / cfg.rates.cpr_per_day)) {
            const Timestamp ts = at(t);
            const auto tower = tower_at(ts);
            const auto& kind = kCprKinds[uniform_below(rng, kCprKinds.size())];
            if (cpr_window.contains(ts)) traces.cpr.push_back({user.id, ts, reg.at(tower).id, kind});
        }
        for (std::size_t day = 0; day < schedule.size(); ++day) {
            for (int h = 0; h < 24; ++h) {
                if (!schedule[day][static_cast<std::size_t>(h)].commute) continue;
                const bool outbound = h < 12;
                const auto n = plan.path.size();
                for (std::size_t step = 0; step < n; ++step) {
                    const auto tower = plan.path[outbound ? step : n - 1 - step];
                    const double t = static_cast<double>(day) + (h + (step + unit(rng)) / static_cast<double>(n)) / 24.0;
                    const Timestamp ts = at(t);
                    if (cpr_window.contains(ts)) traces.cpr.push_back({user.id, ts, reg.at(tower).id, "handover"});
                }
            }
        }
    }
    auto by_time = [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; };
    std::stable_sort(traces.cdr.begin(), traces.cdr.end(), by_time);
    std::stable_sort(traces.xdr.begin(), traces.xdr.end(), by_time);
    std::stable_sort(traces.cpr.begin(), traces.cpr.end(), by_time);
    return traces;
}

inline SynthWorld generate_world(const SynthConfig& cfg) {
    SynthWorld world = generate_population(cfg);
    world.traces = generate_traces(world, cfg);
    return world;
}

// Sorted events per stream, normalized against the world's own registry.
inline StreamEvents normalize_world(const SynthWorld& world, const SynthConfig& cfg) {
    NormalizeOptions opt;
    opt.roster.emplace();
    for (const auto& u : world.users) opt.roster->insert(u.id);
    StreamEvents out;
    out[Stream::CDR] = normalize_stream(world.traces.cdr, cfg.window(Stream::CDR), world.registry, opt).events;
    out[Stream::XDR] = normalize_stream(world.traces.xdr, cfg.window(Stream::XDR), world.registry, opt).events;
    out[Stream::CPR] = normalize_stream(world.traces.cpr, cfg.window(Stream::CPR), world.registry, opt).events;
    return out;
}

}  // namespace homeloc
