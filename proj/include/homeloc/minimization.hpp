#pragma once
// Data-minimization experiment: accuracy of each HDA when every user keeps
// only a random fraction of their records.

#include "homeloc/error.hpp"
#include "homeloc/evaluation.hpp"
#include "homeloc/hda.hpp"
#include "homeloc/parallel.hpp"
#include "homeloc/random.hpp"
#include "homeloc/record_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homeloc {

struct MinimizationConfig {
    std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    unsigned trials = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (fractions.empty()) throw Error(ErrorKind::ConfigInvalid, "no fractions given");
        if (trials == 0) throw Error(ErrorKind::ConfigInvalid, "trials must be positive");
        for (std::size_t i = 0; i < fractions.size(); ++i) {
            if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) {
                throw Error(ErrorKind::ConfigInvalid, "fractions must lie in (0, 1]");
            }
            if (i > 0 && !(fractions[i - 1] < fractions[i])) {
                throw Error(ErrorKind::ConfigInvalid, "fractions must be strictly ascending");
            }
        }
    }
};

// Seed for one user's subsample. Depends only on the identifying tuple, so
// results never depend on scheduling.
inline std::uint64_t subsample_seed(std::uint64_t seed, Stream stream, std::string_view user, unsigned trial,
                                    double fraction) {
    std::uint64_t s = detail::mix(seed, static_cast<std::uint64_t>(stream));
    s = detail::mix(s, detail::hash_string(user));
    s = detail::mix(s, trial);
    s = detail::mix(s, static_cast<std::uint64_t>(std::llround(fraction * 1e9)));
    return s;
}

inline std::size_t subsample_size(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "fraction must lie in (0, 1]");
    if (n == 0) return 0;
    const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(m, 1, n);
}

// Ascending indices of a uniform sample without replacement.
inline std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::mt19937_64& rng) {
    const std::size_t m = subsample_size(n, fraction);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (m == n) return idx;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::vector<Event> subsample(std::span<const Event> events, double fraction, std::mt19937_64& rng) {
    std::vector<Event> out;
    const auto idx = subsample_indices(events.size(), fraction, rng);
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(events[i]);
    return out;
}

struct MinimizationPoint {
    double fraction = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over trials
    std::vector<double> trial_values;
    std::vector<std::size_t> trial_correct;
    std::size_t n_users = 0;
};

struct MinimizationCurve {
    Stream stream = Stream::CDR;
    HdaId hda = HdaId::HDA1;
    std::vector<MinimizationPoint> points;
};

// For each stream, fraction and trial, subsamples every ground-truth user's
// events independently, runs every HDA on the subsample, and scores accuracy
// at rank depth acc.k. Curves are ordered by stream, then HDA.
inline std::vector<MinimizationCurve> run_minimization(const StreamEvents& streams,
                                                       std::span<const GroundTruthEntry> truth,
                                                       const MinimizationConfig& config, const HdaContext& ctx,
                                                       const AccuracyOptions& acc = {}, unsigned jobs = 1,
                                                       std::span<const HdaId> hdas = kAllHdas) {
    config.validate();
    if (truth.empty()) throw Error(ErrorKind::MissingGroundTruth, "ground truth is empty");
    std::map<std::string, const GroundTruthEntry*> by_device;
    for (const auto& g : truth) by_device.emplace(g.device, &g);

    std::vector<MinimizationCurve> curves;
    for (const auto& [stream, events] : streams) {
        std::vector<std::span<const Event>> users;
        std::vector<const GroundTruthEntry*> users_truth;
        for (auto slice : split_by_user(events)) {
            auto it = by_device.find(slice.front().user_id);
            if (it == by_device.end()) continue;
            users.push_back(slice);
            users_truth.push_back(it->second);
        }
        const std::size_t n_users = acc.exclude_inactive ? users.size() : truth.size();
        const std::size_t n_frac = config.fractions.size();
        const std::size_t n_trial = config.trials;
        const std::size_t n_hda = hdas.size();

        // correct[((f * trials) + t) * users + u][h]
        std::vector<std::vector<char>> correct(n_frac * n_trial * users.size());
        parallel_for(correct.size(), jobs, [&](std::size_t unit) {
            const std::size_t u = unit % users.size();
            const std::size_t t = (unit / users.size()) % n_trial;
            const std::size_t f = unit / (users.size() * n_trial);
            const double fraction = config.fractions[f];
            std::mt19937_64 rng(
                subsample_seed(config.seed, stream, users[u].front().user_id, static_cast<unsigned>(t), fraction));
            const auto sample = subsample(users[u], fraction, rng);
            auto& out = correct[unit];
            out.resize(n_hda);
            for (std::size_t h = 0; h < n_hda; ++h) {
                out[h] = is_correct(rank_towers(sample, hdas[h], ctx), *users_truth[u], acc.k, acc.mode) ? 1 : 0;
            }
        });

        for (std::size_t h = 0; h < n_hda; ++h) {
            MinimizationCurve curve{stream, hdas[h], {}};
            for (std::size_t f = 0; f < n_frac; ++f) {
                MinimizationPoint p;
                p.fraction = config.fractions[f];
                p.n_users = n_users;
                std::size_t total = 0;
                for (std::size_t t = 0; t < n_trial; ++t) {
                    std::size_t c = 0;
                    for (std::size_t u = 0; u < users.size(); ++u) c += correct[(f * n_trial + t) * users.size() + u][h];
                    p.trial_correct.push_back(c);
                    p.trial_values.push_back(n_users ? static_cast<double>(c) / static_cast<double>(n_users) : 0.0);
                    total += c;
                }
                // Mean from integer totals so identical trials reproduce the
                // single-run accuracy exactly.
                p.mean = n_users ? static_cast<double>(total) / static_cast<double>(n_trial * n_users) : 0.0;
                double ss = 0.0;
                for (double v : p.trial_values) ss += (v - p.mean) * (v - p.mean);
                p.std = std::sqrt(ss / static_cast<double>(n_trial));
                curve.points.push_back(std::move(p));
            }
            curves.push_back(std::move(curve));
        }
    }
    return curves;
}

}  // namespace homeloc
