#pragma once
// CSV and JSON renderings of metric results and bundles.

#include "homeloc/csv.hpp"
#include "homeloc/dataset_io.hpp"
#include "homeloc/evaluation.hpp"
#include "homeloc/minimization.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace homeloc::report {

using nlohmann::json;

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : std::string(); }

inline json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ------------------------------------------------------------- accuracy

inline std::string accuracy_csv(const std::vector<AccuracyReport>& reports) {
    std::string out = "stream,hda,k,mode,value,correct,n\n";
    for (const auto& r : reports) {
        csv::append_row(out, {std::string(stream_label(r.stream)), std::string(hda_label(r.hda)), std::to_string(r.k),
                              std::string(mode_label(r.mode)), num(r.value), std::to_string(r.correct),
                              std::to_string(r.n_users)});
    }
    return out;
}

inline json accuracy_json(const std::vector<AccuracyReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"stream", stream_label(r.stream)},
                       {"hda", hda_label(r.hda)},
                       {"k", r.k},
                       {"mode", mode_label(r.mode)},
                       {"value", r.value},
                       {"correct", r.correct},
                       {"n", r.n_users}});
    }
    return arr;
}

// HDA rows by stream columns at one (k, mode), rounded to two decimals.
inline std::string accuracy_table(const std::vector<AccuracyReport>& reports, std::size_t k, TruthMode mode) {
    std::string out = "HDA,CDRs,XDRs,CPRs\n";
    for (HdaId h : kAllHdas) {
        std::vector<std::string> row{std::string(hda_label(h))};
        for (Stream s : kAllStreams) {
            std::string cell;
            for (const auto& r : reports) {
                if (r.stream == s && r.hda == h && r.k == k && r.mode == mode) cell = fixed2(r.value);
            }
            row.push_back(cell);
        }
        csv::append_row(out, row);
    }
    return out;
}

// ------------------------------------------------------------ agreement

inline std::string smc_csv(const std::vector<SmcMatrix>& matrices) {
    std::string out = "stream,hda_x,hda_y,smc\n";
    for (const auto& m : matrices) {
        for (HdaId x : kAllHdas) {
            for (HdaId y : kAllHdas) {
                csv::append_row(out, {std::string(stream_label(m.stream)), std::string(hda_label(x)),
                                      std::string(hda_label(y)), num(m.values[hda_index(x)][hda_index(y)])});
            }
        }
    }
    return out;
}

inline std::string smc_average_csv(const std::vector<SmcMatrix>& matrices) {
    std::string out = "stream,hda,average_smc\n";
    for (const auto& m : matrices) {
        for (HdaId h : kAllHdas) {
            csv::append_row(out, {std::string(stream_label(m.stream)), std::string(hda_label(h)),
                                  num(m.hda_average[hda_index(h)])});
        }
        csv::append_row(out, {std::string(stream_label(m.stream)), "all", num(m.stream_average)});
    }
    return out;
}

inline json smc_json(const std::vector<SmcMatrix>& matrices) {
    json arr = json::array();
    for (const auto& m : matrices) {
        json values = json::array();
        for (const auto& row : m.values) values.push_back(row);
        arr.push_back({{"stream", stream_label(m.stream)},
                       {"n", m.n_users},
                       {"values", values},
                       {"hda_average", m.hda_average},
                       {"stream_average", m.stream_average}});
    }
    return arr;
}

// ------------------------------------------------------------ geo error

inline std::string geo_csv(const std::vector<GeoErrorReport>& reports) {
    std::string out = "stream,hda,only_correct,mean_km,n\n";
    for (const auto& r : reports) {
        csv::append_row(out, {std::string(stream_label(r.stream)), std::string(hda_label(r.hda)),
                              r.only_correct ? "true" : "false", num(r.mean_km), std::to_string(r.n_users)});
    }
    return out;
}

inline json geo_json(const std::vector<GeoErrorReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"stream", stream_label(r.stream)},
                       {"hda", hda_label(r.hda)},
                       {"only_correct", r.only_correct},
                       {"mean_km", num_json(r.mean_km)},
                       {"n", r.n_users}});
    }
    return arr;
}

// ---------------------------------------------------------- minimization

inline std::string minimization_trials_csv(const std::vector<MinimizationCurve>& curves) {
    std::string out = "stream,hda,fraction,trial,accuracy\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            for (std::size_t t = 0; t < p.trial_values.size(); ++t) {
                csv::append_row(out, {std::string(stream_label(c.stream)), std::string(hda_label(c.hda)),
                                      num(p.fraction), std::to_string(t), num(p.trial_values[t])});
            }
        }
    }
    return out;
}

inline std::string minimization_summary_csv(const std::vector<MinimizationCurve>& curves) {
    std::string out = "stream,hda,fraction,mean,std\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            csv::append_row(out, {std::string(stream_label(c.stream)), std::string(hda_label(c.hda)),
                                  num(p.fraction), num(p.mean), num(p.std)});
        }
    }
    return out;
}

inline json minimization_json(const std::vector<MinimizationCurve>& curves) {
    json arr = json::array();
    for (const auto& c : curves) {
        json points = json::array();
        for (const auto& p : c.points) {
            points.push_back({{"fraction", p.fraction},
                              {"mean", p.mean},
                              {"std", p.std},
                              {"trials", p.trial_values},
                              {"n", p.n_users}});
        }
        arr.push_back({{"stream", stream_label(c.stream)}, {"hda", hda_label(c.hda)}, {"points", points}});
    }
    return arr;
}

// ---------------------------------------------------------------- bundle

inline json file_info_json(const io::FileInfo& f) {
    return {{"path", f.path}, {"rows", f.rows}, {"sha256", f.sha256}};
}

inline json integrity_json(const io::IntegrityReport& r) {
    return {{"clean", r.clean()},
            {"unresolved_towers", r.unresolved_towers},
            {"duplicate_tower_ids", r.duplicate_tower_ids},
            {"duplicate_activity_keys", r.duplicate_activity_keys},
            {"duplicate_devices", r.duplicate_devices},
            {"invalid_ground_truth", r.invalid_ground_truth},
            {"sort_violations", r.sort_violations},
            {"zero_activity_rows", r.zero_activity_rows},
            {"missing_home_points", r.missing_home_points}};
}

// Whole bundle with a provenance block.
inline json bundle_json(const io::DatasetBundle& b, const io::IntegrityReport& report) {
    json prov{{"activity", file_info_json(b.provenance.activity)},
              {"towers", file_info_json(b.provenance.towers)},
              {"ground_truth", file_info_json(b.provenance.ground_truth)},
              {"tower_count", b.registry.size()},
              {"integrity", integrity_json(report)}};
    if (b.provenance.home_points) prov["home_points"] = file_info_json(*b.provenance.home_points);

    json towers = json::array();
    for (const auto& t : b.registry.towers()) towers.push_back({{"tower", t.id}, {"lat", t.pos.lat}, {"lng", t.pos.lng}});
    json truth = json::array();
    for (const auto& g : b.ground_truth) {
        json e{{"device", g.device}, {"closest", g.towers[0]}, {"2nd closest", g.towers[1]}, {"3rd closest", g.towers[2]}};
        if (g.home_point) e["home_point"] = {{"lat", g.home_point->lat}, {"lng", g.home_point->lng}};
        truth.push_back(std::move(e));
    }
    json activity = json::array();
    for (const auto& r : b.activity) {
        activity.push_back({{"device", r.device},
                            {"tower", r.tower},
                            {"activity", r.activity},
                            {"stream", stream_label(r.stream)},
                            {"HDA", hda_label(r.hda)}});
    }
    return {{"provenance", prov}, {"towers", towers}, {"ground_truth", truth}, {"activity", activity}};
}

}  // namespace homeloc::report
