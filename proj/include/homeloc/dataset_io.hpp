#pragma once
// Readers and writers for the activity, towers and ground-truth tables, the
// raw record files, and home points; bundle loading with integrity checks.
//
// Canonical form: LF endings, the header tokens below, shortest round-trip
// decimals, activity rows in canonical order. Files in canonical form are
// reproduced byte-for-byte by load-then-write.

#include "homeloc/csv.hpp"
#include "homeloc/error.hpp"
#include "homeloc/evaluation.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/hda.hpp"
#include "homeloc/record_model.hpp"
#include "homeloc/time.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace homeloc::io {

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "sha256 failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    static constexpr char kHex[] = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xf]);
    }
    return hex;
}

namespace detail {

inline void require_width(const csv::Table& t, const csv::Row& row) {
    if (row.fields.size() != t.header.fields.size()) {
        throw ParseError(t.source, row.line,
                         "expected " + std::to_string(t.header.fields.size()) + " fields, got " +
                             std::to_string(row.fields.size()));
    }
}

inline double number(const csv::Table& t, const csv::Row& row, std::size_t col, std::string_view what) {
    double v = 0.0;
    if (!csv::parse_double(csv::field(t, row, col), v)) {
        throw ParseError(t.source, row.line, "invalid " + std::string(what) + " '" + row.fields[col] + "'");
    }
    return v;
}

inline Timestamp timestamp(const csv::Table& t, const csv::Row& row, std::size_t col) {
    auto ts = parse_timestamp(csv::field(t, row, col));
    if (!ts) throw ParseError(t.source, row.line, "invalid timestamp '" + row.fields[col] + "'");
    return *ts;
}

inline const std::string& nonempty(const csv::Table& t, const csv::Row& row, std::size_t col, std::string_view what) {
    const auto& f = csv::field(t, row, col);
    if (f.empty()) throw ParseError(t.source, row.line, "empty " + std::string(what));
    return f;
}

}  // namespace detail

// ---------------------------------------------------------------- towers

inline std::vector<Tower> parse_towers(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{"tower"}, {"lat"}, {"lng", "lon"}});
    std::vector<Tower> towers;
    towers.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        Tower tower{detail::nonempty(t, row, col[0], "tower id"),
                    {detail::number(t, row, col[1], "lat"), detail::number(t, row, col[2], "lng")}};
        if (!valid_coordinate(tower.pos)) throw ParseError(t.source, row.line, "coordinate out of range");
        towers.push_back(std::move(tower));
    }
    return towers;
}

inline std::string write_towers(std::span<const Tower> towers) {
    std::string out = "tower,lat,lng\n";
    for (const auto& tw : towers) {
        csv::append_row(out, {tw.id, csv::format_double(tw.pos.lat), csv::format_double(tw.pos.lng)});
    }
    return out;
}

// -------------------------------------------------------------- activity

inline std::vector<ActivityRow> parse_activity(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{"device"}, {"tower"}, {"activity"}, {"stream"}, {"HDA", "hda"}});
    std::vector<ActivityRow> rows;
    rows.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        ActivityRow r;
        r.device = detail::nonempty(t, row, col[0], "device");
        r.tower = detail::nonempty(t, row, col[1], "tower");
        if (!csv::parse_int(row.fields[col[2]], r.activity) || r.activity < 0) {
            throw ParseError(t.source, row.line, "invalid activity '" + row.fields[col[2]] + "'");
        }
        auto stream = parse_stream_label(row.fields[col[3]]);
        if (!stream) throw ParseError(t.source, row.line, "unknown stream '" + row.fields[col[3]] + "'");
        r.stream = *stream;
        auto hda = parse_hda_label(row.fields[col[4]]);
        if (!hda || row.fields[col[4]].size() != 4) {
            throw ParseError(t.source, row.line, "unknown HDA '" + row.fields[col[4]] + "'");
        }
        r.hda = *hda;
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string write_activity(std::span<const ActivityRow> rows) {
    std::string out = "device,tower,activity,stream,HDA\n";
    for (const auto& r : rows) {
        csv::append_row(out, {r.device, r.tower, std::to_string(r.activity), std::string(stream_label(r.stream)),
                              std::string(hda_label(r.hda))});
    }
    return out;
}

// ---------------------------------------------------------- ground truth

// Header tokens. Reads also accept the snake_case forms.
struct GroundTruthHeader {
    std::string device = "device";
    std::string closest = "closest";
    std::string second = "2nd closest";
    std::string third = "3rd closest";
};

inline std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text, const std::string& source,
                                                        const GroundTruthHeader& header = {}) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{header.device},
                                              {header.closest},
                                              {header.second, "2nd_closest", "second_closest"},
                                              {header.third, "3rd_closest", "third_closest"}});
    std::vector<GroundTruthEntry> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        GroundTruthEntry g;
        g.device = detail::nonempty(t, row, col[0], "device");
        for (std::size_t i = 0; i < 3; ++i) g.towers[i] = detail::nonempty(t, row, col[i + 1], "tower");
        out.push_back(std::move(g));
    }
    return out;
}

inline std::string write_ground_truth(std::span<const GroundTruthEntry> entries, const GroundTruthHeader& header = {}) {
    std::string out;
    csv::append_row(out, {header.device, header.closest, header.second, header.third});
    for (const auto& g : entries) csv::append_row(out, {g.device, g.towers[0], g.towers[1], g.towers[2]});
    return out;
}

// ----------------------------------------------------------- home points

inline HomePoints parse_home_points(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{"device"}, {"lat"}, {"lng", "lon"}});
    HomePoints out;
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        LatLng p{detail::number(t, row, col[1], "lat"), detail::number(t, row, col[2], "lng")};
        if (!valid_coordinate(p)) throw ParseError(t.source, row.line, "coordinate out of range");
        if (!out.emplace(detail::nonempty(t, row, col[0], "device"), p).second) {
            throw ParseError(t.source, row.line, "duplicate device '" + row.fields[col[0]] + "'");
        }
    }
    return out;
}

inline std::string write_home_points(const HomePoints& points) {
    std::string out = "device,lat,lng\n";
    for (const auto& [device, p] : points) {
        csv::append_row(out, {device, csv::format_double(p.lat), csv::format_double(p.lng)});
    }
    return out;
}

// ---------------------------------------------------------- raw records

inline std::vector<CdrRecord> parse_cdr(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(
        t, {{"caller"}, {"callee"}, {"timestamp"}, {"duration_min"}, {"antenna_out"}, {"antenna_in"}});
    std::vector<CdrRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        CdrRecord r{detail::nonempty(t, row, col[0], "caller"),
                    detail::nonempty(t, row, col[1], "callee"),
                    detail::timestamp(t, row, col[2]),
                    detail::number(t, row, col[3], "duration"),
                    detail::nonempty(t, row, col[4], "antenna_out"),
                    detail::nonempty(t, row, col[5], "antenna_in")};
        if (r.duration_min < 0.0) throw ParseError(t.source, row.line, "negative duration");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<XdrRecord> parse_xdr(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{"user"}, {"timestamp"}, {"antenna"}, {"kilobytes"}});
    std::vector<XdrRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        XdrRecord r{detail::nonempty(t, row, col[0], "user"), detail::timestamp(t, row, col[1]),
                    detail::nonempty(t, row, col[2], "antenna"), detail::number(t, row, col[3], "kilobytes")};
        if (r.kilobytes < 0.0) throw ParseError(t.source, row.line, "negative kilobytes");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<CprRecord> parse_cpr(std::string_view text, const std::string& source) {
    const auto t = csv::parse(text, source);
    const auto col = csv::resolve_columns(t, {{"user"}, {"timestamp"}, {"antenna"}, {"event"}});
    std::vector<CprRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        detail::require_width(t, row);
        out.push_back({detail::nonempty(t, row, col[0], "user"), detail::timestamp(t, row, col[1]),
                       detail::nonempty(t, row, col[2], "antenna"), detail::nonempty(t, row, col[3], "event")});
    }
    return out;
}

inline std::string write_cdr(std::span<const CdrRecord> records) {
    std::string out = "caller,callee,timestamp,duration_min,antenna_out,antenna_in\n";
    for (const auto& r : records) {
        csv::append_row(out, {r.caller_id, r.callee_id, format_timestamp(r.timestamp),
                              csv::format_double(r.duration_min), r.antenna_out, r.antenna_in});
    }
    return out;
}

inline std::string write_xdr(std::span<const XdrRecord> records) {
    std::string out = "user,timestamp,antenna,kilobytes\n";
    for (const auto& r : records) {
        csv::append_row(out, {r.user_id, format_timestamp(r.timestamp), r.antenna, csv::format_double(r.kilobytes)});
    }
    return out;
}

inline std::string write_cpr(std::span<const CprRecord> records) {
    std::string out = "user,timestamp,antenna,event\n";
    for (const auto& r : records) {
        csv::append_row(out, {r.user_id, format_timestamp(r.timestamp), r.antenna, r.event_kind});
    }
    return out;
}

// ------------------------------------------------------------ detections

// One row per (device, stream, HDA); home and activity are empty when the
// HDA admits none of the device's events.
inline std::string write_detections(const DetectionTable& table) {
    std::vector<std::array<std::string, 5>> rows;
    for (const auto& [cell, users] : table) {
        for (const auto& [user, ranking] : users) {
            rows.push_back({user, std::string(stream_label(cell.first)), std::string(hda_label(cell.second)),
                            ranking.empty() ? std::string() : ranking.front().tower,
                            ranking.empty() ? std::string() : std::to_string(ranking.front().activity)});
        }
    }
    std::sort(rows.begin(), rows.end());
    std::string out = "device,stream,HDA,home,activity\n";
    for (const auto& r : rows) csv::append_row(out, std::vector<std::string>(r.begin(), r.end()));
    return out;
}

// ---------------------------------------------------------------- bundle

struct FileInfo {
    std::string path;
    std::size_t rows = 0;
    std::string sha256;
};

struct Provenance {
    FileInfo activity;
    FileInfo towers;
    FileInfo ground_truth;
    std::optional<FileInfo> home_points;
};

struct DatasetBundle {
    std::vector<ActivityRow> activity;
    TowerRegistry registry;
    std::vector<GroundTruthEntry> ground_truth;
    Provenance provenance;
};

struct IntegrityReport {
    std::vector<std::string> unresolved_towers;       // ids referenced but absent from the registry
    std::vector<std::string> duplicate_tower_ids;
    std::vector<std::string> duplicate_activity_keys;  // "device/tower/stream/HDA"
    std::vector<std::string> duplicate_devices;        // in ground truth
    std::vector<std::string> invalid_ground_truth;     // devices whose three towers are not distinct
    std::vector<std::size_t> sort_violations;          // 1-based data row numbers out of canonical order
    std::vector<std::string> zero_activity_rows;       // "device/tower/stream/HDA"
    std::vector<std::string> missing_home_points;      // ground-truth devices without a home point

    bool clean() const {
        return unresolved_towers.empty() && duplicate_tower_ids.empty() && duplicate_activity_keys.empty() &&
               duplicate_devices.empty() && invalid_ground_truth.empty() && sort_violations.empty() &&
               zero_activity_rows.empty() && missing_home_points.empty();
    }
};

struct BundlePaths {
    std::string activity;
    std::string towers;
    std::string ground_truth;
    std::optional<std::string> home_points;
};

struct LoadOptions {
    // Throw on the first integrity problem instead of reporting it.
    bool strict = false;
    GroundTruthHeader header;
};

struct LoadedBundle {
    DatasetBundle bundle;
    IntegrityReport report;
};

namespace detail {

inline std::string activity_key(const ActivityRow& r) {
    return r.device + "/" + r.tower + "/" + std::string(stream_label(r.stream)) + "/" + std::string(hda_label(r.hda));
}

}  // namespace detail

// Builds a bundle from already-read file contents. Paths are recorded for
// provenance only.
inline LoadedBundle assemble_bundle(const BundlePaths& paths, std::string_view activity_text,
                                    std::string_view towers_text, std::string_view truth_text,
                                    std::optional<std::string_view> home_text, const LoadOptions& opt = {}) {
    LoadedBundle out;
    auto& b = out.bundle;
    auto& rep = out.report;
    auto fail = [&](ErrorKind kind, const std::string& msg) {
        if (opt.strict) throw Error(kind, msg);
    };

    auto towers = parse_towers(towers_text, paths.towers);
    b.provenance.towers = {paths.towers, towers.size(), sha256_hex(towers_text)};
    {
        std::set<std::string> seen;
        std::vector<Tower> unique;
        for (auto& t : towers) {
            if (!seen.insert(t.id).second) {
                rep.duplicate_tower_ids.push_back(t.id);
                fail(ErrorKind::SchemaMismatch, "duplicate tower id '" + t.id + "'");
                continue;
            }
            unique.push_back(std::move(t));
        }
        b.registry = TowerRegistry(std::move(unique));
    }

    b.activity = parse_activity(activity_text, paths.activity);
    b.provenance.activity = {paths.activity, b.activity.size(), sha256_hex(activity_text)};

    b.ground_truth = parse_ground_truth(truth_text, paths.ground_truth, opt.header);
    b.provenance.ground_truth = {paths.ground_truth, b.ground_truth.size(), sha256_hex(truth_text)};

    std::set<std::string> unresolved;
    auto resolve = [&](const std::string& id) {
        if (!b.registry.contains(id) && unresolved.insert(id).second) {
            fail(ErrorKind::UnknownTower, "'" + id + "' is not in the towers file");
        }
    };

    std::set<std::string> keys;
    for (std::size_t i = 0; i < b.activity.size(); ++i) {
        const auto& r = b.activity[i];
        resolve(r.tower);
        const auto key = detail::activity_key(r);
        if (!keys.insert(key).second) {
            rep.duplicate_activity_keys.push_back(key);
            fail(ErrorKind::SchemaMismatch, "duplicate activity row " + key);
        }
        if (r.activity == 0) {
            rep.zero_activity_rows.push_back(key);
            fail(ErrorKind::SchemaMismatch, "zero activity row " + key);
        }
        if (i > 0 && activity_row_less(r, b.activity[i - 1])) {
            rep.sort_violations.push_back(i + 1);
            fail(ErrorKind::SchemaMismatch, "activity row " + std::to_string(i + 1) + " is out of order");
        }
    }

    std::set<std::string> devices;
    for (const auto& g : b.ground_truth) {
        for (const auto& t : g.towers) resolve(t);
        if (!devices.insert(g.device).second) {
            rep.duplicate_devices.push_back(g.device);
            fail(ErrorKind::SchemaMismatch, "duplicate ground-truth device '" + g.device + "'");
        }
        if (g.towers[0] == g.towers[1] || g.towers[0] == g.towers[2] || g.towers[1] == g.towers[2]) {
            rep.invalid_ground_truth.push_back(g.device);
            fail(ErrorKind::SchemaMismatch, "ground-truth towers of '" + g.device + "' are not distinct");
        }
    }
    rep.unresolved_towers.assign(unresolved.begin(), unresolved.end());

    if (home_text && paths.home_points) {
        const auto homes = parse_home_points(*home_text, *paths.home_points);
        b.provenance.home_points = FileInfo{*paths.home_points, homes.size(), sha256_hex(*home_text)};
        for (auto& g : b.ground_truth) {
            auto it = homes.find(g.device);
            if (it == homes.end()) {
                rep.missing_home_points.push_back(g.device);
                fail(ErrorKind::MissingHomePoint, "device '" + g.device + "'");
            } else {
                g.home_point = it->second;
            }
        }
    }
    return out;
}

inline LoadedBundle load_bundle(const BundlePaths& paths, const LoadOptions& opt = {}) {
    const auto activity = csv::read_file(paths.activity);
    const auto towers = csv::read_file(paths.towers);
    const auto truth = csv::read_file(paths.ground_truth);
    std::optional<std::string> homes;
    if (paths.home_points) homes = csv::read_file(*paths.home_points);
    return assemble_bundle(paths, activity, towers, truth,
                           homes ? std::optional<std::string_view>(*homes) : std::nullopt, opt);
}

// Detected home per (device, stream, HDA) is the top activity row; metrics
// follow exactly as for detections computed from raw records.
inline EvaluationResult evaluate_from_bundle(const DatasetBundle& bundle, const EvaluationOptions& opt = {}) {
    if (bundle.ground_truth.empty()) throw Error(ErrorKind::MissingGroundTruth, "bundle has no ground truth");
    const auto detections = detections_from_activity(bundle.activity);
    return evaluate(detections, bundle.ground_truth, opt, &bundle.registry);
}

}  // namespace homeloc::io
