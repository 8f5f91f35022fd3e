#pragma once
// Raw CDR / XDR / CPR records and their normalization into per-user events.

#include "homeloc/error.hpp"
#include "homeloc/geo_index.hpp"
#include "homeloc/time.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <unordered_set>
#include <variant>
#include <vector>

namespace homeloc {

enum class Stream : std::uint8_t { CDR, XDR, CPR };

inline constexpr std::array<Stream, 3> kAllStreams{Stream::CDR, Stream::XDR, Stream::CPR};

// Labels used in the released activity table.
constexpr std::string_view stream_label(Stream s) {
    switch (s) {
        case Stream::CDR: return "CDRs";
        case Stream::XDR: return "XDRs";
        case Stream::CPR: return "CPRs";
    }
    return "";
}

inline std::optional<Stream> parse_stream_label(std::string_view s) {
    for (Stream st : kAllStreams) {
        if (stream_label(st) == s) return st;
    }
    return std::nullopt;
}

// Lower-case command-line spelling: cdr, xdr, cpr.
inline std::optional<Stream> parse_stream_name(std::string_view s) {
    if (s == "cdr" || s == "CDR" || s == "CDRs") return Stream::CDR;
    if (s == "xdr" || s == "XDR" || s == "XDRs") return Stream::XDR;
    if (s == "cpr" || s == "CPR" || s == "CPRs") return Stream::CPR;
    return std::nullopt;
}

struct CdrRecord {
    std::string caller_id;
    std::string callee_id;
    Timestamp timestamp;
    double duration_min = 0.0;
    std::string antenna_out;
    std::string antenna_in;

    friend bool operator==(const CdrRecord&, const CdrRecord&) = default;
};

struct XdrRecord {
    std::string user_id;
    Timestamp timestamp;
    std::string antenna;
    double kilobytes = 0.0;

    friend bool operator==(const XdrRecord&, const XdrRecord&) = default;
};

struct CprRecord {
    std::string user_id;
    Timestamp timestamp;
    std::string antenna;
    std::string event_kind;

    friend bool operator==(const CprRecord&, const CprRecord&) = default;
};

struct Event {
    std::string user_id;
    Timestamp timestamp;
    std::string tower_id;
    Stream stream = Stream::CDR;

    friend bool operator==(const Event&, const Event&) = default;
    friend auto operator<=>(const Event& a, const Event& b) {
        return std::tie(a.user_id, a.timestamp, a.tower_id, a.stream) <=>
               std::tie(b.user_id, b.timestamp, b.tower_id, b.stream);
    }
};

class ObservationWindow {
public:
    ObservationWindow(Date start, Date end, std::set<std::int64_t> excluded = {})
        : start_(start), end_(end), excluded_(std::move(excluded)) {
        if (!start_.ok() || !end_.ok() || day_number(start_) > day_number(end_)) {
            throw Error(ErrorKind::ConfigInvalid, "observation window start must not be after end");
        }
        for (auto d : excluded_) {
            if (d < day_number(start_) || d > day_number(end_)) {
                throw Error(ErrorKind::ConfigInvalid, "excluded date outside observation window");
            }
        }
    }

    static ObservationWindow with_exclusions(Date start, Date end, const std::vector<Date>& excluded) {
        std::set<std::int64_t> days;
        for (auto d : excluded) days.insert(day_number(d));
        return ObservationWindow(start, end, std::move(days));
    }

    Date start() const { return start_; }
    Date end() const { return end_; }
    const std::set<std::int64_t>& excluded_days() const { return excluded_; }

    bool contains(Date d) const {
        const auto n = day_number(d);
        return n >= day_number(start_) && n <= day_number(end_) && !excluded_.count(n);
    }
    bool contains(Timestamp ts) const { return contains(date_of(ts)); }

    // Days that can carry records.
    std::int64_t effective_days() const {
        return day_number(end_) - day_number(start_) + 1 - static_cast<std::int64_t>(excluded_.size());
    }

    // Same range with no exclusions.
    ObservationWindow without_exclusions() const { return ObservationWindow(start_, end_); }

private:
    Date start_;
    Date end_;
    std::set<std::int64_t> excluded_;
};

// The event for `subject` in a call: the caller binds to the outgoing
// antenna, the callee to the receiving antenna.
inline Event normalize_cdr(const CdrRecord& record, const std::string& subject) {
    if (subject == record.caller_id) return Event{subject, record.timestamp, record.antenna_out, Stream::CDR};
    if (subject == record.callee_id) return Event{subject, record.timestamp, record.antenna_in, Stream::CDR};
    throw Error(ErrorKind::SubjectNotInRecord, "'" + subject + "' is neither caller nor callee");
}

struct NormalizeOptions {
    // Reject unknown tower ids; otherwise count and skip them.
    bool strict = true;
    // Emit callee-side events for incoming calls.
    bool include_callee = true;
    // When set, only these users produce events. Otherwise every party does.
    std::optional<std::unordered_set<std::string>> roster;
};

struct NormalizeStats {
    std::size_t input_records = 0;
    std::size_t emitted_events = 0;
    std::size_t dropped_outside_window = 0;
    std::size_t skipped_unknown_tower = 0;
    std::size_t skipped_not_in_roster = 0;
};

struct NormalizedStream {
    Stream stream = Stream::CDR;
    std::vector<Event> events;  // sorted by (user, timestamp, tower)
    NormalizeStats stats;
};

namespace detail {

inline bool in_roster(const NormalizeOptions& opt, const std::string& user) {
    return !opt.roster || opt.roster->count(user) != 0;
}

inline bool check_record(const CdrRecord& r, std::string& why) {
    if (!(r.duration_min >= 0.0)) {
        why = "negative call duration";
        return false;
    }
    return true;
}
inline bool check_record(const XdrRecord& r, std::string& why) {
    if (!(r.kilobytes >= 0.0)) {
        why = "negative kilobytes";
        return false;
    }
    return true;
}
inline bool check_record(const CprRecord& r, std::string& why) {
    if (r.event_kind.empty()) {
        why = "empty event kind";
        return false;
    }
    return true;
}

// Each (subject, antenna) pair a record contributes, subject to roster rules.
inline void candidate_events(const CdrRecord& r, const NormalizeOptions& opt,
                             std::vector<std::pair<const std::string*, const std::string*>>& out,
                             NormalizeStats& stats) {
    if (in_roster(opt, r.caller_id)) {
        out.emplace_back(&r.caller_id, &r.antenna_out);
    } else {
        ++stats.skipped_not_in_roster;
    }
    if (opt.include_callee && r.callee_id != r.caller_id) {
        if (in_roster(opt, r.callee_id)) {
            out.emplace_back(&r.callee_id, &r.antenna_in);
        } else if (opt.roster) {
            ++stats.skipped_not_in_roster;
        }
    }
}
template <typename R>
void candidate_events(const R& r, const NormalizeOptions& opt,
                      std::vector<std::pair<const std::string*, const std::string*>>& out,
                      NormalizeStats& stats) {
    if (in_roster(opt, r.user_id)) {
        out.emplace_back(&r.user_id, &r.antenna);
    } else {
        ++stats.skipped_not_in_roster;
    }
}

template <typename R>
constexpr Stream stream_of() {
    if constexpr (std::is_same_v<R, CdrRecord>) return Stream::CDR;
    else if constexpr (std::is_same_v<R, XdrRecord>) return Stream::XDR;
    else return Stream::CPR;
}

}  // namespace detail

// Converts one stream's raw records into sorted events. Records dated
// outside the window (or on an excluded date) are dropped and counted.
template <typename Record>
NormalizedStream normalize_stream(std::span<const Record> records, const ObservationWindow& window,
                                  const TowerRegistry& registry, const NormalizeOptions& options = {}) {
    constexpr Stream stream = detail::stream_of<Record>();
    NormalizedStream out;
    out.stream = stream;
    out.stats.input_records = records.size();
    out.events.reserve(records.size());

    std::vector<std::pair<const std::string*, const std::string*>> parties;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Record& r = records[i];
        std::string why;
        if (!detail::check_record(r, why)) {
            throw Error(ErrorKind::ParseError, "record " + std::to_string(i + 1) + ": " + why);
        }
        if (!window.contains(r.timestamp)) {
            ++out.stats.dropped_outside_window;
            continue;
        }
        parties.clear();
        detail::candidate_events(r, options, parties, out.stats);
        for (const auto& [user, antenna] : parties) {
            if (!registry.contains(*antenna)) {
                if (options.strict) {
                    throw Error(ErrorKind::UnknownTower,
                                "'" + *antenna + "' in " + std::string(stream_label(stream)) + " record " +
                                    std::to_string(i + 1));
                }
                ++out.stats.skipped_unknown_tower;
                continue;
            }
            out.events.push_back(Event{*user, r.timestamp, *antenna, stream});
        }
    }
    std::sort(out.events.begin(), out.events.end());
    out.stats.emitted_events = out.events.size();
    return out;
}

template <typename Record>
NormalizedStream normalize_stream(const std::vector<Record>& records, const ObservationWindow& window,
                                  const TowerRegistry& registry, const NormalizeOptions& options = {}) {
    return normalize_stream(std::span<const Record>(records), window, registry, options);
}

// Smallest window covering every record date, with no exclusions.
template <typename Record>
std::optional<ObservationWindow> covering_window(std::span<const Record> records) {
    if (records.empty()) return std::nullopt;
    auto [lo, hi] = std::minmax_element(records.begin(), records.end(), [](const Record& a, const Record& b) {
        return a.timestamp < b.timestamp;
    });
    return ObservationWindow(date_of(lo->timestamp), date_of(hi->timestamp));
}

// Events of one user within a sorted event sequence.
inline std::span<const Event> user_slice(std::span<const Event> sorted, const std::string& user) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), user,
                               [](const Event& e, const std::string& u) { return e.user_id < u; });
    auto hi = std::upper_bound(lo, sorted.end(), user,
                               [](const std::string& u, const Event& e) { return u < e.user_id; });
    return {lo, hi};
}

// Splits a sorted event sequence into per-user contiguous slices.
inline std::vector<std::span<const Event>> split_by_user(std::span<const Event> sorted) {
    std::vector<std::span<const Event>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i == sorted.size() || sorted[i].user_id != sorted[begin].user_id) {
            out.push_back(sorted.subspan(begin, i - begin));
            begin = i;
        }
    }
    return out;
}

}  // namespace homeloc
