#include "support.hpp"

#include <gtest/gtest.h>

using namespace homeloc;
using testkit::ev;
using testkit::ts;

namespace {

TowerRegistry santiago() {
    return TowerRegistry({{"ESALT", {-33.40374, -70.63715}},
                          {"LUISZ", {-33.57250, -70.57569}},
                          {"SUEG1", {-33.48468, -70.55035}},
                          {"AGSTF", {-33.48468, -70.55035}},
                          {"PAROC", {-33.44548, -70.61918}},
                          {"SALAL", {-33.45000, -70.62000}},
                          {"_0056", {-33.41000, -70.64000}}});
}

CdrRecord call(const std::string& caller, const std::string& callee, const std::string& when,
               const std::string& out, const std::string& in) {
    return CdrRecord{caller, callee, ts(when), 1.5, out, in};
}

// afa64's calls: five at ESALT over two days, three at _0056, one at SALAL.
std::vector<Event> afa64_events() {
    return {ev("afa64", "2019-09-24T08:10:00", "ESALT"), ev("afa64", "2019-09-24T09:00:00", "ESALT"),
            ev("afa64", "2019-09-24T21:30:00", "ESALT"), ev("afa64", "2019-09-25T07:45:00", "ESALT"),
            ev("afa64", "2019-09-25T22:00:00", "ESALT"), ev("afa64", "2019-09-26T12:00:00", "_0056"),
            ev("afa64", "2019-09-26T13:00:00", "_0056"), ev("afa64", "2019-09-26T14:00:00", "_0056"),
            ev("afa64", "2019-09-27T10:00:00", "SALAL")};
}

const ObservationWindow kWindow(testkit::date("2019-09-24"), testkit::date("2019-10-06"));

}  // namespace

// ---- record model

TEST(RecordModel, CallerAndCalleeBindToTheirAntennas) {
    const auto r = call("afa64", "x", "2019-09-24T10:00:00", "ESALT", "SALAL");
    EXPECT_EQ(normalize_cdr(r, "afa64"), (Event{"afa64", r.timestamp, "ESALT", Stream::CDR}));
    EXPECT_EQ(normalize_cdr(r, "x"), (Event{"x", r.timestamp, "SALAL", Stream::CDR}));
    try {
        normalize_cdr(r, "nobody");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SubjectNotInRecord);
    }
}

TEST(RecordModel, ExcludedDateIsDropped) {
    const auto reg = santiago();
    const auto window = ObservationWindow::with_exclusions(testkit::date("2019-09-24"), testkit::date("2019-10-06"),
                                                           {testkit::date("2019-10-05")});
    std::vector<CprRecord> recs{{"u1", ts("2019-10-05T12:00:00"), "ESALT", "attach"},
                                {"u1", ts("2019-10-04T12:00:00"), "ESALT", "attach"},
                                {"u1", ts("2019-10-07T00:00:00"), "ESALT", "attach"}};
    const auto out = normalize_stream(recs, window, reg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].timestamp, ts("2019-10-04T12:00:00"));
    EXPECT_EQ(out.stats.dropped_outside_window, 2u);
    EXPECT_EQ(window.effective_days(), 12);
}

TEST(RecordModel, UnknownTowerStrictAndLenient) {
    const auto reg = santiago();
    std::vector<XdrRecord> recs{{"u1", ts("2019-09-25T12:00:00"), "ZZZZZ", 10.0},
                                {"u1", ts("2019-09-25T13:00:00"), "ESALT", 10.0}};
    try {
        normalize_stream(recs, kWindow, reg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownTower);
    }
    NormalizeOptions lenient;
    lenient.strict = false;
    const auto out = normalize_stream(recs, kWindow, reg, lenient);
    EXPECT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.stats.skipped_unknown_tower, 1u);
}

TEST(RecordModel, ConservationAndPermutationInvariance) {
    const auto reg = santiago();
    std::vector<CdrRecord> recs;
    const std::vector<std::string> ids{"ESALT", "LUISZ", "SUEG1", "AGSTF", "PAROC", "SALAL", "_0056"};
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        char when[32];
        std::snprintf(when, sizeof when, "2019-09-%02dT%02d:%02d:00", 22 + static_cast<int>(rng() % 16 % 9),
                      static_cast<int>(rng() % 24), static_cast<int>(rng() % 60));
        recs.push_back(call("u" + std::to_string(rng() % 5), "v" + std::to_string(rng() % 5), when,
                            ids[rng() % ids.size()], ids[rng() % ids.size()]));
    }
    const auto base = normalize_stream(recs, kWindow, reg);
    const auto& s = base.stats;
    EXPECT_EQ(s.input_records, recs.size());
    EXPECT_EQ(s.emitted_events, 2 * (s.input_records - s.dropped_outside_window));
    EXPECT_TRUE(std::is_sorted(base.events.begin(), base.events.end()));

    std::shuffle(recs.begin(), recs.end(), rng);
    EXPECT_EQ(normalize_stream(recs, kWindow, reg).events, base.events);

    NormalizeOptions no_callee;
    no_callee.include_callee = false;
    EXPECT_EQ(normalize_stream(recs, kWindow, reg, no_callee).events.size(),
              s.input_records - s.dropped_outside_window);
}

TEST(RecordModel, RosterFiltersParties) {
    const auto reg = santiago();
    std::vector<CdrRecord> recs{call("afa64", "x", "2019-09-24T10:00:00", "ESALT", "SALAL")};
    NormalizeOptions opt;
    opt.roster = std::unordered_set<std::string>{"afa64"};
    const auto out = normalize_stream(recs, kWindow, reg, opt);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].user_id, "afa64");
    EXPECT_EQ(out.stats.skipped_not_in_roster, 1u);
}

TEST(RecordModel, WindowValidation) {
    EXPECT_THROW(ObservationWindow(testkit::date("2019-10-06"), testkit::date("2019-09-24")), Error);
    EXPECT_THROW(ObservationWindow::with_exclusions(testkit::date("2019-09-24"), testkit::date("2019-10-06"),
                                                    {testkit::date("2019-11-01")}),
                 Error);
}

// ---- HDAs

TEST(Hda, Hda1CountsRecords) {
    const auto e = afa64_events();
    EXPECT_EQ(score_hda1(e), (ScoreMap{{"ESALT", 5}, {"_0056", 3}, {"SALAL", 1}}));
}

TEST(Hda, Hda2CountsDistinctDays) {
    const auto e = afa64_events();
    auto scores = score_hda2(e, kWindow);
    EXPECT_EQ(scores.at("ESALT"), 2);
    EXPECT_EQ(scores.at("_0056"), 1);
    EXPECT_EQ(scores.at("SALAL"), 1);
}

TEST(Hda, Hda3CountsOnlyNightHours) {
    const std::vector<Event> e{ev("u", "2019-09-24T18:59:59", "A"), ev("u", "2019-09-24T19:00:00", "A"),
                               ev("u", "2019-09-25T00:30:00", "B"), ev("u", "2019-09-25T06:59:59", "B"),
                               ev("u", "2019-09-25T07:00:00", "C")};
    EXPECT_EQ(score_hda3(e), (ScoreMap{{"A", 1}, {"B", 2}}));
    EXPECT_EQ(score_hda3(e, NightWindow{0, 0}).size(), 3u);
    EXPECT_EQ(score_hda3(e, NightWindow{1, 7}), (ScoreMap{{"B", 1}}));
}

TEST(Hda, RankingOrderAndActivityTable) {
    const auto reg = santiago();
    const HdaContext ctx(reg);
    const auto e = afa64_events();
    const auto det = detect_home(e, HdaId::HDA1, ctx);
    EXPECT_EQ(det.home(), "ESALT");
    EXPECT_EQ(det.ranking, (Ranking{{"ESALT", 5}, {"_0056", 3}, {"SALAL", 1}}));

    StreamEvents streams{{Stream::CDR, e}};
    const auto rows = build_activity_table(detect_all(streams, ctx, std::array{HdaId::HDA1}));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (ActivityRow{"afa64", "ESALT", 5, Stream::CDR, HdaId::HDA1}));
    EXPECT_EQ(rows[1], (ActivityRow{"afa64", "_0056", 3, Stream::CDR, HdaId::HDA1}));
    EXPECT_EQ(rows[2], (ActivityRow{"afa64", "SALAL", 1, Stream::CDR, HdaId::HDA1}));
}

TEST(Hda, TiesBreakByTowerId) {
    const std::vector<Event> e{ev("u", "2019-09-24T10:00:00", "ZED"), ev("u", "2019-09-24T11:00:00", "ALPHA"),
                               ev("u", "2019-09-24T12:00:00", "MID")};
    const auto r = rank(score_hda1(e));
    EXPECT_EQ(r[0].tower, "ALPHA");
    EXPECT_EQ(r[1].tower, "MID");
    EXPECT_EQ(r[2].tower, "ZED");
}

TEST(Hda, NoQualifyingActivity) {
    const auto reg = santiago();
    const HdaContext ctx(reg);
    const std::vector<Event> day_only{ev("u", "2019-09-24T12:00:00", "ESALT")};
    try {
        detect_home(day_only, HdaId::HDA3, ctx);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoQualifyingActivity);
    }
    EXPECT_EQ(detect_home(day_only, HdaId::HDA1, ctx).home(), "ESALT");
}

TEST(Hda, PerimeterIncludesCoLocatedTowers) {
    const auto reg = santiago();
    const std::vector<Event> e{ev("u", "2019-09-24T20:00:00", "SUEG1"), ev("u", "2019-09-24T21:00:00", "AGSTF"),
                               ev("u", "2019-09-24T22:00:00", "AGSTF"), ev("u", "2019-09-24T12:00:00", "LUISZ")};
    EXPECT_EQ(score_hda4(e, reg), (ScoreMap{{"AGSTF", 3}, {"SUEG1", 3}, {"LUISZ", 1}}));
    EXPECT_EQ(score_hda5(e, reg), (ScoreMap{{"AGSTF", 3}, {"SUEG1", 3}}));
}

TEST(Hda, PerimeterMatchesQuadraticOracle) {
    std::mt19937_64 rng(21);
    const auto towers = testkit::random_towers(400, rng, 0.15);
    const TowerRegistry reg(towers);
    const HdaContext ctx(reg);
    const NightWindow night;
    for (int u = 0; u < 25; ++u) {
        std::vector<Event> e;
        const int n = 1 + static_cast<int>(rng() % 80);
        for (int i = 0; i < n; ++i) {
            const auto when = ts("2019-09-24T00:00:00") + std::chrono::seconds(rng() % (14 * 86400));
            e.push_back({"u", when, towers[rng() % 30].id, Stream::XDR});
        }
        EXPECT_EQ(score(e, HdaId::HDA4, ctx), testkit::brute_perimeter(e, reg, 1.0, [](const Event&) { return true; }));
        EXPECT_EQ(score(e, HdaId::HDA5, ctx),
                  testkit::brute_perimeter(e, reg, 1.0, [&](const Event& x) { return night.contains(x.timestamp); }));
    }
}

TEST(Hda, ScoreOrderingInvariants) {
    const auto cfg = testkit::small_config(4);
    const auto world = generate_world(cfg);
    const auto streams = normalize_world(world, cfg);
    const HdaContext ctx(world.registry);
    for (const auto& [stream, events] : streams) {
        for (auto slice : split_by_user(events)) {
            const auto h1 = score(slice, HdaId::HDA1, ctx);
            const auto h2 = score(slice, HdaId::HDA2, ctx);
            const auto h3 = score(slice, HdaId::HDA3, ctx);
            const auto h4 = score(slice, HdaId::HDA4, ctx);
            const auto h5 = score(slice, HdaId::HDA5, ctx);
            for (const auto& [t, v] : h1) {
                EXPECT_GE(h4.at(t), v);
                EXPECT_LE(h2.at(t), v);
                EXPECT_LE(h2.at(t), cfg.window(stream).effective_days());
            }
            for (const auto& [t, v] : h3) EXPECT_LE(v, h1.at(t));
            for (const auto& [t, v] : h5) EXPECT_LE(v, h4.at(t));
        }
    }
}

TEST(Hda, DetectAllIndependentOfJobs) {
    const auto cfg = testkit::small_config(6);
    const auto world = generate_world(cfg);
    const auto streams = normalize_world(world, cfg);
    const HdaContext ctx(world.registry);
    EXPECT_EQ(detect_all(streams, ctx, kAllHdas, 1), detect_all(streams, ctx, kAllHdas, 4));
}

TEST(Hda, ActivityTableRoundTripsToDetections) {
    const auto cfg = testkit::small_config(8);
    const auto world = generate_world(cfg);
    const HdaContext ctx(world.registry);
    const auto det = detect_all(normalize_world(world, cfg), ctx);
    const auto rows = build_activity_table(det);
    EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), activity_row_less));
    EXPECT_EQ(detections_from_activity(rows), det);
}

TEST(Hda, LabelsParse) {
    EXPECT_EQ(parse_hda_label("HDA3"), HdaId::HDA3);
    EXPECT_EQ(parse_hda_label("5"), HdaId::HDA5);
    EXPECT_FALSE(parse_hda_label("HDA6"));
    EXPECT_EQ(parse_stream_label("CPRs"), Stream::CPR);
    EXPECT_THROW((NightWindow{25, 7}.validate()), Error);
}
