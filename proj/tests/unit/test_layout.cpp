#include <gtest/gtest.h>

#include <future>

#include <storyline/layout.hpp>

#include "generators.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace storyline {
namespace {

using testkit::brute_force_first_fit;

HealthStory fixture_story(const char* name) { return deserialize_story(testkit::read_fixture(name)); }

Event make_event(std::string id, std::string title, std::string concern, TimeValue start,
                 TimeValue end = TimeValue::unspecified(), std::size_t index = 0) {
    Event e;
    e.id = std::move(id);
    e.title = std::move(title);
    e.specific_concern = std::move(concern);
    e.start = std::move(start);
    e.end = std::move(end);
    e.narrative_index = index;
    return e;
}

void expect_geometry_invariants(const LayoutGeometry& g, const LayoutConfig& config, const std::vector<Event>& events) {
    // Segments abut, in canonical order, and temporal widths sum to W(1-r).
    double temporal = 0;
    for (std::size_t i = 0; i < g.segments.size(); ++i) {
        const Segment& s = g.segments[i];
        EXPECT_LT(s.left, s.right);
        if (i > 0) {
            EXPECT_NEAR(g.segments[i - 1].right, s.left, 1e-9);
            EXPECT_LT(static_cast<int>(g.segments[i - 1].kind), static_cast<int>(s.kind) + (s.kind == SegmentKind::Timescale ? 1 : 0));
        }
        if (s.kind != SegmentKind::NoTime) temporal += s.width();
        if (s.scale) {
            EXPECT_GE(s.scale->x0, s.left);
            EXPECT_LE(s.scale->x1, s.right);
        }
    }
    const bool has_temporal = std::any_of(g.segments.begin(), g.segments.end(),
                                          [](const Segment& s) { return s.kind != SegmentKind::NoTime; });
    if (has_temporal) { EXPECT_NEAR(temporal, config.width * (1 - g.split_ratio), 1.0); }

    // Tracks stack without gaps; lanes sum to the track height.
    double y = g.chrome;
    std::size_t boxes = 0;
    for (const TrackGeometry& t : g.tracks) {
        EXPECT_DOUBLE_EQ(t.top, y);
        double lanes = 0;
        for (const Lane& l : t.lanes) {
            EXPECT_DOUBLE_EQ(l.top, t.top + lanes);
            lanes += l.height;
            for (std::size_t a = 0; a < l.boxes.size(); ++a) {
                const auto& A = l.boxes[a];
                ++boxes;
                EXPECT_GE(A.left, -1e-9);
                EXPECT_LE(A.right, config.width + 1e-9);
                EXPECT_GE(A.top, l.top);
                EXPECT_LE(A.bottom, l.top + l.height + 1e-9);
                EXPECT_GT(A.marker.y, A.bottom);
                EXPECT_LT(A.marker.y, l.top + l.height);
                EXPECT_LE(A.marker.x1, A.marker.x2);
                ASSERT_FALSE(A.spans.empty());
                EXPECT_GE(A.marker.x1, g.segments[A.spans.front()].left - 1e-9);
                EXPECT_LE(A.marker.x2, g.segments[A.spans.back()].right + 1e-9);
                for (std::size_t b = a + 1; b < l.boxes.size(); ++b) {
                    const auto& B = l.boxes[b];
                    const double a_left = std::min(A.left, A.marker.x1), a_right = std::max(A.right, A.marker.x2);
                    const double b_left = std::min(B.left, B.marker.x1), b_right = std::max(B.right, B.marker.x2);
                    EXPECT_TRUE(a_right + config.padding <= b_left + 1e-9 || b_right + config.padding <= a_left + 1e-9)
                        << A.event_id << " vs " << B.event_id;
                }
            }
        }
        EXPECT_NEAR(t.height(), lanes, 1e-9);
        y = t.bottom;
    }
    EXPECT_DOUBLE_EQ(g.total_height, y);
    EXPECT_EQ(boxes, events.size());
}

TEST(AllocateWidths, Examples) {
    auto w = allocate_segment_widths({2, 4, 2}, 1000, 0.2, 60);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_NEAR(w[0], 200, 1e-9);
    EXPECT_NEAR(w[1], 400, 1e-9);
    EXPECT_NEAR(w[2], 200, 1e-9);

    auto one = allocate_segment_widths({5}, 1000, 0.5, 60);
    EXPECT_NEAR(one[0], 500, 1e-9);

    auto omitted = allocate_segment_widths({0, 3, 0}, 1000, 0.2, 60);
    EXPECT_EQ(omitted[0], 0.0);
    EXPECT_NEAR(omitted[1], 800, 1e-9);
    EXPECT_EQ(omitted[2], 0.0);

    auto none = allocate_segment_widths({0, 0}, 1000, 0.2, 60);
    EXPECT_EQ(none, (std::vector<double>{0, 0}));
}

TEST(AllocateWidths, FloorAppliedBeforeRenormalizing) {
    auto w = allocate_segment_widths({1, 99}, 1000, 0.0, 100);
    EXPECT_NEAR(w[0] + w[1], 1000, 1e-9);
    EXPECT_GT(w[0], 10.0);
    EXPECT_NEAR(w[0] / w[1], 100.0 / 990.0, 1e-9);
}

TEST(AllocateWidths, ConservesWidth) {
    testkit::Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(testkit::uniform_int(rng, 1, 8)));
        for (auto& c : counts) c = static_cast<std::size_t>(testkit::uniform_int(rng, 0, 12));
        const double r = kSplitRatios[static_cast<std::size_t>(testkit::uniform_int(rng, 0, 8))];
        auto w = allocate_segment_widths(counts, 1600, r, 60);
        double sum = 0;
        std::size_t total = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            sum += w[i];
            total += counts[i];
            if (counts[i] == 0) EXPECT_EQ(w[i], 0.0);
            else EXPECT_GT(w[i], 0.0);
        }
        if (total > 0) { EXPECT_NEAR(sum, 1600 * (1 - r), 1.0); }
    }
}

TEST(PackTrack, DisjointAndIdentical) {
    EXPECT_EQ(pack_track({{0, 10, 0}, {30, 40, 1}}, 8), (std::vector<std::size_t>{0, 0}));
    EXPECT_EQ(pack_track({{0, 10, 0}, {0, 10, 1}}, 8), (std::vector<std::size_t>{0, 1}));
    // Gap smaller than the padding is a conflict.
    EXPECT_EQ(pack_track({{0, 10, 0}, {15, 20, 1}}, 8), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(pack_track({{0, 10, 0}, {18, 20, 1}}, 8), (std::vector<std::size_t>{0, 0}));
}

TEST(PackTrack, TenEventFixtureMatchesOracle) {
    const std::vector<PackItem> items = {
        {100, 260, 0}, {120, 200, 1}, {270, 400, 2}, {150, 300, 3}, {410, 500, 4},
        {0, 90, 5},    {205, 265, 6}, {300, 310, 7}, {100, 260, 8}, {505, 600, 9},
    };
    const auto got = pack_track(items, 8);
    EXPECT_EQ(got, brute_force_first_fit(items, 8));
    EXPECT_EQ(got, (std::vector<std::size_t>{0, 2, 0, 3, 0, 0, 4, 1, 1, 1}));
}

TEST(PackTrack, RandomMatchesOracle) {
    testkit::Rng rng(32);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<PackItem> items;
        const int n = testkit::uniform_int(rng, 0, 25);
        for (int i = 0; i < n; ++i) {
            const double left = testkit::uniform_int(rng, 0, 60) * 10.0;
            // Boxes always have positive width.
            items.push_back({left, left + testkit::uniform_int(rng, 1, 30) * 10.0,
                             static_cast<std::size_t>(testkit::uniform_int(rng, 0, 5))});
        }
        const double padding = testkit::uniform_int(rng, 0, 2) * 5.0;
        ASSERT_EQ(pack_track(items, padding), brute_force_first_fit(items, padding)) << "trial " << trial;
    }
}

TEST(MeasureBox, WrapsLongTextAndCoversIt) {
    LayoutConfig config;
    Event e = make_event("a", "A very long title that certainly does not fit on a single line of the box", "x",
                         TimeValue::unspecified());
    e.notes = "Some notes that also wrap onto more than one line when they are long enough to need it";
    auto size = measure_box(e, config);
    EXPECT_GT(size.title_lines.size(), 1u);
    EXPECT_GT(size.note_lines.size(), 1u);
    EXPECT_LE(size.width, config.max_box_width);
    for (const auto& l : size.title_lines)
        EXPECT_LE(text::display_length(l) * config.char_width + config.badge_width,
                  size.width - 2 * config.box_inset + 1e-9);
}

TEST(Draft, SingleEventSingleCluster) {
    LayoutConfig config;
    std::vector<Event> events = {make_event("a", "Asthma", "asthma", TimeValue::absolute(make_date(2020, 1, 1)))};
    auto g = draft_layout(events, group_story(events), config, 0.2);
    ASSERT_EQ(g.segments.size(), 1u);
    EXPECT_EQ(g.segments[0].kind, SegmentKind::Timescale);
    EXPECT_DOUBLE_EQ(g.segments[0].left, 320);
    ASSERT_EQ(g.tracks.size(), 1u);
    ASSERT_EQ(g.tracks[0].lanes.size(), 1u);
    EXPECT_DOUBLE_EQ(g.total_height, config.lane_height + config.chrome());
    const auto& box = g.tracks[0].lanes[0].boxes[0];
    EXPECT_EQ(box.marker.kind, MarkerKind::Circle);
    EXPECT_DOUBLE_EQ(box.marker.x1, g.segments[0].mid());
}

TEST(Draft, MixedTrackOrderAndSegments) {
    const HealthStory story = fixture_story("mixed_story.json");
    LayoutConfig config;
    auto g = draft_layout(story.events, group_story(story.events), config, 0.2);
    std::vector<std::string> labels;
    for (const auto& t : g.tracks) labels.push_back(t.label);
    EXPECT_EQ(labels, (std::vector<std::string>{"arthritis", "back pain", "migraines", "Other", "LifeConcern"}));
    EXPECT_EQ(g.tracks[0].broad_label, "musculoskeletal");
    EXPECT_EQ(g.tracks[1].broad_label, "musculoskeletal");
    EXPECT_EQ(g.tracks[3].kind, TrackKind::Other);
    EXPECT_EQ(g.tracks.back().kind, TrackKind::Life);

    std::vector<SegmentKind> kinds;
    for (const auto& s : g.segments) kinds.push_back(s.kind);
    EXPECT_EQ(kinds, (std::vector<SegmentKind>{SegmentKind::NoTime, SegmentKind::Past, SegmentKind::Timescale,
                                               SegmentKind::Present}));
    EXPECT_DOUBLE_EQ(g.segments[0].right, 320);

    // Date to Current draws to the middle of Present; Early to Current starts in Past.
    const auto* methotrexate = g.find_box("e3");
    ASSERT_TRUE(methotrexate);
    EXPECT_EQ(methotrexate->marker.kind, MarkerKind::Line);
    EXPECT_DOUBLE_EQ(methotrexate->marker.x2, g.segments[3].mid());
    EXPECT_EQ(methotrexate->spans, (std::vector<std::size_t>{2, 3}));
    const auto* migraines = g.find_box("e5");
    EXPECT_EQ(migraines->spans, (std::vector<std::size_t>{1, 2, 3}));
    const auto* therapist = g.find_box("e7");
    EXPECT_EQ(therapist->spans, (std::vector<std::size_t>{0}));
    expect_geometry_invariants(g, config, story.events);
}

TEST(Draft, TwoPeriodFixtureHasTwoTimescales) {
    const HealthStory story = fixture_story("two_periods_story.json");
    LayoutConfig config;
    auto g = draft_layout(story.events, group_story(story.events), config, 0.1);
    ASSERT_EQ(g.segments.size(), 2u);
    EXPECT_EQ(g.segments[0].kind, SegmentKind::Timescale);
    EXPECT_EQ(g.segments[1].kind, SegmentKind::Timescale);
    expect_geometry_invariants(g, config, story.events);
}

TEST(Timeline, AllUndatedUsesOnlyNoTime) {
    std::vector<Event> events = {make_event("a", "Tired", "x", TimeValue::unspecified(), TimeValue::unspecified(), 0),
                                 make_event("b", "Dizzy", "x", TimeValue::unspecified(), TimeValue::unspecified(), 1)};
    auto g = timeline_layout(events, group_story(events));
    ASSERT_EQ(g.segments.size(), 1u);
    EXPECT_EQ(g.segments[0].kind, SegmentKind::NoTime);
    EXPECT_DOUBLE_EQ(g.segments[0].right, 1600);
    EXPECT_DOUBLE_EQ(g.split_ratio, 0.10);
}

TEST(Timeline, EmptyStory) {
    LayoutConfig config;
    auto g = timeline_layout(std::vector<Event>{}, group_story({}), config);
    EXPECT_TRUE(g.segments.empty());
    EXPECT_TRUE(g.tracks.empty());
    EXPECT_DOUBLE_EQ(g.total_height, config.chrome());
    auto s = single_timescale_layout(std::vector<Event>{}, group_story({}), config);
    EXPECT_TRUE(s.segments.empty());
    EXPECT_DOUBLE_EQ(s.total_height, config.chrome());
}

std::vector<Event> crowded_no_time_story() {
    std::vector<Event> events;
    for (std::size_t i = 0; i < 6; ++i)
        events.push_back(make_event("u" + std::to_string(i), "Undated symptom " + std::to_string(i), "fatigue",
                                    TimeValue::unspecified(), TimeValue::unspecified(), i));
    events.push_back(make_event("d", "Bloodwork", "fatigue", TimeValue::absolute(make_date(2021, 4, 2)),
                                TimeValue::unspecified(), 6));
    return events;
}

TEST(Timeline, WiderNoTimeWinsWhenItReducesConflicts) {
    const auto events = crowded_no_time_story();
    const auto groups = group_story(events);
    LayoutConfig config;
    auto g = timeline_layout(events, groups, config);
    EXPECT_GT(g.split_ratio, 0.10 + 1e-9);
    for (double r : kSplitRatios) EXPECT_LE(g.total_height, draft_layout(events, groups, config, r).total_height);
}

TEST(Timeline, SplitOptimalityOnRandomStories) {
    testkit::Rng rng(33);
    LayoutConfig config;
    for (int trial = 0; trial < 60; ++trial) {
        const HealthStory story = testkit::random_valid_story(rng);
        const auto groups = group_story(story.events);
        auto g = timeline_layout(story.events, groups, config);
        double best = std::numeric_limits<double>::infinity();
        double best_r = 0;
        for (double r : kSplitRatios) {
            const double h = draft_layout(story.events, groups, config, r).total_height;
            if (h < best) {
                best = h;
                best_r = r;
            }
        }
        EXPECT_DOUBLE_EQ(g.total_height, best);
        EXPECT_DOUBLE_EQ(g.split_ratio, best_r);
        expect_geometry_invariants(g, config, story.events);
    }
}

TEST(Timeline, ScaleMonotoneWithinAndAcrossSegments) {
    testkit::Rng rng(34);
    LayoutConfig config;
    for (int trial = 0; trial < 60; ++trial) {
        const HealthStory story = testkit::random_valid_story(rng);
        auto g = timeline_layout(story);
        std::vector<std::pair<CalendarDate, double>> placed;
        for (const Segment& s : g.segments) {
            if (!s.scale) continue;
            const long a = to_day_number(s.scale->from), b = to_day_number(s.scale->to);
            for (long d = a; d < b; d += std::max(1L, (b - a) / 17))
                EXPECT_LT((*s.scale)(from_day_number(d)), (*s.scale)(from_day_number(std::min(b, d + 1))));
            placed.push_back({s.scale->from, (*s.scale)(s.scale->from)});
            placed.push_back({s.scale->to, (*s.scale)(s.scale->to)});
            EXPECT_GT((*s.scale)(s.scale->from), s.left);
            EXPECT_LT((*s.scale)(s.scale->to), s.right);
        }
        for (std::size_t i = 1; i < placed.size(); ++i) {
            EXPECT_LE(placed[i - 1].first, placed[i].first);
            if (placed[i - 1].first < placed[i].first) { EXPECT_LT(placed[i - 1].second, placed[i].second); }
        }
    }
}

TEST(Timeline, Deterministic) {
    testkit::Rng rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        const HealthStory story = testkit::random_valid_story(rng);
        EXPECT_EQ(to_json(timeline_layout(story)).dump(), to_json(timeline_layout(story)).dump());
    }
}

TEST(Timeline, ConcurrentDraftsMatchSequential) {
    const HealthStory story = fixture_story("two_periods_story.json");
    const auto groups = group_story(story.events);
    LayoutConfig config;
    std::vector<std::future<LayoutGeometry>> futures;
    for (double r : kSplitRatios)
        futures.push_back(std::async(std::launch::async, [&, r] { return draft_layout(story.events, groups, config, r); }));
    for (std::size_t i = 0; i < kSplitRatios.size(); ++i)
        EXPECT_EQ(futures[i].get(), draft_layout(story.events, groups, config, kSplitRatios[i]));
}

TEST(SingleTimescale, SingleClusterMatchesMulti) {
    const HealthStory story = fixture_story("single_cluster_story.json");
    EXPECT_EQ(group_story(story.events).times.clusters.size(), 1u);
    auto multi = timeline_layout(story);
    auto single = single_timescale_layout(story);
    EXPECT_DOUBLE_EQ(multi.total_height, single.total_height);
    EXPECT_EQ(multi, single);
}

TEST(SingleTimescale, TwoPeriodsIsTaller) {
    const HealthStory story = fixture_story("two_periods_story.json");
    auto multi = timeline_layout(story);
    auto single = single_timescale_layout(story);
    ASSERT_EQ(single.segments.size(), 1u);
    EXPECT_GT(single.total_height, multi.total_height);
}

TEST(SingleTimescale, CompactnessOnBundledFixtures) {
    for (const char* name : {"mixed_story.json", "two_periods_story.json", "single_cluster_story.json"}) {
        const HealthStory story = fixture_story(name);
        if (group_story(story.events).times.clusters.size() < 2) continue;
        EXPECT_LE(timeline_layout(story).total_height, single_timescale_layout(story).total_height) << name;
    }
}

TEST(GeometryJson, ListsSegmentsTracksAndBoxes) {
    const HealthStory story = fixture_story("mixed_story.json");
    const Json j = to_json(timeline_layout(story));
    EXPECT_EQ(j["segments"].size(), 4u);
    EXPECT_EQ(j["tracks"].size(), 5u);
    EXPECT_EQ(j["tracks"][0]["lanes"][0]["boxes"][0]["eventId"].get<std::string>().front(), 'e');
    EXPECT_TRUE(j["segments"][2].contains("scale"));
    EXPECT_FALSE(j["segments"][0].contains("scale"));
}

}  // namespace
}  // namespace storyline
