#include <gtest/gtest.h>

#include <expat.h>

#include <cstdlib>
#include <fstream>
#include <map>

#include <storyline/render.hpp>

#include "generators.hpp"
#include "test_support.hpp"

namespace storyline {
namespace {

struct XmlSummary {
    bool well_formed = false;
    std::string error;
    std::string root;
    std::map<std::string, int> ids;      // id attribute -> occurrences
    std::map<std::string, int> classes;  // class token -> occurrences
    std::map<std::string, int> elements;
    std::vector<std::pair<std::string, std::string>> event_markers;  // event id -> marker element
    std::vector<std::string> texts;
};

struct ParseState {
    XmlSummary* summary;
    std::vector<std::string> event_stack;
    std::string text;
};

XmlSummary parse_svg(const std::string& doc) {
    XmlSummary summary;
    ParseState state{&summary, {}, {}};
    XML_Parser parser = XML_ParserCreate("UTF-8");
    XML_SetUserData(parser, &state);
    XML_SetElementHandler(
        parser,
        [](void* data, const XML_Char* name, const XML_Char** attrs) {
            auto* st = static_cast<ParseState*>(data);
            auto& s = *st->summary;
            if (s.root.empty()) s.root = name;
            ++s.elements[name];
            std::string id, cls;
            for (int i = 0; attrs[i]; i += 2) {
                if (std::string_view(attrs[i]) == "id") id = attrs[i + 1];
                if (std::string_view(attrs[i]) == "class") cls = attrs[i + 1];
            }
            if (!id.empty()) ++s.ids[id];
            std::size_t pos = 0;
            while (pos < cls.size()) {
                auto end = cls.find(' ', pos);
                if (end == std::string::npos) end = cls.size();
                if (end > pos) ++s.classes[cls.substr(pos, end - pos)];
                pos = end + 1;
            }
            st->event_stack.push_back(id.rfind("event-", 0) == 0 ? id.substr(6) : "");
            if (cls.find("marker") != std::string::npos) {
                std::string owner;
                for (auto it = st->event_stack.rbegin(); it != st->event_stack.rend(); ++it)
                    if (!it->empty()) {
                        owner = *it;
                        break;
                    }
                s.event_markers.push_back({owner, name});
            }
            st->text.clear();
        },
        [](void* data, const XML_Char* name) {
            auto* st = static_cast<ParseState*>(data);
            if (std::string_view(name) == "text") st->summary->texts.push_back(st->text);
            st->event_stack.pop_back();
        });
    XML_SetCharacterDataHandler(parser, [](void* data, const XML_Char* s, int len) {
        static_cast<ParseState*>(data)->text.append(s, static_cast<std::size_t>(len));
    });
    summary.well_formed = XML_Parse(parser, doc.data(), static_cast<int>(doc.size()), XML_TRUE) == XML_STATUS_OK;
    if (!summary.well_formed) summary.error = XML_ErrorString(XML_GetErrorCode(parser));
    XML_ParserFree(parser);
    return summary;
}

Segment timescale(CalendarDate from, CalendarDate to, double left = 0, double right = 600) {
    Segment s;
    s.kind = SegmentKind::Timescale;
    s.left = left;
    s.right = right;
    s.scale = LinearScale{from, to, left + 12, right - 12};
    return s;
}

std::string render_story(const HealthStory& story) {
    return render_svg(timeline_layout(story), story);
}

TEST(GridTicks, TenYearsIsYearly) {
    auto ticks = compute_grid_ticks(timescale(make_date(2015, 1, 1), make_date(2025, 1, 1)));
    ASSERT_EQ(ticks.size(), 11u);
    for (const auto& t : ticks) EXPECT_EQ(t.unit, TickUnit::Year);
    EXPECT_EQ(ticks.front().date, make_date(2015, 1, 1));
    EXPECT_EQ(ticks.back().date, make_date(2025, 1, 1));
    EXPECT_DOUBLE_EQ(ticks.front().x, 12);
    EXPECT_DOUBLE_EQ(ticks.back().x, 588);
}

TEST(GridTicks, SixMonthsIsMonthly) {
    auto ticks = compute_grid_ticks(timescale(make_date(2020, 3, 10), make_date(2020, 9, 10)));
    ASSERT_EQ(ticks.size(), 6u);
    EXPECT_EQ(ticks.front().unit, TickUnit::Month);
    EXPECT_EQ(ticks.front().date, make_date(2020, 4, 1));
    EXPECT_EQ(ticks.back().date, make_date(2020, 9, 1));
}

TEST(GridTicks, ZeroSpanIsOneCentredTick) {
    auto ticks = compute_grid_ticks(timescale(make_date(2020, 3, 10), make_date(2020, 3, 10), 100, 300));
    ASSERT_EQ(ticks.size(), 1u);
    EXPECT_DOUBLE_EQ(ticks[0].x, 200);
}

TEST(GridTicks, ShortSpanWithoutBoundary) {
    auto ticks = compute_grid_ticks(timescale(make_date(2020, 3, 10), make_date(2020, 3, 20)));
    ASSERT_EQ(ticks.size(), 1u);
    EXPECT_EQ(ticks[0].date, make_date(2020, 3, 10));
}

TEST(GridTicks, NonTimescaleHasNone) {
    Segment s;
    s.kind = SegmentKind::Past;
    s.right = 100;
    EXPECT_TRUE(compute_grid_ticks(s).empty());
}

TEST(GridTicks, CountBoundedAndInsideSegment) {
    testkit::Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const CalendarDate a = testkit::random_date(rng, 1900, 2024);
        const CalendarDate b = from_day_number(to_day_number(a) + testkit::uniform_int(rng, 0, 40000));
        const Segment s = timescale(a, b);
        auto ticks = compute_grid_ticks(s);
        ASSERT_GE(ticks.size(), 1u);
        // Boundary alignment can add one tick beyond the nominal count.
        EXPECT_LE(ticks.size(), kMaxTicks + 1);
        for (std::size_t i = 0; i < ticks.size(); ++i) {
            EXPECT_GE(ticks[i].x, s.scale->x0 - 1e-9);
            EXPECT_LE(ticks[i].x, s.scale->x1 + 1e-9);
            if (i > 0) { EXPECT_LT(ticks[i - 1].x, ticks[i].x); }
        }
    }
}

TEST(GridTicks, DenserTimeNeverGetsFinerUnit) {
    // At equal pixel width, time per pixel orders like span.
    TickUnit prev = choose_tick_unit(0);
    for (long span = 1; span < 50000; span += 7) {
        const TickUnit u = choose_tick_unit(span);
        EXPECT_GE(static_cast<int>(u), static_cast<int>(prev)) << span;
        prev = u;
    }
}

TEST(Escape, XmlSpecials) {
    EXPECT_EQ(render_detail::escape("<tag attr=\"a&b\">O'Reilly</tag>"),
              "&lt;tag attr=&quot;a&amp;b&quot;&gt;O&apos;Reilly&lt;/tag&gt;");
    EXPECT_EQ(render_detail::escape(std::string("a\x01" "b", 3)), "ab");
    EXPECT_EQ(render_detail::escape("café"), "café");
}

TEST(Render, EmptyGeometryIsChromeOnly) {
    HealthStory story;
    story.name = "Nobody";
    const std::string svg = render_story(story);
    auto x = parse_svg(svg);
    ASSERT_TRUE(x.well_formed) << x.error;
    EXPECT_EQ(x.root, "svg");
    EXPECT_EQ(x.classes["event"], 0);
    EXPECT_EQ(x.classes["segment"], 0);
    EXPECT_EQ(x.classes["track"], 0);
    EXPECT_EQ(x.classes["canvas"], 1);
}

TEST(Render, SingleLifeEventHasOneFullHeightLine) {
    HealthStory story;
    story.name = "Kim";
    Event e;
    e.id = "e1";
    e.title = "Moved to Denver";
    e.designation = Designation::LifeEvent;
    e.specific_concern = std::string(kLifeConcern);
    e.start = TimeValue::absolute(make_date(2014, 8, 1), Precision::Month);
    story.events.push_back(e);
    const auto geometry = timeline_layout(story);
    const std::string svg = render_svg(geometry, story);
    auto x = parse_svg(svg);
    ASSERT_TRUE(x.well_formed) << x.error;
    EXPECT_EQ(x.classes["life-line"], 1);
    const std::string needle = "class=\"life-line\" x1=\"";
    const auto at = svg.find(needle);
    ASSERT_NE(at, std::string::npos);
    const std::string line = svg.substr(at, svg.find("/>", at) - at);
    EXPECT_NE(line.find("y1=\"" + render_detail::num(geometry.chrome) + "\""), std::string::npos) << line;
    EXPECT_NE(line.find("y2=\"" + render_detail::num(geometry.total_height) + "\""), std::string::npos) << line;
}

TEST(Render, DanglingIdIsConsistencyError) {
    const HealthStory story = deserialize_story(testkit::read_fixture("mixed_story.json"));
    auto geometry = timeline_layout(story);
    geometry.tracks[0].lanes[0].boxes[0].event_id = "ghost";
    EXPECT_THROW(render_svg(geometry, story), RenderConsistencyError);

    HealthStory fewer = story;
    fewer.events.pop_back();
    EXPECT_THROW(render_svg(timeline_layout(story), fewer), RenderConsistencyError);
}

TEST(Render, MixedFixtureContents) {
    const HealthStory story = deserialize_story(testkit::read_fixture("mixed_story.json"));
    const std::string svg = render_story(story);
    auto x = parse_svg(svg);
    ASSERT_TRUE(x.well_formed) << x.error;
    for (const auto& e : story.events) EXPECT_EQ(x.ids["event-" + e.id], 1) << e.id;
    EXPECT_EQ(x.ids["segment-3"], 1);
    EXPECT_EQ(x.ids["track-4"], 1);
    EXPECT_EQ(x.classes["life-line"], 2);
    EXPECT_GT(x.classes["grid"], 0);
    EXPECT_GT(x.classes["axis-age"], 0);
    EXPECT_EQ(x.classes["segment-boundary"], 3);
    EXPECT_EQ(x.classes["track-separator"], 5);
    // Dual axis: every absolute label has an age label below it.
    EXPECT_EQ(x.classes["axis-absolute"], x.classes["axis-age"]);
    bool found_age = false;
    for (const auto& t : x.texts) found_age = found_age || t == "age 35";  // 2016-01-01 for a 1980-04-02 birth
    EXPECT_TRUE(found_age);
    EXPECT_NE(std::find(x.texts.begin(), x.texts.end(), "Twice a week & home exercises"), x.texts.end());
}

TEST(Render, MarkerKindMatchesExtent) {
    testkit::Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const HealthStory story = testkit::random_valid_story(rng);
        auto x = parse_svg(render_story(story));
        ASSERT_TRUE(x.well_formed) << x.error;
        ASSERT_EQ(x.event_markers.size(), story.events.size());
        for (const auto& [id, element] : x.event_markers) {
            const Event* e = story.find(id);
            ASSERT_TRUE(e) << id;
            EXPECT_EQ(element, is_point_event(*e) ? "circle" : "line") << id;
        }
        for (const auto& e : story.events) EXPECT_EQ(x.ids["event-" + e.id], 1);
    }
}

TEST(Render, DeterministicAndValidOnRandomStories) {
    testkit::Rng rng(43);
    for (int trial = 0; trial < 40; ++trial) {
        const HealthStory story = testkit::random_valid_story(rng);
        const std::string a = render_story(story);
        EXPECT_EQ(a, render_story(story));
        auto x = parse_svg(a);
        EXPECT_TRUE(x.well_formed) << x.error;
    }
}

void check_golden(const char* fixture, const char* golden) {
    const HealthStory story = deserialize_story(testkit::read_fixture(fixture));
    const std::string svg = render_story(story);
    const std::string path = testkit::golden_path(golden);
    if (std::getenv("STORYLINE_UPDATE_GOLDEN")) {
        std::ofstream(path, std::ios::binary) << svg;
        GTEST_SKIP() << "golden updated: " << path;
    }
    EXPECT_EQ(svg, testkit::read_file(path)) << "rerun with STORYLINE_UPDATE_GOLDEN=1 after reviewing " << path;
}

TEST(Golden, Mixed) { check_golden("mixed_story.json", "mixed_story.svg"); }
TEST(Golden, TwoPeriods) { check_golden("two_periods_story.json", "two_periods_story.svg"); }
TEST(Golden, SingleCluster) { check_golden("single_cluster_story.json", "single_cluster_story.svg"); }

}  // namespace
}  // namespace storyline
