// Parses a short narrative, lays it out and writes the SVG to stdout.
#include <iostream>

#include <storyline/layout.hpp>
#include <storyline/narrative.hpp>
#include <storyline/render.hpp>

int main() {
    using namespace storyline;

    const std::string narrative =
        "Growing up I had bad asthma attacks. I was diagnosed with asthma in 1995.\n"
        "I started getting migraines in March 2010. Since 2012 I have been taking triptans.\n"
        "I got married in 2024.";

    ParserConfig config;
    config.reference_date = make_date(2025, 1, 1);

    HealthStory story;
    story.name = "Jordan";
    story.date_of_birth = make_date(1985, 3, 10);
    story.source_narrative = narrative;
    story.events = extract_events(narrative, Profile{story.name, story.date_of_birth}, config);
    story = resolve_relative_dates(story);

    for (const Violation& v : validate_story(story)) std::cerr << v.event_id << ": " << v.detail << "\n";

    const LayoutGeometry geometry = timeline_layout(story);
    std::cerr << story.events.size() << " events, " << geometry.segments.size() << " segments, height "
              << geometry.total_height << "\n";
    std::cout << render_svg(geometry, story);
}
