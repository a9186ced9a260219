#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <storyline/http_api.hpp>
#include <storyline/layout.hpp>
#include <storyline/narrative.hpp>
#include <storyline/remote_http.hpp>
#include <storyline/render.hpp>
#include <storyline/service.hpp>
#include <storyline/story_json.hpp>

using namespace storyline;

namespace {

enum Exit : int { kOk = 0, kIo = 2, kInvalid = 3, kRemote = 4 };

struct IoError : Error {
    using Error::Error;
};

struct InvalidInput : Error {
    using Error::Error;
};

std::string read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
        if (!std::cout) throw IoError("cannot write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + path);
}

std::optional<CalendarDate> date_flag(const std::string& value, const char* flag) {
    if (value.empty()) return std::nullopt;
    auto d = parse_iso_date(value);
    if (!d) throw InvalidInput(std::string(flag) + " must be YYYY-MM-DD, got '" + value + "'");
    return d;
}

void print_report(const ValidationReport& report) {
    for (const Violation& v : report)
        std::cerr << "violation: " << v.event_id << ": " << to_string(v.rule) << ": " << v.detail << "\n";
}

bool is_soft(Rule r) { return r == Rule::UnresolvedRelativeDate || r == Rule::BeforeBirth; }

/// Loads a story document the way the service imports one.
HealthStory load_story(const std::string& path) {
    HealthStory story = deserialize_story(read_input(path));
    anchor_relative_dates(story);
    ValidationReport hard;
    for (const Violation& v : validate_story(story))
        if (!is_soft(v.rule)) hard.push_back(v);
    if (!hard.empty()) {
        print_report(hard);
        throw InvalidInput(path + ": story violates " + std::to_string(hard.size()) + " invariant(s)");
    }
    return story;
}

struct Options {
    std::string input;
    std::string out;
    std::string name;
    std::string dob;
    std::string ref_date;
    std::string parser = "rule";
    double width = 1600;
    std::string host = "127.0.0.1";
    int port = 0;
    std::string data_dir;
};

LayoutConfig layout_config(const Options& o) {
    if (!(o.width >= 200)) throw InvalidInput("--width must be at least 200");
    LayoutConfig c;
    c.width = o.width;
    return c;
}

int cmd_parse(const Options& o) {
    const std::string narrative = read_input(o.input);
    ParserConfig pc;
    pc.reference_date = date_flag(o.ref_date, "--ref-date");
    const auto mode = parser_mode_from_string(o.parser);
    if (!mode) throw InvalidInput("unknown parser '" + o.parser + "'");
    pc.mode = *mode;

    std::unique_ptr<RemoteParserClient> client;
    if (pc.mode != ParserMode::RuleBased)
        if (auto ep = RemoteEndpoint::from_environment()) client = std::make_unique<HttpRemoteParserClient>(*ep);

    const Profile profile{o.name, date_flag(o.dob, "--dob")};
    ParseOutcome outcome = parse_narrative(narrative, profile, pc, client.get());
    if (outcome.used_fallback) std::cerr << "warning: remote parser unavailable, used the rule-based parser\n";
    print_report(outcome.rejected);
    for (const std::string& id : outcome.not_grounded) std::cerr << "warning: " << id << ": title not grounded\n";

    HealthStory story;
    story.name = o.name;
    story.date_of_birth = profile.date_of_birth;
    story.source_narrative = narrative;
    story.events = std::move(outcome.events);
    anchor_relative_dates(story);
    write_output(o.out, serialize_story(story));

    const ValidationReport report = validate_story(story);
    print_report(report);
    return report.empty() ? kOk : kInvalid;
}

int cmd_layout(const Options& o) {
    const HealthStory story = load_story(o.input);
    write_output(o.out, to_json(timeline_layout(story, layout_config(o))).dump(2) + "\n");
    return kOk;
}

int cmd_render(const Options& o) {
    const HealthStory story = load_story(o.input);
    const LayoutConfig config = layout_config(o);
    write_output(o.out, render_svg(timeline_layout(story, config), story, StyleConfig{}, config));
    return kOk;
}

int cmd_compare(const Options& o) {
    const HealthStory story = load_story(o.input);
    const LayoutConfig config = layout_config(o);
    const GroupedStory multi = group_story(story.events);
    const GroupedStory single = single_timescale_groups(multi);
    const LayoutGeometry best_multi = timeline_layout(story.events, multi, config);
    const LayoutGeometry best_single = timeline_layout(story.events, single, config);

    std::ostringstream table;
    char line[128];
    std::snprintf(line, sizeof line, "%-6s %12s %12s\n", "ratio", "multi", "single");
    table << line;
    for (double r : kSplitRatios) {
        const double hm = draft_layout(story.events, multi, config, r).total_height;
        const double hs = draft_layout(story.events, single, config, r).total_height;
        std::snprintf(line, sizeof line, "%-6.2f %11.2f%s %11.2f%s\n", r, hm, r == best_multi.split_ratio ? "*" : " ",
                      hs, r == best_single.split_ratio ? "*" : " ");
        table << line;
    }
    std::snprintf(line, sizeof line, "%-6s %11.2f  %11.2f\n", "best", best_multi.total_height, best_single.total_height);
    table << line;
    table << "timescales: multi " << multi.times.clusters.size() << ", single " << single.times.clusters.size() << "\n";
    write_output(o.out, table.str());
    return kOk;
}

int cmd_serve(const Options& o) {
    ServeOptions serve = ServeOptions::from_environment();
    if (!o.data_dir.empty()) serve.data_dir = o.data_dir;
    if (o.port > 0) serve.port = o.port;
    serve.host = o.host;

    ServiceConfig config;
    config.data_dir = serve.data_dir;
    config.reference_date = date_flag(o.ref_date, "--ref-date");
    if (auto ep = RemoteEndpoint::from_environment()) config.remote = std::make_shared<HttpRemoteParserClient>(*ep);
    StoryService service(config);

    httplib::Server server;
    register_routes(server, service);
    std::cerr << "storyline: serving " << service.list().size() << " stories from " << serve.data_dir.string()
              << " on http://" << serve.host << ":" << serve.port << "\n";
    if (!server.listen(serve.host, serve.port)) throw IoError("cannot listen on port " + std::to_string(serve.port));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Health story timelines: parse narratives, lay out and render events"};
    app.require_subcommand(1);
    Options o;

    auto add_story_input = [&](CLI::App* sub) {
        sub->add_option("story", o.input, "Story document (JSON)")->required();
        sub->add_option("--width", o.width, "Canvas width in pixels")->capture_default_str();
        sub->add_option("--out,-o", o.out, "Output file (stdout when omitted)");
    };

    CLI::App* parse = app.add_subcommand("parse", "Extract events from a narrative text file");
    parse->add_option("narrative", o.input, "Narrative text file")->required();
    parse->add_option("--name", o.name, "Profile name")->required();
    parse->add_option("--dob", o.dob, "Date of birth, YYYY-MM-DD");
    parse->add_option("--ref-date", o.ref_date, "Date that relative offsets count back from (default today)");
    parse->add_option("--parser", o.parser, "rule, remote or remote-with-fallback")->capture_default_str();
    parse->add_option("--out,-o", o.out, "Output file (stdout when omitted)");

    CLI::App* layout = app.add_subcommand("layout", "Write the timeline geometry of a story");
    add_story_input(layout);
    CLI::App* render = app.add_subcommand("render", "Render a story to SVG");
    add_story_input(render);
    CLI::App* compare = app.add_subcommand("compare", "Compare multi and single timescale heights per split ratio");
    add_story_input(compare);

    CLI::App* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--port", o.port, "Port (default STORYLINE_PORT or 8080)");
    serve->add_option("--data-dir", o.data_dir, "Story directory (default STORYLINE_DATA_DIR or ./storyline-data)");
    serve->add_option("--ref-date", o.ref_date, "Date that relative offsets count back from (default today)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse->parsed()) return cmd_parse(o);
        if (layout->parsed()) return cmd_layout(o);
        if (render->parsed()) return cmd_render(o);
        if (compare->parsed()) return cmd_compare(o);
        if (serve->parsed()) return cmd_serve(o);
    } catch (const IoError& e) {
        std::cerr << "storyline: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "storyline: " << e.what() << "\n";
        return kIo;
    } catch (const RemoteUnavailableError& e) {
        std::cerr << "storyline: " << e.what() << "\n";
        return kRemote;
    } catch (const RemoteProtocolError& e) {
        std::cerr << "storyline: " << e.what() << "\n";
        return kRemote;
    } catch (const Error& e) {
        std::cerr << "storyline: " << e.what() << "\n";
        return kInvalid;
    }
    return kOk;
}
