#pragma once

#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>

#include "calendar.hpp"
#include "error.hpp"
#include "service.hpp"
#include "story_json.hpp"

namespace storyline {

namespace http_detail {

inline void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message,
                       const ValidationReport* report = nullptr) {
    Json body;
    body["error"]["status"] = status;
    body["error"]["message"] = message;
    if (report) body["error"]["violations"] = to_json(*report);
    send_json(res, status, body);
}

inline void send_record(httplib::Response& res, int status, const StoryRecord& record) {
    res.set_header("ETag", "\"" + std::to_string(record.revision) + "\"");
    send_json(res, status, to_json(record));
}

/// Revision from an If-Match header (`"7"` or `7`); nullopt when absent.
inline std::optional<std::uint64_t> expected_revision(const httplib::Request& req) {
    if (!req.has_header("If-Match")) return std::nullopt;
    std::string v = req.get_header_value("If-Match");
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw BadRequestError("If-Match must be a revision number");
    return out;
}

inline Json body_json(const httplib::Request& req) {
    try {
        return parse_json_text(req.body);
    } catch (const ParseError& e) {
        throw BadRequestError(e.what());
    }
}

inline std::optional<CalendarDate> optional_date(const Json& body, const char* key) {
    auto text = json_detail::optional_string(body, key, "$");
    if (!text) return std::nullopt;
    return json_detail::parse_date_field(*text, std::string("$.") + key);
}

inline CreateStoryRequest create_request(const Json& body) {
    if (!body.is_object()) throw SchemaError("$", "expected an object");
    CreateStoryRequest req;
    if (auto it = body.find("story"); it != body.end()) {
        req.story = story_from_json(*it);
        req.name = req.story->name;
        return req;
    }
    req.name = json_detail::optional_string(body, "name", "$").value_or("");
    req.date_of_birth = optional_date(body, "dateOfBirth");
    req.narrative = json_detail::optional_string(body, "narrative", "$").value_or("");
    req.reference_date = optional_date(body, "referenceDate");
    if (auto mode = json_detail::optional_string(body, "parserMode", "$")) {
        auto parsed = parser_mode_from_string(*mode);
        if (!parsed) throw SchemaError("$.parserMode", "unknown parser mode '" + *mode + "'");
        req.mode = *parsed;
    }
    return req;
}

/// Runs `handler`, translating library errors into JSON error responses.
template <typename F>
void guarded(httplib::Response& res, F&& handler) {
    try {
        handler();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const ConflictError& e) {
        res.set_header("ETag", "\"" + std::to_string(e.current_revision()) + "\"");
        send_error(res, 409, e.what());
    } catch (const ValidationFailedError& e) {
        send_error(res, 422, e.what(), &e.report());
    } catch (const BadRequestError& e) {
        send_error(res, 400, e.what());
    } catch (const SchemaError& e) {
        send_error(res, 400, e.what());
    } catch (const ParseError& e) {
        send_error(res, 400, e.what());
    } catch (const RemoteUnavailableError& e) {
        send_error(res, 502, e.what());
    } catch (const RemoteProtocolError& e) {
        send_error(res, 502, e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

}  // namespace http_detail

/// Registers the story routes on `server`. The service must outlive it.
inline void register_routes(httplib::Server& server, StoryService& service) {
    using namespace http_detail;

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"status", "ok"}});
    });

    server.Get("/stories", [&service](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, Json{{"stories", service.list()}}); });
    });

    server.Post("/stories", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            StoryRecord record = service.create_story(create_request(body_json(req)));
            res.set_header("Location", "/stories/" + record.id);
            send_record(res, 201, record);
        });
    });

    server.Get(R"(/stories/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_record(res, 200, service.get(req.matches[1])); });
    });

    server.Get(R"(/stories/([^/]+)/layout)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            res.status = 200;
            res.set_content(service.layout_document(req.matches[1]), "application/json");
        });
    });

    server.Get(R"(/stories/([^/]+)/artifact\.svg)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            res.status = 200;
            res.set_content(service.artifact_svg(req.matches[1]), "image/svg+xml");
        });
    });

    server.Post(R"(/stories/([^/]+)/events)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            send_record(res, 201, service.add_event(req.matches[1], body_json(req), expected_revision(req)));
        });
    });

    server.Get(R"(/stories/([^/]+)/events/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, to_json(service.get_event(req.matches[1], req.matches[2]))); });
    });

    server.Patch(R"(/stories/([^/]+)/events/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            send_record(res, 200,
                        service.update_event(req.matches[1], req.matches[2], body_json(req), expected_revision(req)));
        });
    });

    server.Delete(R"(/stories/([^/]+)/events/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            send_record(res, 200, service.delete_event(req.matches[1], req.matches[2], expected_revision(req)));
        });
    });
}

/// Reads STORYLINE_DATA_DIR (default ./storyline-data), STORYLINE_PORT
/// (default 8080) and the remote parser variables.
struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "storyline-data";

    static ServeOptions from_environment() {
        ServeOptions o;
        if (const char* dir = std::getenv("STORYLINE_DATA_DIR"); dir && *dir) o.data_dir = dir;
        if (const char* port = std::getenv("STORYLINE_PORT"); port && *port) o.port = std::atoi(port);
        return o;
    }
};

}  // namespace storyline
