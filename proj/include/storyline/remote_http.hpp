#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>

#include "error.hpp"
#include "narrative.hpp"

namespace storyline {

struct RemoteEndpoint {
    std::string scheme_host_port;  // e.g. http://localhost:8081
    std::string path = "/";
    std::chrono::milliseconds timeout{30000};
    std::string api_key;  // sent as a bearer token when non-empty

    /// Splits `http://host[:port][/path]`. Only plain http is supported.
    static RemoteEndpoint from_url(const std::string& url) {
        constexpr std::string_view scheme = "http://";
        if (url.rfind(scheme, 0) != 0) throw Error("remote parser URL must start with http://: " + url);
        RemoteEndpoint ep;
        const auto slash = url.find('/', scheme.size());
        if (slash == std::string::npos) {
            ep.scheme_host_port = url;
        } else {
            ep.scheme_host_port = url.substr(0, slash);
            ep.path = url.substr(slash);
        }
        if (ep.scheme_host_port.size() == scheme.size()) throw Error("remote parser URL has no host: " + url);
        return ep;
    }

    /// Reads STORYLINE_PARSER_URL and STORYLINE_PARSER_KEY.
    static std::optional<RemoteEndpoint> from_environment() {
        const char* url = std::getenv("STORYLINE_PARSER_URL");
        if (!url || !*url) return std::nullopt;
        RemoteEndpoint ep = from_url(url);
        if (const char* key = std::getenv("STORYLINE_PARSER_KEY")) ep.api_key = key;
        return ep;
    }
};

class HttpRemoteParserClient : public RemoteParserClient {
public:
    explicit HttpRemoteParserClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::string post(const std::string& request_body) override {
        httplib::Client client(endpoint_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        httplib::Headers headers = {{"X-Storyline-Prompt-Version", parser_prompt_version()}};
        if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

        auto res = client.Post(endpoint_.path, headers, request_body, "application/json");
        if (!res) throw RemoteUnavailableError("remote parser unreachable: " + httplib::to_string(res.error()));
        if (res->status >= 500 || res->status == 408 || res->status == 429)
            throw RemoteUnavailableError("remote parser returned HTTP " + std::to_string(res->status));
        if (res->status != 200)
            throw RemoteProtocolError("remote parser returned HTTP " + std::to_string(res->status));
        return res->body;
    }

    const RemoteEndpoint& endpoint() const { return endpoint_; }

private:
    RemoteEndpoint endpoint_;
};

}  // namespace storyline
