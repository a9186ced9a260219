#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace storyline {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed story or geometry document. Carries the byte offset reported
/// by the JSON reader when one is known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed document that does not match the story schema
/// (unknown designation, wrong field type, missing key).
class SchemaError : public Error {
public:
    SchemaError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Relative ages exist but the story has no date of birth to anchor them.
class UnresolvableRelativeDateError : public Error {
public:
    explicit UnresolvableRelativeDateError(std::vector<std::string> event_ids)
        : Error(make_message(event_ids)), event_ids_(std::move(event_ids)) {}

    const std::vector<std::string>& event_ids() const noexcept { return event_ids_; }

private:
    static std::string make_message(const std::vector<std::string>& ids) {
        std::string msg = "relative ages cannot be resolved without a date of birth:";
        for (const auto& id : ids) msg += " " + id;
        return msg;
    }

    std::vector<std::string> event_ids_;
};

/// Geometry references an event the story does not contain.
class RenderConsistencyError : public Error {
public:
    using Error::Error;
};

/// Remote parser could not be reached or timed out.
class RemoteUnavailableError : public Error {
public:
    using Error::Error;
};

/// Remote parser answered with something that is not a valid event payload.
class RemoteProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace storyline
