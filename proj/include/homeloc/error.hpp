#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace homeloc {

enum class ErrorKind {
    ParseError,
    SchemaMismatch,
    UnknownTower,
    InvalidCoordinate,
    KTooLarge,
    SubjectNotInRecord,
    NoQualifyingActivity,
    UserSetMismatch,
    MissingGroundTruth,
    MissingHomePoint,
    ConfigInvalid,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::UnknownTower: return "UnknownTower";
        case ErrorKind::InvalidCoordinate: return "InvalidCoordinate";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::SubjectNotInRecord: return "SubjectNotInRecord";
        case ErrorKind::NoQualifyingActivity: return "NoQualifyingActivity";
        case ErrorKind::UserSetMismatch: return "UserSetMismatch";
        case ErrorKind::MissingGroundTruth: return "MissingGroundTruth";
        case ErrorKind::MissingHomePoint: return "MissingHomePoint";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

// Single exception type; callers switch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Line-addressed parse failure. line is 1-based and counts the header.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace homeloc
