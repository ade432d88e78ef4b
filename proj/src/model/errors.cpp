#include "lcm/errors.hpp"

#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lcm/log.hpp"

namespace lcm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedArchive: return "MalformedArchive";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::UnknownSplit: return "UnknownSplit";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::NoLabeledMesh: return "NoLabeledMesh";
    case ErrorCode::UnknownMesh: return "UnknownMesh";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TooManyLayers: return "TooManyLayers";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Conflict: return "Conflict";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SchemaError::SchemaError(std::string json_path, const std::string& message)
    : Error(ErrorCode::SchemaViolation, json_path + ": " + message), path_(std::move(json_path)) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    if (auto existing = spdlog::get("lcm")) return existing;
    auto created = spdlog::stderr_color_mt("lcm");
    created->set_pattern("[%l] %v");
    return created;
  }();
  return instance;
}

}  // namespace lcm
