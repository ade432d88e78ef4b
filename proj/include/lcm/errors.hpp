#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcm {

enum class ErrorCode {
  MalformedArchive,
  SchemaViolation,
  InvariantViolation,
  DuplicatePath,
  UnknownSplit,
  DimensionMismatch,
  UnknownParameter,
  OutOfRange,
  MissingParameter,
  NoLabeledMesh,
  UnknownMesh,
  UnknownClass,
  DegenerateInput,
  NoOverlap,
  IoFailure,
  TooManyLayers,
  InvalidArgument,
  Conflict,
};

std::string_view to_string(ErrorCode code);

// Every domain failure in the library is reported through this type; the
// code distinguishes the failure class and what() carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Field-level schema problem. `json_path` is a JSON pointer into model.json.
class SchemaError : public Error {
 public:
  SchemaError(std::string json_path, const std::string& message);

  const std::string& json_path() const noexcept { return path_; }

 private:
  std::string path_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace lcm
