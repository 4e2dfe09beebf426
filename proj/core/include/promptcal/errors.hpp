#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptcal {

enum class ErrorCode {
  AllZeroProbabilities,
  EmptyDataset,
  NoConvergence,
  UnlabelledRecord,
  EmptyReportSet,
  InsufficientPairs,
  ParseError,
  SchemaError,
  DuplicateRecord,
  MissingNullProbe,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for problems with user-supplied data or arguments (exit status 2);
  // false for numerical failures inside a solver.
  bool is_input_error() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace promptcal
