#include "promptcal/errors.hpp"

namespace promptcal {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::AllZeroProbabilities: return "AllZeroProbabilities";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnlabelledRecord: return "UnlabelledRecord";
    case ErrorCode::EmptyReportSet: return "EmptyReportSet";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::MissingNullProbe: return "MissingNullProbe";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool Error::is_input_error() const noexcept {
  return code_ != ErrorCode::NoConvergence;
}

}  // namespace promptcal
