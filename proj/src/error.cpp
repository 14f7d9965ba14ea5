#include "windcast/error.hpp"

namespace windcast {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DuplicateTimestamp: return "DuplicateTimestamp";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::DegenerateColumn: return "DegenerateColumn";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyVectors: return "EmptyVectors";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::AllRulesSilent: return "AllRulesSilent";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::NonFiniteLoss:
    case Errc::AllRulesSilent:
      return 3;
    default:
      return 2;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error Error::with_stage(std::string_view stage) const {
  Error wrapped(code_, "");
  static_cast<std::runtime_error&>(wrapped) =
      std::runtime_error(std::string(stage) + ": " + what());
  return wrapped;
}

}  // namespace windcast
