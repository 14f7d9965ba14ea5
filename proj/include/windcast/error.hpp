#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace windcast {

enum class Errc {
  EmptyInput,
  DuplicateTimestamp,
  SchemaMismatch,
  InvalidCount,
  DegenerateColumn,
  TooFewRows,
  EmptySplit,
  DimensionMismatch,
  LengthMismatch,
  EmptyVectors,
  ZeroVariance,
  AllRulesSilent,
  NonFiniteLoss,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code);

/// Process exit status for an error: 2 for data/validation problems,
/// 3 for numerical failure.
int exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

  /// Same error with "<stage>: " prepended to the message.
  Error with_stage(std::string_view stage) const;

 private:
  Errc code_;
};

}  // namespace windcast
