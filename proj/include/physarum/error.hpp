#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace physarum {

enum class ErrorCode {
  out_of_range_node,
  non_positive_length,
  non_positive_capacity,
  negative_cost,
  self_loop,
  parallel_arc,
  dimension_mismatch,
  unbalanced_injections,
  negative_conductivity,
  disconnected_injection,
  singular_system,
  invalid_config,
  syntax_error,
  missing_source_or_sink,
  duplicate_problem_line,
  non_positive_demand,
  disconnected_od_pair,
  zero_denominator,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::out_of_range_node: return "OutOfRangeNode";
    case ErrorCode::non_positive_length: return "NonPositiveLength";
    case ErrorCode::non_positive_capacity: return "NonPositiveCapacity";
    case ErrorCode::negative_cost: return "NegativeCost";
    case ErrorCode::self_loop: return "SelfLoop";
    case ErrorCode::parallel_arc: return "ParallelArc";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::unbalanced_injections: return "UnbalancedInjections";
    case ErrorCode::negative_conductivity: return "NegativeConductivity";
    case ErrorCode::disconnected_injection: return "DisconnectedInjection";
    case ErrorCode::singular_system: return "SingularSystem";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::syntax_error: return "SyntaxError";
    case ErrorCode::missing_source_or_sink: return "MissingSourceOrSink";
    case ErrorCode::duplicate_problem_line: return "DuplicateProblemLine";
    case ErrorCode::non_positive_demand: return "NonPositiveDemand";
    case ErrorCode::disconnected_od_pair: return "DisconnectedOdPair";
    case ErrorCode::zero_denominator: return "ZeroDenominator";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace physarum
