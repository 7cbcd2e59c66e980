#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lipstab {

enum class ErrorKind {
  invalid_spec,
  no_chain,
  too_coarse,
  singular_point,
  tagging,
  solver_breakdown,
  geometry,
  placement,
  range,
  mismatch,
  unsupported_dimension,
  domain,
  empty_subset,
  non_spd,
  eigen_failure,
  rank_deficient,
  validation,
  parse,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Validation and parse failures are user input problems; everything else is numeric.
  bool is_input_error() const noexcept {
    return kind_ == ErrorKind::validation || kind_ == ErrorKind::parse ||
           kind_ == ErrorKind::invalid_spec;
  }

 private:
  ErrorKind kind_;
};

}  // namespace lipstab
