#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ihi {

enum class Errc {
  invalid_argument = 1,
  io,
  bad_magic,
  version_mismatch,
  bad_dtype,
  bad_ndim,
  dim_overflow,
  truncated_payload,
  trailing_bytes,
  non_finite,
  shape_mismatch,
  axis_mismatch,
  degenerate_axis,
  rank_deficient,
  ill_posed,
  budget_exceeded,
  cache_missing,
  prior_failure,
  bridge_timeout,
  bridge_shape_mismatch,
  bridge_protocol,
  numerical,
};

std::string_view errc_name(Errc code);

/// Error raised by every core operation. `field` names the offending header
/// field, parameter or path when there is one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::string field = {});

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

[[noreturn]] void fail(Errc code, std::string message, std::string field = {});

inline void require(bool ok, Errc code, std::string_view message, std::string_view field = {}) {
  if (!ok) fail(code, std::string(message), std::string(field));
}

}  // namespace ihi
