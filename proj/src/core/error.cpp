#include "ihi/error.hpp"

namespace ihi {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    case Errc::bad_magic: return "bad_magic";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::bad_dtype: return "bad_dtype";
    case Errc::bad_ndim: return "bad_ndim";
    case Errc::dim_overflow: return "dim_overflow";
    case Errc::truncated_payload: return "truncated_payload";
    case Errc::trailing_bytes: return "trailing_bytes";
    case Errc::non_finite: return "non_finite";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::axis_mismatch: return "axis_mismatch";
    case Errc::degenerate_axis: return "degenerate_axis";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::ill_posed: return "ill_posed";
    case Errc::budget_exceeded: return "budget_exceeded";
    case Errc::cache_missing: return "cache_missing";
    case Errc::prior_failure: return "prior_failure";
    case Errc::bridge_timeout: return "bridge_timeout";
    case Errc::bridge_shape_mismatch: return "bridge_shape_mismatch";
    case Errc::bridge_protocol: return "bridge_protocol";
    case Errc::numerical: return "numerical";
  }
  return "unknown";
}

Error::Error(Errc code, std::string message, std::string field)
    : std::runtime_error(field.empty() ? std::move(message) : field + ": " + message),
      code_(code),
      field_(std::move(field)) {}

void fail(Errc code, std::string message, std::string field) {
  throw Error(code, std::move(message), std::move(field));
}

}  // namespace ihi
