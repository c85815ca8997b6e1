#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gradehint {

enum class Errc {
  invalid_argument,
  not_found,
  // assignment-core
  malformed_manifest,
  invalid_spec,
  oversized_body,
  unsupported_kind,
  empty_results,
  // execution-harness
  backend_unavailable,
  compile_timeout,
  inconsistent_inputs,
  // feedback-engine
  not_clickable,
  // hint-engine
  budget_exceeded,
  client_timeout,
  client_transport,
  client_rejected,
  sanitization_empty,
  out_of_range,
  already_rated,
  // experiment-core
  no_pending_prompt,
  duplicate_response,
  corrupt_log,
  invariant_violation,
  // analytics
  empty_sample,
  invalid_p,
  invalid_q,
  no_data,
  degenerate_design,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace gradehint
