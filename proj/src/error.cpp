#include "gradehint/error.hpp"

namespace gradehint {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::not_found: return "NotFound";
    case Errc::malformed_manifest: return "MalformedManifest";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::oversized_body: return "OversizedBody";
    case Errc::unsupported_kind: return "UnsupportedKind";
    case Errc::empty_results: return "EmptyResults";
    case Errc::backend_unavailable: return "BackendUnavailable";
    case Errc::compile_timeout: return "CompileTimeout";
    case Errc::inconsistent_inputs: return "InconsistentInputs";
    case Errc::not_clickable: return "NotClickable";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::client_timeout: return "ClientTimeout";
    case Errc::client_transport: return "ClientTransport";
    case Errc::client_rejected: return "ClientRejected";
    case Errc::sanitization_empty: return "SanitizationEmpty";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::already_rated: return "AlreadyRated";
    case Errc::no_pending_prompt: return "NoPendingPrompt";
    case Errc::duplicate_response: return "DuplicateResponse";
    case Errc::corrupt_log: return "CorruptLog";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::empty_sample: return "EmptySample";
    case Errc::invalid_p: return "InvalidP";
    case Errc::invalid_q: return "InvalidQ";
    case Errc::no_data: return "NoData";
    case Errc::degenerate_design: return "DegenerateDesign";
  }
  return "Unknown";
}

}  // namespace gradehint
