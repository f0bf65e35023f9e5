#include "sqlrl/error.hpp"

namespace sqlrl {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::unterminated_string: return "unterminated_string";
        case Errc::input_too_large: return "input_too_large";
        case Errc::all_zero_weights: return "all_zero_weights";
        case Errc::non_finite_ratio: return "non_finite_ratio";
        case Errc::empty_batch: return "empty_batch";
        case Errc::unknown_context: return "unknown_context";
        case Errc::completion_outside_support: return "completion_outside_support";
        case Errc::bad_grammar: return "bad_grammar";
        case Errc::missing_slot: return "missing_slot";
        case Errc::malformed_response: return "malformed_response";
        case Errc::transport_error: return "transport_error";
        case Errc::no_sql_region: return "no_sql_region";
        case Errc::schema_violation: return "schema_violation";
        case Errc::length_mismatch: return "length_mismatch";
        case Errc::bad_config: return "bad_config";
        case Errc::io_error: return "io_error";
    }
    return "unknown";
}

}  // namespace sqlrl
