#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sqlrl {

enum class Errc {
    unterminated_string,
    input_too_large,
    all_zero_weights,
    non_finite_ratio,
    empty_batch,
    unknown_context,
    completion_outside_support,
    bad_grammar,
    missing_slot,
    malformed_response,
    transport_error,
    no_sql_region,
    schema_violation,
    length_mismatch,
    bad_config,
    io_error,
};

const char* errc_name(Errc code);

/// Library-wide error type. `raw()` carries the offending payload when one
/// exists (e.g. an unparseable judge response).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string raw = {})
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          raw_(std::move(raw)) {}

    Errc code() const noexcept { return code_; }
    const std::string& raw() const noexcept { return raw_; }

private:
    Errc code_;
    std::string raw_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message, std::string raw = {}) {
    throw Error(code, message, std::move(raw));
}

}  // namespace sqlrl
