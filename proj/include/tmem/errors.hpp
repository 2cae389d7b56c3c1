#pragma once

#include <stdexcept>
#include <string>

namespace tmem {

enum class ErrorCode {
    // validation
    empty_steps,
    non_contiguous_indices,
    step_cap_exceeded,
    duplicate_id,
    invalid_field,
    empty_text,
    empty_query,
    invalid_threshold,
    // store
    dangling_provenance,
    dimension_mismatch,
    provenance_loss,
    io_error,
    // gateway
    provider_unavailable,
    schema_violation,
    timeout,
    // extraction
    no_indicators,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Exit-code buckets used by the CLI: 1 validation, 2 I/O, 3 gateway.
bool is_validation_error(ErrorCode code);
bool is_io_error(ErrorCode code);
bool is_gateway_error(ErrorCode code);

} // namespace tmem
