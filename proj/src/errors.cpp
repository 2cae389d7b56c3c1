#include "tmem/errors.hpp"

namespace tmem {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::empty_steps: return "EmptySteps";
        case ErrorCode::non_contiguous_indices: return "NonContiguousIndices";
        case ErrorCode::step_cap_exceeded: return "StepCapExceeded";
        case ErrorCode::duplicate_id: return "DuplicateId";
        case ErrorCode::invalid_field: return "InvalidField";
        case ErrorCode::empty_text: return "EmptyText";
        case ErrorCode::empty_query: return "EmptyQuery";
        case ErrorCode::invalid_threshold: return "InvalidThreshold";
        case ErrorCode::dangling_provenance: return "DanglingProvenance";
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::provenance_loss: return "ProvenanceLoss";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::provider_unavailable: return "ProviderUnavailable";
        case ErrorCode::schema_violation: return "SchemaViolation";
        case ErrorCode::timeout: return "Timeout";
        case ErrorCode::no_indicators: return "NoIndicators";
    }
    return "UnknownError";
}

bool is_validation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::empty_steps:
        case ErrorCode::non_contiguous_indices:
        case ErrorCode::step_cap_exceeded:
        case ErrorCode::duplicate_id:
        case ErrorCode::invalid_field:
        case ErrorCode::empty_text:
        case ErrorCode::empty_query:
        case ErrorCode::invalid_threshold:
        case ErrorCode::dangling_provenance:
        case ErrorCode::dimension_mismatch:
        case ErrorCode::provenance_loss:
        case ErrorCode::no_indicators:
            return true;
        default:
            return false;
    }
}

bool is_io_error(ErrorCode code) { return code == ErrorCode::io_error; }

bool is_gateway_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::provider_unavailable:
        case ErrorCode::schema_violation:
        case ErrorCode::timeout:
            return true;
        default:
            return false;
    }
}

} // namespace tmem
