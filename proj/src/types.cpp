#include "tmem/types.hpp"

#include <cmath>

#include "tmem/errors.hpp"

namespace tmem {

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& s) {
    throw Error(ErrorCode::invalid_field, std::string("unknown ") + what + ": '" + s + "'");
}

} // namespace

const char* to_string(ThoughtCategory v) {
    switch (v) {
        case ThoughtCategory::analytical: return "analytical";
        case ThoughtCategory::planning: return "planning";
        case ThoughtCategory::validation: return "validation";
        case ThoughtCategory::reflection: return "reflection";
    }
    return "analytical";
}

const char* to_string(PatternKind v) {
    switch (v) {
        case PatternKind::validation: return "validation";
        case PatternKind::reflection: return "reflection";
        case PatternKind::self_correction: return "self_correction";
        case PatternKind::error_recognition: return "error_recognition";
        case PatternKind::api_discovery: return "api_discovery";
        case PatternKind::efficiency_awareness: return "efficiency_awareness";
    }
    return "validation";
}

const char* to_string(OutcomeKind v) {
    switch (v) {
        case OutcomeKind::clean_success: return "clean_success";
        case OutcomeKind::inefficient_success: return "inefficient_success";
        case OutcomeKind::recovery_success: return "recovery_success";
        case OutcomeKind::failure: return "failure";
    }
    return "failure";
}

const char* to_string(OutcomeSource v) {
    return v == OutcomeSource::ground_truth ? "ground_truth" : "inferred";
}

const char* to_string(AttributionKind v) {
    switch (v) {
        case AttributionKind::failure: return "failure";
        case AttributionKind::recovery: return "recovery";
        case AttributionKind::inefficiency: return "inefficiency";
        case AttributionKind::success_pattern: return "success_pattern";
    }
    return "failure";
}

const char* to_string(TipCategory v) {
    switch (v) {
        case TipCategory::strategy: return "strategy";
        case TipCategory::recovery: return "recovery";
        case TipCategory::optimization: return "optimization";
    }
    return "strategy";
}

const char* to_string(Priority v) {
    switch (v) {
        case Priority::critical: return "critical";
        case Priority::high: return "high";
        case Priority::medium: return "medium";
        case Priority::low: return "low";
    }
    return "medium";
}

const char* to_string(Granularity v) { return v == Granularity::task ? "task" : "subtask"; }

ThoughtCategory thought_category_from_string(const std::string& s) {
    if (s == "analytical") return ThoughtCategory::analytical;
    if (s == "planning") return ThoughtCategory::planning;
    if (s == "validation") return ThoughtCategory::validation;
    if (s == "reflection") return ThoughtCategory::reflection;
    bad_enum("thought category", s);
}

PatternKind pattern_kind_from_string(const std::string& s) {
    if (s == "validation") return PatternKind::validation;
    if (s == "reflection") return PatternKind::reflection;
    if (s == "self_correction") return PatternKind::self_correction;
    if (s == "error_recognition") return PatternKind::error_recognition;
    if (s == "api_discovery") return PatternKind::api_discovery;
    if (s == "efficiency_awareness") return PatternKind::efficiency_awareness;
    bad_enum("pattern kind", s);
}

OutcomeKind outcome_kind_from_string(const std::string& s) {
    if (s == "clean_success") return OutcomeKind::clean_success;
    if (s == "inefficient_success") return OutcomeKind::inefficient_success;
    if (s == "recovery_success") return OutcomeKind::recovery_success;
    if (s == "failure") return OutcomeKind::failure;
    bad_enum("outcome kind", s);
}

OutcomeSource outcome_source_from_string(const std::string& s) {
    if (s == "ground_truth") return OutcomeSource::ground_truth;
    if (s == "inferred") return OutcomeSource::inferred;
    bad_enum("outcome source", s);
}

AttributionKind attribution_kind_from_string(const std::string& s) {
    if (s == "failure") return AttributionKind::failure;
    if (s == "recovery") return AttributionKind::recovery;
    if (s == "inefficiency") return AttributionKind::inefficiency;
    if (s == "success_pattern") return AttributionKind::success_pattern;
    bad_enum("attribution kind", s);
}

TipCategory tip_category_from_string(const std::string& s) {
    if (s == "strategy") return TipCategory::strategy;
    if (s == "recovery") return TipCategory::recovery;
    if (s == "optimization") return TipCategory::optimization;
    bad_enum("tip category", s);
}

Priority priority_from_string(const std::string& s) {
    if (s == "critical") return Priority::critical;
    if (s == "high") return Priority::high;
    if (s == "medium") return Priority::medium;
    if (s == "low") return Priority::low;
    bad_enum("priority", s);
}

Granularity granularity_from_string(const std::string& s) {
    if (s == "task") return Granularity::task;
    if (s == "subtask") return Granularity::subtask;
    bad_enum("granularity", s);
}

double Embedding::norm() const {
    double sum = 0.0;
    for (double v : vector) sum += v * v;
    return std::sqrt(sum);
}

void validate_unit_norm(const Embedding& e) {
    if (e.vector.empty()) {
        throw Error(ErrorCode::invalid_field, "embedding is empty");
    }
    if (std::fabs(e.norm() - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid_field, "embedding is not unit-norm");
    }
}

Embedding normalized(std::vector<double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    double n = std::sqrt(sum);
    if (n == 0.0) {
        throw Error(ErrorCode::invalid_field, "cannot normalize a zero vector");
    }
    for (double& v : values) v /= n;
    return Embedding{std::move(values)};
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::dimension_mismatch, "embedding dimensions differ");
    }
    double dot = 0.0;
    for (size_t i = 0; i < a.vector.size(); ++i) dot += a.vector[i] * b.vector[i];
    return dot;
}

Trajectory validate_trajectory(Trajectory raw, int step_cap) {
    if (raw.id.empty()) {
        throw Error(ErrorCode::invalid_field, "trajectory id is empty");
    }
    if (raw.steps.empty()) {
        throw Error(ErrorCode::empty_steps, "trajectory '" + raw.id + "' has no steps");
    }
    if (static_cast<int>(raw.steps.size()) > step_cap) {
        throw Error(ErrorCode::step_cap_exceeded,
                    "trajectory '" + raw.id + "' has " + std::to_string(raw.steps.size()) +
                        " steps, cap " + std::to_string(step_cap));
    }
    for (size_t i = 0; i < raw.steps.size(); ++i) {
        const Step& step = raw.steps[i];
        if (step.index != static_cast<int>(i)) {
            throw Error(ErrorCode::non_contiguous_indices,
                        "step " + std::to_string(i) + " has index " + std::to_string(step.index));
        }
        bool final_step = i + 1 == raw.steps.size();
        if (step.action && !step.action_result && !final_step) {
            throw Error(ErrorCode::invalid_field,
                        "step " + std::to_string(i) + " has an action but no result");
        }
        for (const Thought& th : step.thoughts) {
            for (const CognitivePattern& p : th.patterns) {
                validate_pattern(p);
                if (step.response.find(p.evidence) == std::string::npos) {
                    throw Error(ErrorCode::invalid_field,
                                "pattern evidence is not a span of step " + std::to_string(i));
                }
            }
        }
    }
    if (raw.evaluation_report) {
        // `passed` is always materialized; empty indicator lists are fine.
        for (const EvalIndicator& ind : raw.evaluation_report->indicators) {
            if (ind.name.empty()) {
                throw Error(ErrorCode::invalid_field, "evaluation indicator without a name");
            }
        }
    }
    return raw;
}

void validate_pattern(const CognitivePattern& p) {
    if (p.confidence < 0.0 || p.confidence > 1.0) {
        throw Error(ErrorCode::invalid_field, "pattern confidence outside [0,1]");
    }
    if (p.evidence.empty()) {
        throw Error(ErrorCode::invalid_field, "pattern without evidence span");
    }
}

void validate_tip(const Tip& tip) {
    if (tip.id.empty()) throw Error(ErrorCode::invalid_field, "tip id is empty");
    if (tip.content.empty()) throw Error(ErrorCode::invalid_field, "tip content is empty");
    if (tip.source_trajectory_ids.empty()) {
        throw Error(ErrorCode::invalid_field, "tip '" + tip.id + "' has no provenance");
    }
    if (tip.granularity == Granularity::subtask && !tip.subtask_description) {
        throw Error(ErrorCode::invalid_field,
                    "subtask tip '" + tip.id + "' lacks a subtask description");
    }
    if (tip.index_description.empty()) {
        throw Error(ErrorCode::invalid_field, "tip '" + tip.id + "' lacks an index description");
    }
    validate_unit_norm(tip.embedding);
    validate_unit_norm(tip.index_embedding);
}

} // namespace tmem
