#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmem/clock.hpp"

namespace tmem {

enum class ThoughtCategory { analytical, planning, validation, reflection };

enum class PatternKind {
    validation,
    reflection,
    self_correction,
    error_recognition,
    api_discovery,
    efficiency_awareness,
};

enum class OutcomeKind { clean_success, inefficient_success, recovery_success, failure };
enum class OutcomeSource { ground_truth, inferred };
enum class AttributionKind { failure, recovery, inefficiency, success_pattern };
enum class TipCategory { strategy, recovery, optimization };
enum class Priority { critical, high, medium, low };
enum class Granularity { task, subtask };

// enum <-> wire-name mapping; parsers throw InvalidField on unknown names
const char* to_string(ThoughtCategory v);
const char* to_string(PatternKind v);
const char* to_string(OutcomeKind v);
const char* to_string(OutcomeSource v);
const char* to_string(AttributionKind v);
const char* to_string(TipCategory v);
const char* to_string(Priority v);
const char* to_string(Granularity v);
ThoughtCategory thought_category_from_string(const std::string& s);
PatternKind pattern_kind_from_string(const std::string& s);
OutcomeKind outcome_kind_from_string(const std::string& s);
OutcomeSource outcome_source_from_string(const std::string& s);
AttributionKind attribution_kind_from_string(const std::string& s);
TipCategory tip_category_from_string(const std::string& s);
Priority priority_from_string(const std::string& s);
Granularity granularity_from_string(const std::string& s);

// Unit-norm dense vector. All embeddings in one store share a dimension.
struct Embedding {
    std::vector<double> vector;

    int dim() const { return static_cast<int>(vector.size()); }
    double norm() const;
    bool operator==(const Embedding&) const = default;
};

// Throws InvalidField unless |norm - 1| <= 1e-9.
void validate_unit_norm(const Embedding& e);
Embedding normalized(std::vector<double> values);
double cosine(const Embedding& a, const Embedding& b);

struct ActionRecord {
    std::string name;
    nlohmann::json args = nlohmann::json::object();

    bool operator==(const ActionRecord&) const = default;
};

struct CognitivePattern {
    PatternKind kind = PatternKind::validation;
    double confidence = 0.0; // in [0,1], stored as reported
    std::string evidence;    // verbatim span of the source step's response

    bool operator==(const CognitivePattern&) const = default;
};

struct Thought {
    std::string text;
    ThoughtCategory category = ThoughtCategory::analytical;
    std::vector<CognitivePattern> patterns;

    bool operator==(const Thought&) const = default;
};

struct Step {
    int index = 0;
    std::string context;
    std::string response;
    std::vector<Thought> thoughts; // populated by extraction
    std::optional<ActionRecord> action;
    std::optional<std::string> action_result;

    bool operator==(const Step&) const = default;
};

struct EvalIndicator {
    std::string name;
    bool passed = false;
    std::string message;

    bool operator==(const EvalIndicator&) const = default;
};

struct EvaluationReport {
    bool passed = false;
    std::vector<EvalIndicator> indicators;

    bool operator==(const EvaluationReport&) const = default;
};

struct Trajectory {
    std::string id;
    std::string task_description;
    std::vector<Step> steps;
    std::optional<EvaluationReport> evaluation_report;
    std::set<std::string> app_hints;
    UnixSeconds created_at = 0;

    bool operator==(const Trajectory&) const = default;
};

struct OutcomeClassification {
    OutcomeKind kind = OutcomeKind::failure;
    OutcomeSource source = OutcomeSource::inferred;
    std::string rationale;

    bool operator==(const OutcomeClassification&) const = default;
};

struct CausalNode {
    int step_index = 0;
    std::string description;

    bool operator==(const CausalNode&) const = default;
};

struct DecisionAttribution {
    AttributionKind outcome_kind = AttributionKind::failure;
    CausalNode immediate_cause;
    std::optional<CausalNode> proximate_cause; // omitted when equal to immediate
    CausalNode root_cause;
    std::vector<CausalNode> contributing_factors;
    std::vector<std::string> improvement_steps;

    bool operator==(const DecisionAttribution&) const = default;
};

struct Tip {
    std::string id;
    TipCategory category = TipCategory::strategy;
    std::string content;
    std::string purpose;
    std::vector<std::string> steps;
    std::string trigger;
    std::optional<std::string> negative_example;
    std::optional<std::string> application_context; // null = generic
    std::optional<std::string> task_category;       // null = generic
    Priority priority = Priority::medium;
    Granularity granularity = Granularity::task;
    std::optional<std::string> subtask_description;    // required when granularity = subtask
    std::optional<std::string> generalized_description;
    std::vector<std::string> source_trajectory_ids; // non-empty, provenance
    std::string source_outcome;
    Embedding embedding; // of content + purpose
    // Retrieval index: canonical cluster description once consolidated, the
    // tip's own generalized/subtask description before that, and the source
    // task description for task-level tips.
    std::string index_description;
    Embedding index_embedding;
    UnixSeconds created_at = 0;

    bool operator==(const Tip&) const = default;
};

struct Subtask {
    std::string description; // deliberately generic
    bool generalized = false;
    std::set<std::string> apps;
    int start_step = 0;
    int end_step = 0; // inclusive
    std::string purpose;

    bool operator==(const Subtask&) const = default;
};

struct Cluster {
    std::string id;
    std::string canonical_description;
    Embedding canonical_embedding;
    std::vector<std::string> member_tip_ids; // non-empty

    bool operator==(const Cluster&) const = default;
};

inline constexpr int kDefaultStepCap = 30;

// Establishes the structural invariants of a parsed trajectory; throws
// EmptySteps, NonContiguousIndices, StepCapExceeded or InvalidField.
// Duplicate ids are detected at store insertion.
Trajectory validate_trajectory(Trajectory raw, int step_cap = kDefaultStepCap);

// Field checks shared by parsing and store ingestion.
void validate_tip(const Tip& tip);
void validate_pattern(const CognitivePattern& p);

} // namespace tmem
