#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmem/clock.hpp"
#include "tmem/gateway.hpp"
#include "tmem/types.hpp"

namespace tmem {

struct PatternAtStep {
    int step_index = 0;
    int segment = -1; // -1 when the detector did not anchor it
    CognitivePattern pattern;

    bool operator==(const PatternAtStep&) const = default;
};

struct SuccessAnalysis {
    enum class Kind { clean, inefficient, recovery };
    Kind kind = Kind::clean;
    std::vector<CausalNode> evidence;
};

const char* to_string(SuccessAnalysis::Kind v);

struct EvaluationDiagnosis {
    std::string indicator;
    std::string diagnosis;
};

struct IntermediateRepresentation {
    std::string trajectory_id;
    std::map<int, std::vector<Thought>> thoughts_by_step;
    std::vector<PatternAtStep> patterns;
    OutcomeClassification outcome;
    std::optional<SuccessAnalysis> success_analysis; // present iff outcome.kind != failure
    std::optional<std::vector<EvaluationDiagnosis>> evaluation_intelligence;
    std::string task_intent;
    int step_count = 0;
};

struct OutcomeIndicator {
    AttributionKind kind = AttributionKind::failure;
    std::vector<int> step_indices; // sorted
    std::string summary;
};

struct ExtractionConfig {
    int max_tips_per_subtask = 4;
    std::function<void(const std::string&)> warn; // default: stderr
};

// Splits an agent response into thought-sized segments: explicit markers
// ("Thought:", "Plan:", "Observation:") start a new segment, sentence
// punctuation ends one. Segments are verbatim spans of the response.
std::vector<std::string> split_into_segments(const std::string& response);

// >= 3 consecutive steps calling the same operation with the same argument
// keys and at most one differing value; mechanical inefficiency candidate,
// confirmed or rejected by the outcome analysis.
std::vector<std::vector<int>> detect_repeated_action_chains(const Trajectory& t);

// True when the text states task completion (used as the completion signal
// fallback when the categorizer flags nothing).
bool has_completion_marker(const std::string& text);

// Bounds, orders and de-overlaps segmenter output; later ranges lose the
// contested steps.
std::vector<Subtask> clip_subtask_ranges(std::vector<Subtask> subtasks, int step_count,
                                         const std::function<void(const std::string&)>& warn = {});

// Phase 1: trajectory intelligence, causal attribution, tip generation at
// both granularities. Stateless across trajectories.
class Extractor {
public:
    Extractor(Gateway& gateway, const Clock& clock, ExtractionConfig cfg = {});

    IntermediateRepresentation extract_intelligence(const Trajectory& t);

    std::vector<OutcomeIndicator> detect_indicators(const IntermediateRepresentation& ir,
                                                    const Trajectory& t) const;

    std::vector<DecisionAttribution> attribute_decisions(const IntermediateRepresentation& ir,
                                                         const Trajectory& t);

    std::vector<Tip> generate_task_tips(const IntermediateRepresentation& ir,
                                        const std::vector<DecisionAttribution>& attributions,
                                        const Trajectory& t);

    std::vector<Subtask> segment_subtasks(const Trajectory& t);

    std::vector<Tip> generate_subtask_tips(const Trajectory& t,
                                           const std::vector<Subtask>& subtasks);

private:
    void warn(const std::string& message) const;

    Gateway& gateway_;
    const Clock& clock_;
    ExtractionConfig cfg_;
};

TipCategory category_for(AttributionKind kind);

} // namespace tmem
