#pragma once

#include <nlohmann/json.hpp>

#include "tmem/types.hpp"

// JSON wire format, lower_snake_case fields throughout. Absent optionals are
// omitted on write and accepted as either missing or null on read.
// nlohmann::json keeps object keys sorted, so dumps are byte-stable.

namespace tmem {

using json = nlohmann::json;

json to_json(const Embedding& v);
json to_json(const ActionRecord& v);
json to_json(const CognitivePattern& v);
json to_json(const Thought& v);
json to_json(const Step& v);
json to_json(const EvaluationReport& v);
json to_json(const Trajectory& v);
json to_json(const OutcomeClassification& v);
json to_json(const CausalNode& v);
json to_json(const DecisionAttribution& v);
json to_json(const Tip& v);
json to_json(const Subtask& v);
json to_json(const Cluster& v);

Embedding embedding_from_json(const json& j);
ActionRecord action_from_json(const json& j);
CognitivePattern pattern_from_json(const json& j);
Thought thought_from_json(const json& j);
Step step_from_json(const json& j);
EvaluationReport evaluation_report_from_json(const json& j);
Trajectory trajectory_from_json(const json& j);
OutcomeClassification outcome_from_json(const json& j);
CausalNode causal_node_from_json(const json& j);
DecisionAttribution attribution_from_json(const json& j);
Tip tip_from_json(const json& j);
Subtask subtask_from_json(const json& j);
Cluster cluster_from_json(const json& j);

// Parse helpers that raise InvalidField instead of nlohmann's type_error.
std::string require_string(const json& j, const char* key);
bool require_bool(const json& j, const char* key);
const json& require_field(const json& j, const char* key);
std::optional<std::string> optional_string(const json& j, const char* key);

} // namespace tmem
