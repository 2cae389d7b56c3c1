#include "tmem/json_io.hpp"

#include "tmem/errors.hpp"

namespace tmem {

const json& require_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        throw Error(ErrorCode::invalid_field, std::string("missing field '") + key + "'");
    }
    return *it;
}

std::string require_string(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_string()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be a string");
    }
    return v.get<std::string>();
}

bool require_bool(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_boolean()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be a bool");
    }
    return v.get<bool>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

namespace {

int require_int(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be an integer");
    }
    return v.get<int>();
}

double require_number(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_number()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be a number");
    }
    return v.get<double>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_array()) {
        throw Error(ErrorCode::invalid_field, std::string("field '") + key + "' must be an array");
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) {
            throw Error(ErrorCode::invalid_field,
                        std::string("field '") + key + "' must contain strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

} // namespace

json to_json(const Embedding& v) { return json(v.vector); }

Embedding embedding_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::invalid_field, "embedding must be an array");
    Embedding e;
    e.vector.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw Error(ErrorCode::invalid_field, "embedding entries must be numbers");
        e.vector.push_back(x.get<double>());
    }
    return e;
}

json to_json(const ActionRecord& v) { return json{{"name", v.name}, {"args", v.args}}; }

ActionRecord action_from_json(const json& j) {
    ActionRecord a;
    a.name = require_string(j, "name");
    if (auto it = j.find("args"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw Error(ErrorCode::invalid_field, "action args must be an object");
        a.args = *it;
    }
    return a;
}

json to_json(const CognitivePattern& v) {
    return json{{"kind", to_string(v.kind)}, {"confidence", v.confidence}, {"evidence", v.evidence}};
}

CognitivePattern pattern_from_json(const json& j) {
    CognitivePattern p;
    p.kind = pattern_kind_from_string(require_string(j, "kind"));
    p.confidence = require_number(j, "confidence");
    p.evidence = require_string(j, "evidence");
    validate_pattern(p);
    return p;
}

json to_json(const Thought& v) {
    json patterns = json::array();
    for (const auto& p : v.patterns) patterns.push_back(to_json(p));
    return json{{"text", v.text}, {"category", to_string(v.category)}, {"patterns", patterns}};
}

Thought thought_from_json(const json& j) {
    Thought t;
    t.text = require_string(j, "text");
    t.category = thought_category_from_string(require_string(j, "category"));
    if (auto it = j.find("patterns"); it != j.end() && !it->is_null()) {
        for (const auto& p : *it) t.patterns.push_back(pattern_from_json(p));
    }
    return t;
}

json to_json(const Step& v) {
    json j{{"index", v.index}, {"context", v.context}, {"response", v.response}};
    json thoughts = json::array();
    for (const auto& t : v.thoughts) thoughts.push_back(to_json(t));
    j["thoughts"] = thoughts;
    if (v.action) j["action"] = to_json(*v.action);
    if (v.action_result) j["action_result"] = *v.action_result;
    return j;
}

Step step_from_json(const json& j) {
    Step s;
    s.index = require_int(j, "index");
    s.context = optional_string(j, "context").value_or("");
    s.response = require_string(j, "response");
    if (auto it = j.find("thoughts"); it != j.end() && !it->is_null()) {
        for (const auto& t : *it) s.thoughts.push_back(thought_from_json(t));
    }
    if (auto it = j.find("action"); it != j.end() && !it->is_null()) {
        s.action = action_from_json(*it);
    }
    s.action_result = optional_string(j, "action_result");
    return s;
}

json to_json(const EvaluationReport& v) {
    json indicators = json::array();
    for (const auto& i : v.indicators) {
        indicators.push_back(json{{"name", i.name}, {"passed", i.passed}, {"message", i.message}});
    }
    return json{{"passed", v.passed}, {"indicators", indicators}};
}

EvaluationReport evaluation_report_from_json(const json& j) {
    EvaluationReport r;
    r.passed = require_bool(j, "passed");
    if (auto it = j.find("indicators"); it != j.end() && !it->is_null()) {
        for (const auto& e : *it) {
            EvalIndicator ind;
            ind.name = require_string(e, "name");
            ind.passed = require_bool(e, "passed");
            ind.message = optional_string(e, "message").value_or("");
            r.indicators.push_back(std::move(ind));
        }
    }
    return r;
}

json to_json(const Trajectory& v) {
    json steps = json::array();
    for (const auto& s : v.steps) steps.push_back(to_json(s));
    json j{{"id", v.id},
           {"task_description", v.task_description},
           {"steps", steps},
           {"created_at", format_rfc3339(v.created_at)}};
    if (v.evaluation_report) j["evaluation_report"] = to_json(*v.evaluation_report);
    if (!v.app_hints.empty()) j["app_hints"] = v.app_hints;
    return j;
}

Trajectory trajectory_from_json(const json& j) {
    Trajectory t;
    t.id = optional_string(j, "id").value_or("");
    t.task_description = require_string(j, "task_description");
    const json& steps = require_field(j, "steps");
    if (!steps.is_array()) throw Error(ErrorCode::invalid_field, "steps must be an array");
    for (const auto& s : steps) t.steps.push_back(step_from_json(s));
    if (auto it = j.find("evaluation_report"); it != j.end() && !it->is_null()) {
        t.evaluation_report = evaluation_report_from_json(*it);
    }
    if (auto it = j.find("app_hints"); it != j.end() && !it->is_null()) {
        for (const auto& h : *it) t.app_hints.insert(h.get<std::string>());
    }
    if (auto ts = optional_string(j, "created_at")) t.created_at = parse_rfc3339(*ts);
    return t;
}

json to_json(const OutcomeClassification& v) {
    return json{{"kind", to_string(v.kind)}, {"source", to_string(v.source)},
                {"rationale", v.rationale}};
}

OutcomeClassification outcome_from_json(const json& j) {
    OutcomeClassification o;
    o.kind = outcome_kind_from_string(require_string(j, "kind"));
    o.source = outcome_source_from_string(require_string(j, "source"));
    o.rationale = optional_string(j, "rationale").value_or("");
    return o;
}

json to_json(const CausalNode& v) {
    return json{{"step_index", v.step_index}, {"description", v.description}};
}

CausalNode causal_node_from_json(const json& j) {
    CausalNode n;
    n.step_index = require_int(j, "step_index");
    n.description = require_string(j, "description");
    return n;
}

json to_json(const DecisionAttribution& v) {
    json factors = json::array();
    for (const auto& f : v.contributing_factors) factors.push_back(to_json(f));
    json j{{"outcome_kind", to_string(v.outcome_kind)},
           {"immediate_cause", to_json(v.immediate_cause)},
           {"root_cause", to_json(v.root_cause)},
           {"contributing_factors", factors},
           {"improvement_steps", v.improvement_steps}};
    if (v.proximate_cause) j["proximate_cause"] = to_json(*v.proximate_cause);
    return j;
}

DecisionAttribution attribution_from_json(const json& j) {
    DecisionAttribution a;
    a.outcome_kind = attribution_kind_from_string(require_string(j, "outcome_kind"));
    a.immediate_cause = causal_node_from_json(require_field(j, "immediate_cause"));
    a.root_cause = causal_node_from_json(require_field(j, "root_cause"));
    if (auto it = j.find("proximate_cause"); it != j.end() && !it->is_null()) {
        a.proximate_cause = causal_node_from_json(*it);
    }
    if (auto it = j.find("contributing_factors"); it != j.end() && !it->is_null()) {
        for (const auto& f : *it) a.contributing_factors.push_back(causal_node_from_json(f));
    }
    if (auto it = j.find("improvement_steps"); it != j.end() && !it->is_null()) {
        a.improvement_steps = it->get<std::vector<std::string>>();
    }
    return a;
}

json to_json(const Tip& v) {
    json j{{"id", v.id},
           {"category", to_string(v.category)},
           {"content", v.content},
           {"purpose", v.purpose},
           {"steps", v.steps},
           {"trigger", v.trigger},
           {"priority", to_string(v.priority)},
           {"granularity", to_string(v.granularity)},
           {"source_trajectory_ids", v.source_trajectory_ids},
           {"source_outcome", v.source_outcome},
           {"embedding", to_json(v.embedding)},
           {"index_description", v.index_description},
           {"index_embedding", to_json(v.index_embedding)},
           {"created_at", format_rfc3339(v.created_at)}};
    if (v.negative_example) j["negative_example"] = *v.negative_example;
    if (v.application_context) j["application_context"] = *v.application_context;
    if (v.task_category) j["task_category"] = *v.task_category;
    if (v.subtask_description) j["subtask_description"] = *v.subtask_description;
    if (v.generalized_description) j["generalized_description"] = *v.generalized_description;
    return j;
}

Tip tip_from_json(const json& j) {
    Tip t;
    t.id = require_string(j, "id");
    t.category = tip_category_from_string(require_string(j, "category"));
    t.content = require_string(j, "content");
    t.purpose = optional_string(j, "purpose").value_or("");
    t.steps = string_list(j, "steps");
    t.trigger = optional_string(j, "trigger").value_or("");
    t.negative_example = optional_string(j, "negative_example");
    t.application_context = optional_string(j, "application_context");
    t.task_category = optional_string(j, "task_category");
    t.priority = priority_from_string(require_string(j, "priority"));
    t.granularity = granularity_from_string(require_string(j, "granularity"));
    t.subtask_description = optional_string(j, "subtask_description");
    t.generalized_description = optional_string(j, "generalized_description");
    t.source_trajectory_ids = string_list(j, "source_trajectory_ids");
    t.source_outcome = optional_string(j, "source_outcome").value_or("");
    t.embedding = embedding_from_json(require_field(j, "embedding"));
    t.index_description = require_string(j, "index_description");
    t.index_embedding = embedding_from_json(require_field(j, "index_embedding"));
    t.created_at = parse_rfc3339(require_string(j, "created_at"));
    validate_tip(t);
    return t;
}

json to_json(const Subtask& v) {
    return json{{"description", v.description},
                {"generalized", v.generalized},
                {"apps", v.apps},
                {"step_range", json::array({v.start_step, v.end_step})},
                {"purpose", v.purpose}};
}

Subtask subtask_from_json(const json& j) {
    Subtask s;
    s.description = require_string(j, "description");
    if (auto it = j.find("generalized"); it != j.end() && it->is_boolean()) {
        s.generalized = it->get<bool>();
    }
    if (auto it = j.find("apps"); it != j.end() && !it->is_null()) {
        for (const auto& a : *it) s.apps.insert(a.get<std::string>());
    }
    const json& range = require_field(j, "step_range");
    if (!range.is_array() || range.size() != 2) {
        throw Error(ErrorCode::invalid_field, "step_range must be [start, end]");
    }
    s.start_step = range[0].get<int>();
    s.end_step = range[1].get<int>();
    s.purpose = optional_string(j, "purpose").value_or("");
    return s;
}

json to_json(const Cluster& v) {
    return json{{"id", v.id},
                {"canonical_description", v.canonical_description},
                {"canonical_embedding", to_json(v.canonical_embedding)},
                {"member_tip_ids", v.member_tip_ids}};
}

Cluster cluster_from_json(const json& j) {
    Cluster c;
    c.id = require_string(j, "id");
    c.canonical_description = require_string(j, "canonical_description");
    c.canonical_embedding = embedding_from_json(require_field(j, "canonical_embedding"));
    c.member_tip_ids = string_list(j, "member_tip_ids");
    if (c.member_tip_ids.empty()) {
        throw Error(ErrorCode::invalid_field, "cluster '" + c.id + "' has no members");
    }
    return c;
}

} // namespace tmem
