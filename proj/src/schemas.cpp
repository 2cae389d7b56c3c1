#include "tmem/schemas.hpp"

#include <functional>
#include <map>

#include "tmem/errors.hpp"

namespace tmem {

namespace {

using nlohmann::json;
using Problems = std::vector<std::string>;

void want_string(const json& j, const char* key, Problems& out, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) out.push_back(std::string(key) + " missing");
        return;
    }
    if (!it->is_string()) out.push_back(std::string(key) + " must be a string");
}

void want_string_array(const json& j, const char* key, Problems& out, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) out.push_back(std::string(key) + " missing");
        return;
    }
    if (!it->is_array()) {
        out.push_back(std::string(key) + " must be an array");
        return;
    }
    for (const auto& e : *it) {
        if (!e.is_string()) {
            out.push_back(std::string(key) + " must contain strings");
            return;
        }
    }
}

void want_int(const json& j, const char* key, Problems& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        out.push_back(std::string(key) + " must be an integer");
    }
}

void want_enum(const json& j, const char* key, std::initializer_list<const char*> allowed,
               Problems& out, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) out.push_back(std::string(key) + " missing");
        return;
    }
    if (!it->is_string()) {
        out.push_back(std::string(key) + " must be a string");
        return;
    }
    for (const char* a : allowed) {
        if (*it == a) return;
    }
    out.push_back(std::string(key) + " has unknown value '" + it->get<std::string>() + "'");
}

void check_causal_node(const json& j, const char* key, Problems& out, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) out.push_back(std::string(key) + " missing");
        return;
    }
    if (!it->is_object()) {
        out.push_back(std::string(key) + " must be an object");
        return;
    }
    want_int(*it, "step_index", out);
    want_string(*it, "description", out);
}

void check_tip_spec(const json& t, Problems& out) {
    want_string(t, "content", out);
    want_string(t, "purpose", out);
    want_string_array(t, "steps", out);
    want_string(t, "trigger", out);
    want_string(t, "negative_example", out, false);
    want_string(t, "application_context", out, false);
    want_string(t, "task_category", out, false);
    want_enum(t, "category", {"strategy", "recovery", "optimization"}, out, false);
    want_enum(t, "priority", {"critical", "high", "medium", "low"}, out, false);
    if (auto it = t.find("generic_variant"); it != t.end() && !it->is_null()) {
        if (!it->is_object()) {
            out.push_back("generic_variant must be an object");
        } else {
            want_string(*it, "content", out);
            want_string(*it, "purpose", out);
            want_string_array(*it, "steps", out);
            want_string(*it, "trigger", out);
        }
    }
}

Problems v_thoughts(const json& p) {
    Problems out;
    auto it = p.find("thoughts");
    if (it == p.end() || !it->is_array()) {
        out.push_back("thoughts must be an array");
        return out;
    }
    for (const auto& t : *it) {
        want_int(t, "segment", out);
        want_enum(t, "category", {"analytical", "planning", "validation", "reflection"}, out);
        want_enum(t, "status", {"completion", "error", "none"}, out, false);
    }
    return out;
}

Problems v_patterns(const json& p) {
    Problems out;
    auto it = p.find("patterns");
    if (it == p.end() || !it->is_array()) {
        out.push_back("patterns must be an array");
        return out;
    }
    for (const auto& t : *it) {
        want_enum(t, "kind",
                  {"validation", "reflection", "self_correction", "error_recognition",
                   "api_discovery", "efficiency_awareness"},
                  out);
        auto c = t.find("confidence");
        if (c == t.end() || !c->is_number() || c->get<double>() < 0.0 || c->get<double>() > 1.0) {
            out.push_back("confidence must be a number in [0,1]");
        }
        want_string(t, "evidence", out);
        want_int(t, "segment", out);
    }
    return out;
}

Problems v_outcome(const json& p) {
    Problems out;
    auto o = p.find("outcome");
    if (o == p.end() || !o->is_object()) {
        out.push_back("outcome missing");
        return out;
    }
    want_enum(*o, "kind", {"clean_success", "inefficient_success", "recovery_success", "failure"},
              out);
    want_string(*o, "rationale", out);
    want_string(p, "task_intent", out, false);
    if (auto sa = p.find("success_analysis"); sa != p.end() && !sa->is_null()) {
        want_enum(*sa, "kind", {"clean", "inefficient", "recovery"}, out);
        if (auto ev = sa->find("evidence"); ev != sa->end() && ev->is_array()) {
            for (size_t i = 0; i < ev->size(); ++i) check_causal_node(*sa, "evidence", out, false);
        }
    }
    if (auto ei = p.find("evaluation_intelligence"); ei != p.end() && !ei->is_null()) {
        if (!ei->is_array()) {
            out.push_back("evaluation_intelligence must be an array");
        } else {
            for (const auto& e : *ei) {
                want_string(e, "indicator", out);
                want_string(e, "diagnosis", out);
            }
        }
    }
    return out;
}

Problems v_attribution(const json& p) {
    Problems out;
    want_enum(p, "outcome_kind", {"failure", "recovery", "inefficiency", "success_pattern"}, out);
    check_causal_node(p, "immediate_cause", out);
    check_causal_node(p, "root_cause", out);
    check_causal_node(p, "proximate_cause", out, false);
    if (auto it = p.find("contributing_factors"); it != p.end() && !it->is_null()) {
        if (!it->is_array()) out.push_back("contributing_factors must be an array");
    }
    want_string_array(p, "improvement_steps", out, false);
    return out;
}

Problems v_tips(const json& p) {
    Problems out;
    auto it = p.find("tips");
    if (it == p.end() || !it->is_array()) {
        out.push_back("tips must be an array");
        return out;
    }
    for (const auto& t : *it) check_tip_spec(t, out);
    return out;
}

Problems v_subtasks(const json& p) {
    Problems out;
    auto it = p.find("subtasks");
    if (it == p.end() || !it->is_array()) {
        out.push_back("subtasks must be an array");
        return out;
    }
    for (const auto& s : *it) {
        want_string(s, "description", out);
        want_string_array(s, "apps", out, false);
        want_string(s, "purpose", out, false);
        auto r = s.find("step_range");
        if (r == s.end() || !r->is_array() || r->size() != 2 || !(*r)[0].is_number_integer() ||
            !(*r)[1].is_number_integer()) {
            out.push_back("step_range must be [start, end] integers");
        }
    }
    return out;
}

Problems v_generalized(const json& p) {
    Problems out;
    want_string(p, "generalized", out);
    return out;
}

Problems v_consolidation(const json& p) {
    Problems out;
    want_string(p, "canonical_description", out);
    auto it = p.find("merged_tips");
    if (it == p.end() || !it->is_array()) {
        out.push_back("merged_tips must be an array");
        return out;
    }
    for (const auto& t : *it) {
        check_tip_spec(t, out);
        want_string_array(t, "source_tip_ids", out);
    }
    if (auto c = p.find("conflicts"); c != p.end() && !c->is_null()) {
        if (!c->is_array()) {
            out.push_back("conflicts must be an array");
        } else {
            for (const auto& e : *c) {
                want_string(e, "winner_tip_id", out);
                want_string(e, "loser_tip_id", out);
                want_string(e, "topic", out, false);
            }
        }
    }
    return out;
}

Problems v_retrieval_query(const json& p) {
    Problems out;
    want_string(p, "application_context", out, false);
    want_string(p, "task_category", out, false);
    auto it = p.find("preferred_categories");
    if (it == p.end() || !it->is_array()) {
        out.push_back("preferred_categories must be an array");
        return out;
    }
    for (const auto& c : *it) {
        if (!c.is_string() ||
            (c != "strategy" && c != "recovery" && c != "optimization")) {
            out.push_back("preferred_categories entries must be tip categories");
            return out;
        }
    }
    return out;
}

const std::map<std::string, std::function<Problems(const json&)>>& registry() {
    static const std::map<std::string, std::function<Problems(const json&)>> r = {
        {"thoughts.v1", v_thoughts},
        {"patterns.v1", v_patterns},
        {"outcome.v1", v_outcome},
        {"attribution.v1", v_attribution},
        {"tips.v1", v_tips},
        {"subtasks.v1", v_subtasks},
        {"subtask_tips.v1", v_tips},
        {"generalized.v1", v_generalized},
        {"consolidation.v1", v_consolidation},
        {"retrieval_query.v1", v_retrieval_query},
    };
    return r;
}

} // namespace

std::vector<std::string> validate_payload(const std::string& schema_id,
                                          const nlohmann::json& payload) {
    auto it = registry().find(schema_id);
    if (it == registry().end()) {
        throw Error(ErrorCode::invalid_field, "unregistered schema '" + schema_id + "'");
    }
    if (!payload.is_object()) return {"payload must be a JSON object"};
    return it->second(payload);
}

bool is_registered_schema(const std::string& schema_id) {
    return registry().count(schema_id) > 0;
}

std::vector<std::string> registered_schema_ids() {
    std::vector<std::string> ids;
    for (const auto& [id, _] : registry()) ids.push_back(id);
    return ids;
}

} // namespace tmem
