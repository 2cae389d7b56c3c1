#include "rule_provider.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "tmem/clock.hpp"
#include "tmem/curation.hpp"
#include "tmem/errors.hpp"
#include "tmem/ids.hpp"

namespace tmem::testing {

using nlohmann::json;

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return lowercase(haystack).find(lowercase(needle)) != std::string::npos;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string item;
    while (std::getline(in, item, ',')) {
        size_t b = item.find_first_not_of(' ');
        size_t e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        std::string token = item.substr(b, e - b + 1);
        if (!token.empty() && token != "(none)") out.push_back(token);
    }
    return out;
}

bool word_in(const std::string& text, const std::string& word) {
    std::string lt = lowercase(text), lw = lowercase(word);
    size_t pos = 0;
    while ((pos = lt.find(lw, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lt[pos - 1]));
        size_t end = pos + lw.size();
        bool right_ok = end == lt.size() || !std::isalnum(static_cast<unsigned char>(lt[end]));
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

} // namespace

std::string prompt_line(const std::string& prompt, const std::string& marker) {
    size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return "";
    pos += marker.size();
    size_t end = prompt.find('\n', pos);
    std::string line = prompt.substr(pos, end == std::string::npos ? end : end - pos);
    size_t b = line.find_first_not_of(' ');
    if (b == std::string::npos) return "";
    return line.substr(b);
}

std::vector<std::pair<int, std::string>> prompt_segments(const std::string& prompt) {
    std::vector<std::pair<int, std::string>> segments;
    std::istringstream in(prompt);
    std::string line;
    bool in_block = false;
    while (std::getline(in, line)) {
        size_t colon = line.find(": ");
        bool numbered = colon != std::string::npos && colon > 0 &&
                        std::all_of(line.begin(), line.begin() + static_cast<long>(colon),
                                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (numbered) {
            in_block = true;
            segments.emplace_back(std::stoi(line.substr(0, colon)), line.substr(colon + 2));
        } else if (in_block) {
            if (line.empty()) break;
            segments.back().second += "\n" + line; // continuation of a segment
        }
    }
    return segments;
}

json prompt_json_block(const std::string& prompt, const std::string& marker) {
    size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return json();
    size_t start = prompt.find_first_of("[{", pos);
    if (start == std::string::npos) return json();
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < prompt.size(); ++i) {
        char c = prompt[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '[' || c == '{') ++depth;
        else if (c == ']' || c == '}') {
            if (--depth == 0) {
                return json::parse(prompt.substr(start, i - start + 1), nullptr, false);
            }
        }
    }
    return json();
}

namespace {

json rule_thoughts(const std::string& prompt) {
    json thoughts = json::array();
    for (const auto& [index, text] : prompt_segments(prompt)) {
        std::string category = "analytical";
        if (contains(text, "failed") || contains(text, "error") || contains(text, "wrong")) {
            category = "reflection";
        } else if (contains(text, "verify") || contains(text, "check") ||
                   contains(text, "confirm") || contains(text, "ensure")) {
            category = "validation";
        } else if (contains(text, "plan") || contains(text, "i will") ||
                   contains(text, "i need to") || contains(text, "proceed")) {
            category = "planning";
        }
        std::string status = "none";
        if (contains(text, "task complete") || contains(text, "task is complete") ||
            contains(text, "completed the task")) {
            status = "completion";
        } else if (contains(text, "failed") || contains(text, "error")) {
            status = "error";
        }
        thoughts.push_back(json{{"segment", index}, {"category", category}, {"status", status}});
    }
    return json{{"thoughts", thoughts}};
}

json rule_patterns(const std::string& prompt) {
    json patterns = json::array();
    for (const auto& [index, text] : prompt_segments(prompt)) {
        std::string kind;
        double confidence = 0.9;
        if (contains(text, "instead of") || contains(text, "let me fix") ||
            contains(text, "i should have")) {
            kind = "self_correction";
        } else if (contains(text, "failed") || contains(text, "error") ||
                   contains(text, "wrong")) {
            kind = "error_recognition";
        } else if (contains(text, "verify") || contains(text, "prerequisite") ||
                   contains(text, "confirm") || contains(text, "ensure")) {
            kind = "validation";
        } else if ((contains(text, "discover") || contains(text, "explore")) &&
                   contains(text, "api")) {
            kind = "api_discovery";
            confidence = 0.85;
        } else if (contains(text, "more efficient") || contains(text, "bulk operation")) {
            kind = "efficiency_awareness";
            confidence = 0.8;
        } else {
            continue;
        }
        patterns.push_back(json{{"kind", kind},
                                {"confidence", confidence},
                                {"evidence", text},
                                {"segment", index}});
    }
    return json{{"patterns", patterns}};
}

json rule_outcome(const std::string& prompt) {
    std::string provisional = prompt_line(prompt, "PROVISIONAL RULE-BASED OUTCOME:");
    std::string task = prompt_line(prompt, "TASK:");

    size_t report_pos = prompt.find("EVALUATION REPORT:");
    size_t patterns_pos = prompt.find("DETECTED PATTERNS:");
    std::string report_block;
    if (report_pos != std::string::npos && patterns_pos != std::string::npos) {
        report_block = prompt.substr(report_pos + 18, patterns_pos - report_pos - 18);
    }
    bool has_report = report_block.find("absent") == std::string::npos;

    json payload{{"outcome",
                  json{{"kind", provisional},
                       {"rationale", has_report
                                         ? "ground-truth evaluation verdict with self-reflective "
                                           "signals in agreement"
                                         : "synthesized from self-reflective signals"}}},
                 {"task_intent", task}};

    if (provisional != "failure") {
        std::string kind = "clean";
        if (provisional == "inefficient_success") kind = "inefficient";
        if (provisional == "recovery_success") kind = "recovery";
        int evidence_step = 0;
        std::string first_pattern = prompt_line(prompt, "DETECTED PATTERNS:\nstep ");
        if (!first_pattern.empty()) {
            evidence_step = std::atoi(first_pattern.c_str());
        }
        payload["success_analysis"] =
            json{{"kind", kind},
                 {"evidence", json::array({json{{"step_index", evidence_step},
                                                {"description", kind + " execution signal"}}})}};
    }
    if (has_report) {
        json report = prompt_json_block(prompt, "EVALUATION REPORT:");
        json diags = json::array();
        if (report.is_object() && report.contains("indicators")) {
            for (const auto& ind : report["indicators"]) {
                std::string name = ind.value("name", "");
                bool passed = ind.value("passed", false);
                diags.push_back(json{{"indicator", name},
                                     {"diagnosis", "check '" + name + "' " +
                                                       (passed ? "passed" : "failed") + ": " +
                                                       ind.value("message", "")}});
            }
        }
        payload["evaluation_intelligence"] = diags;
    }
    return payload;
}

json rule_attribution(const std::string& prompt) {
    std::string indicator = prompt_line(prompt, "INDICATOR:");
    std::string kind = indicator.substr(0, indicator.find(' '));
    std::vector<int> steps;
    size_t at = indicator.find("@ steps ");
    if (at != std::string::npos) {
        for (const auto& tok : split_csv(indicator.substr(at + 8))) {
            steps.push_back(std::atoi(tok.c_str()));
        }
    }
    if (steps.empty()) steps.push_back(0);
    int first = steps.front(), last = steps.back();

    json payload{{"outcome_kind", kind},
                 {"immediate_cause",
                  json{{"step_index", last}, {"description", "the outcome surfaced at this step"}}},
                 {"root_cause",
                  json{{"step_index", first},
                       {"description", "the originating decision for this outcome"}}},
                 {"contributing_factors", json::array()}};
    if (kind == "failure") {
        payload["improvement_steps"] =
            json::array({"Verify the operation's prerequisites before executing it.",
                         "Confirm intermediate results before building on them."});
    } else if (kind == "inefficiency") {
        payload["improvement_steps"] =
            json::array({"Check whether a bulk API covers the repeated operation.",
                         "Replace repeated per-item calls with the single bulk operation."});
    } else if (kind == "recovery") {
        payload["improvement_steps"] =
            json::array({"Re-check the relevant configuration after an error before retrying."});
    } else {
        payload["improvement_steps"] = json::array();
    }
    return payload;
}

json rule_tips(const std::string& prompt) {
    json attribution = prompt_json_block(prompt, "ATTRIBUTION:");
    std::string kind = attribution.is_object() ? attribution.value("outcome_kind", "failure")
                                               : "failure";
    json steps = json::array();
    std::string content;
    if (attribution.is_object() && attribution.contains("improvement_steps") &&
        !attribution["improvement_steps"].empty()) {
        steps = attribution["improvement_steps"];
        content = "Before repeating this workflow: " +
                  steps.front().get<std::string>();
    } else {
        std::string what = attribution.is_object()
                               ? attribution["immediate_cause"].value("description", "")
                               : "";
        content = "Replicate the effective pattern: " + what;
        steps.push_back(what.empty() ? std::string("Repeat the successful sequence.") : what);
    }
    return json{{"tips", json::array({json{{"content", content},
                                           {"purpose", "lesson derived from a " + kind +
                                                           " attribution"},
                                           {"steps", steps},
                                           {"trigger", "When performing a similar task"}}})}};
}

json rule_subtasks(const std::string& prompt) {
    int count = std::atoi(prompt_line(prompt, "STEP COUNT:").c_str());
    json apps = json::array();
    for (const auto& app : split_csv(prompt_line(prompt, "APP HINTS:"))) apps.push_back(app);
    return json{{"subtasks",
                 json::array({json{{"description", "Complete the requested task"},
                                   {"apps", apps},
                                   {"step_range", json::array({0, count > 0 ? count - 1 : 0})},
                                   {"purpose", prompt_line(prompt, "TASK:")}}})}};
}

json rule_subtask_tips(const std::string& prompt) {
    std::string desc = prompt_line(prompt, "SUBTASK:");
    return json{
        {"tips",
         json::array(
             {json{{"content", "Verify the inputs required by '" + desc + "' before acting"},
                   {"purpose", "avoid acting on missing prerequisites"},
                   {"steps", json::array({"List the inputs the subtask needs",
                                          "Confirm each input is available",
                                          "Execute the operation"})},
                   {"trigger", "When starting: " + desc},
                   {"category", "strategy"}},
              json{{"content", "Confirm the result of '" + desc + "' before moving on"},
                   {"purpose", "catch silent failures early"},
                   {"steps", json::array({"Inspect the operation's result",
                                          "Proceed only when it matches the expectation"})},
                   {"trigger", "When finishing: " + desc},
                   {"category", "strategy"}}})}};
}

json rule_generalized(const std::string& prompt) {
    std::string description = prompt_line(prompt, "DESCRIPTION:");
    EntityLexicon lexicon;
    for (const auto& app : split_csv(prompt_line(prompt, "KNOWN APPLICATION NAMES:"))) {
        lexicon.app_names.insert(lowercase(app));
    }
    return json{{"generalized", scrub_description(description, lexicon)}};
}

json rule_consolidation(const std::string& prompt) {
    json members = prompt_json_block(prompt, "MEMBERS:");
    if (!members.is_array() || members.empty()) {
        throw Error(ErrorCode::invalid_field, "consolidator prompt has no members block");
    }
    // Winner by the same precedence order the engine enforces.
    auto as_tip = [](const json& digest) {
        Tip t;
        t.id = digest.value("id", "");
        t.category = tip_category_from_string(digest.value("category", "strategy"));
        t.priority = priority_from_string(digest.value("priority", "medium"));
        t.created_at = parse_rfc3339(digest.value("created_at", "1970-01-01T00:00:00Z"));
        t.source_outcome = digest.value("source_outcome", "");
        return t;
    };
    size_t winner = 0;
    for (size_t i = 1; i < members.size(); ++i) {
        if (tip_beats(as_tip(members[i]), as_tip(members[winner]))) winner = i;
    }
    const json& w = members[winner];
    json source_ids = json::array();
    for (const auto& m : members) source_ids.push_back(m.value("id", ""));

    std::string canonical = w.contains("generalized_description") &&
                                    w["generalized_description"].is_string()
                                ? w["generalized_description"].get<std::string>()
                                : w.value("index_description", "");
    json merged{{"content", w.value("content", "")},
                {"purpose", w.value("purpose", "")},
                {"steps", w.contains("steps") ? w["steps"] : json::array()},
                {"trigger", w.value("trigger", "")},
                {"category", w.value("category", "strategy")},
                {"priority", w.value("priority", "medium")},
                {"source_tip_ids", source_ids}};
    if (w.contains("negative_example") && w["negative_example"].is_string()) {
        merged["negative_example"] = w["negative_example"];
    }
    return json{{"canonical_description", canonical},
                {"merged_tips", json::array({merged})},
                {"conflicts", json::array()}};
}

json rule_retrieval_query(const std::string& prompt) {
    std::string task = prompt_line(prompt, "TASK:");
    json context = nullptr;
    for (const auto& c : split_csv(prompt_line(prompt, "KNOWN APPLICATION CONTEXTS:"))) {
        if (word_in(task, c)) {
            context = c;
            break;
        }
    }
    json category = nullptr;
    for (const auto& c : split_csv(prompt_line(prompt, "KNOWN TASK CATEGORIES:"))) {
        if (word_in(task, c)) {
            category = c;
            break;
        }
    }
    json preferred = json::array({"strategy"});
    if (contains(task, "retry") || contains(task, "fail") || contains(task, "error") ||
        contains(task, "fix")) {
        preferred = json::array({"recovery", "strategy"});
    } else if (contains(task, "clean up") || contains(task, "all ") || contains(task, "bulk")) {
        preferred = json::array({"optimization", "strategy"});
    }
    return json{{"application_context", context},
                {"task_category", category},
                {"preferred_categories", preferred}};
}

} // namespace

std::string RuleProvider::complete_text(const LlmRequest& req) {
    json payload;
    switch (req.role) {
        case Role::thought_categorizer: payload = rule_thoughts(req.prompt); break;
        case Role::pattern_detector: payload = rule_patterns(req.prompt); break;
        case Role::outcome_interpreter: payload = rule_outcome(req.prompt); break;
        case Role::attribution_analyst: payload = rule_attribution(req.prompt); break;
        case Role::tip_generator: payload = rule_tips(req.prompt); break;
        case Role::segmenter: payload = rule_subtasks(req.prompt); break;
        case Role::subtask_tipper: payload = rule_subtask_tips(req.prompt); break;
        case Role::generalizer: payload = rule_generalized(req.prompt); break;
        case Role::consolidator: payload = rule_consolidation(req.prompt); break;
        case Role::retrieval_selector: payload = rule_retrieval_query(req.prompt); break;
    }
    return payload.dump();
}

std::string OverrideProvider::complete_text(const LlmRequest& req) {
    for (const auto& override_rule : overrides_) {
        if (override_rule.role == req.role && override_rule.matches(req.prompt)) {
            return override_rule.payload(req.prompt).dump();
        }
    }
    return fallback_.complete_text(req);
}

std::string RecordingProvider::complete_text(const LlmRequest& req) {
    std::string raw = inner_->complete_text(req);
    records_.emplace_back(req.role, req.prompt, json::parse(raw));
    return raw;
}

json RecordingProvider::fixture_json() const {
    json entries = json::array();
    std::set<std::string> seen;
    for (const auto& [role, prompt, payload] : records_) {
        std::string key = ScriptedProvider::key(role, prompt);
        if (!seen.insert(key).second) continue;
        entries.push_back(json{{"role", to_string(role)},
                               {"prompt_sha256", sha256_hex(prompt)},
                               {"payload", payload}});
    }
    return json{{"entries", entries}};
}

} // namespace tmem::testing
