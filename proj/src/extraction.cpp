#include "tmem/extraction.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "tmem/errors.hpp"
#include "tmem/ids.hpp"
#include "tmem/json_io.hpp"
#include "tmem/prompts.hpp"

namespace tmem {

const char* to_string(SuccessAnalysis::Kind v) {
    switch (v) {
        case SuccessAnalysis::Kind::clean: return "clean";
        case SuccessAnalysis::Kind::inefficient: return "inefficient";
        case SuccessAnalysis::Kind::recovery: return "recovery";
    }
    return "clean";
}

TipCategory category_for(AttributionKind kind) {
    switch (kind) {
        case AttributionKind::success_pattern: return TipCategory::strategy;
        case AttributionKind::failure: return TipCategory::recovery;
        case AttributionKind::recovery: return TipCategory::recovery;
        case AttributionKind::inefficiency: return TipCategory::optimization;
    }
    return TipCategory::strategy;
}

namespace {

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const std::vector<std::string>& segment_markers() {
    static const std::vector<std::string> markers = {"Thought:", "Plan:", "Observation:"};
    return markers;
}

} // namespace

std::vector<std::string> split_into_segments(const std::string& response) {
    // Cut at explicit markers first (dropping the marker itself), then at
    // sentence punctuation followed by whitespace.
    std::vector<std::string> chunks;
    size_t pos = 0;
    while (pos < response.size()) {
        size_t next = std::string::npos;
        size_t marker_len = 0;
        for (const auto& m : segment_markers()) {
            size_t found = response.find(m, pos + 1);
            if (found != std::string::npos && found < next) {
                next = found;
                marker_len = m.size();
            }
        }
        std::string chunk = response.substr(pos, next == std::string::npos ? next : next - pos);
        for (const auto& m : segment_markers()) {
            if (chunk.rfind(m, 0) == 0) {
                chunk = chunk.substr(m.size());
                break;
            }
        }
        chunks.push_back(chunk);
        if (next == std::string::npos) break;
        pos = next;
    }

    std::vector<std::string> segments;
    for (const auto& chunk : chunks) {
        size_t start = 0;
        for (size_t i = 0; i < chunk.size(); ++i) {
            char c = chunk[i];
            if ((c == '.' || c == '!' || c == '?') &&
                (i + 1 == chunk.size() || std::isspace(static_cast<unsigned char>(chunk[i + 1])))) {
                std::string seg = trim(chunk.substr(start, i - start + 1));
                if (!seg.empty()) segments.push_back(seg);
                start = i + 1;
            }
        }
        std::string tail = trim(chunk.substr(start));
        if (!tail.empty()) segments.push_back(tail);
    }
    return segments;
}

std::vector<std::vector<int>> detect_repeated_action_chains(const Trajectory& t) {
    auto same_shape = [](const ActionRecord& a, const ActionRecord& b) {
        if (a.name != b.name) return false;
        if (a.args.size() != b.args.size()) return false;
        int differing = 0;
        for (auto it = a.args.begin(); it != a.args.end(); ++it) {
            auto other = b.args.find(it.key());
            if (other == b.args.end()) return false;
            if (*other != it.value()) ++differing;
        }
        return differing <= 1;
    };

    std::vector<std::vector<int>> chains;
    std::vector<int> current;
    for (const Step& step : t.steps) {
        if (step.action && !current.empty() &&
            same_shape(*t.steps[static_cast<size_t>(current.back())].action, *step.action)) {
            current.push_back(step.index);
            continue;
        }
        if (current.size() >= 3) chains.push_back(current);
        current.clear();
        if (step.action) current.push_back(step.index);
    }
    if (current.size() >= 3) chains.push_back(current);
    return chains;
}

bool has_completion_marker(const std::string& text) {
    static const std::vector<std::string> markers = {
        "task complete", "task is complete", "task completed", "completed the task",
        "mark the task complete", "marking the task complete",
    };
    std::string lower = lowercase(text);
    for (const auto& m : markers) {
        if (lower.find(m) != std::string::npos) return true;
    }
    return false;
}

Extractor::Extractor(Gateway& gateway, const Clock& clock, ExtractionConfig cfg)
    : gateway_(gateway), clock_(clock), cfg_(std::move(cfg)) {}

void Extractor::warn(const std::string& message) const {
    if (cfg_.warn) {
        cfg_.warn(message);
    } else {
        std::cerr << "[tmem] " << message << "\n";
    }
}

namespace {

struct StepSignals {
    std::set<int> completion_steps;
    std::set<int> error_steps;
};

struct RecoveryPair {
    int error_step;
    int correction_step;
};

std::vector<RecoveryPair> find_recovery_pairs(const std::vector<PatternAtStep>& patterns) {
    std::vector<int> corrections;
    std::vector<int> errors;
    for (const auto& p : patterns) {
        if (p.pattern.kind == PatternKind::error_recognition) errors.push_back(p.step_index);
        if (p.pattern.kind == PatternKind::self_correction) corrections.push_back(p.step_index);
    }
    std::sort(errors.begin(), errors.end());
    std::sort(corrections.begin(), corrections.end());
    std::vector<RecoveryPair> pairs;
    std::set<int> used;
    for (int e : errors) {
        for (int c : corrections) {
            if (c >= e && !used.count(c)) {
                pairs.push_back({e, c});
                used.insert(c);
                break;
            }
        }
    }
    return pairs;
}

std::string pattern_digest_lines(const std::vector<PatternAtStep>& patterns) {
    std::ostringstream out;
    for (const auto& p : patterns) {
        char conf[16];
        std::snprintf(conf, sizeof(conf), "%.2f", p.pattern.confidence);
        out << "step " << p.step_index << ": " << to_string(p.pattern.kind) << " (" << conf
            << ") evidence: " << p.pattern.evidence << "\n";
    }
    return out.str();
}

bool is_success_kind(OutcomeKind kind) { return kind != OutcomeKind::failure; }

} // namespace

IntermediateRepresentation Extractor::extract_intelligence(const Trajectory& t) {
    IntermediateRepresentation ir;
    ir.trajectory_id = t.id;
    ir.step_count = static_cast<int>(t.steps.size());

    StepSignals signals;

    for (const Step& step : t.steps) {
        std::vector<std::string> segments = split_into_segments(step.response);
        if (segments.empty()) continue;

        LlmRequest cat_req{Role::thought_categorizer,
                           prompts::thought_categorizer(t, step.index, segments), "thoughts.v1"};
        LlmResponse cat = gateway_.complete(cat_req);

        std::vector<Thought> thoughts;
        std::map<int, size_t> thought_by_segment;
        for (const auto& entry : cat.payload.at("thoughts")) {
            int seg = entry.at("segment").get<int>();
            if (seg < 0 || seg >= static_cast<int>(segments.size())) {
                warn("categorizer referenced unknown segment " + std::to_string(seg) +
                     " in step " + std::to_string(step.index));
                continue;
            }
            Thought th;
            th.text = segments[static_cast<size_t>(seg)];
            th.category = thought_category_from_string(entry.at("category").get<std::string>());
            thought_by_segment[seg] = thoughts.size();
            thoughts.push_back(std::move(th));
            if (auto s = entry.find("status"); s != entry.end() && s->is_string()) {
                if (*s == "completion") signals.completion_steps.insert(step.index);
                if (*s == "error") signals.error_steps.insert(step.index);
            }
        }

        LlmRequest pat_req{Role::pattern_detector,
                           prompts::pattern_detector(t, step.index, segments), "patterns.v1"};
        LlmResponse pat = gateway_.complete(pat_req);
        for (const auto& entry : pat.payload.at("patterns")) {
            CognitivePattern p;
            p.kind = pattern_kind_from_string(entry.at("kind").get<std::string>());
            p.confidence = entry.at("confidence").get<double>();
            p.evidence = entry.at("evidence").get<std::string>();
            if (step.response.find(p.evidence) == std::string::npos) {
                warn("dropping pattern with non-verbatim evidence in step " +
                     std::to_string(step.index));
                continue;
            }
            int seg = entry.at("segment").get<int>();
            PatternAtStep pas{step.index, seg, p};
            ir.patterns.push_back(pas);
            if (auto it = thought_by_segment.find(seg); it != thought_by_segment.end()) {
                thoughts[it->second].patterns.push_back(p);
            }
        }

        if (!thoughts.empty()) ir.thoughts_by_step[step.index] = std::move(thoughts);
    }

    int last_step = ir.step_count - 1;
    if (has_completion_marker(t.steps.back().response)) {
        signals.completion_steps.insert(last_step);
    }

    std::vector<RecoveryPair> pairs = find_recovery_pairs(ir.patterns);
    std::vector<std::vector<int>> chains = detect_repeated_action_chains(t);
    bool efficiency_flag = std::any_of(ir.patterns.begin(), ir.patterns.end(), [](const auto& p) {
        return p.pattern.kind == PatternKind::efficiency_awareness;
    });
    bool error_signal = !signals.error_steps.empty() ||
                        std::any_of(ir.patterns.begin(), ir.patterns.end(), [](const auto& p) {
                            return p.pattern.kind == PatternKind::error_recognition;
                        });
    bool completion_after = [&](int step) {
        for (int c : signals.completion_steps) {
            if (c >= step) return true;
        }
        return false;
    }(pairs.empty() ? 0 : pairs.front().correction_step);

    bool no_signal = signals.completion_steps.empty() && !error_signal && ir.patterns.empty();

    // Ordered inference rule; ground truth, when present, pins pass/fail.
    OutcomeKind provisional;
    if (t.evaluation_report) {
        if (!t.evaluation_report->passed) {
            provisional = OutcomeKind::failure;
        } else if (!pairs.empty()) {
            provisional = OutcomeKind::recovery_success;
        } else if (efficiency_flag || !chains.empty()) {
            provisional = OutcomeKind::inefficient_success;
        } else {
            provisional = OutcomeKind::clean_success;
        }
    } else if (!pairs.empty() && completion_after) {
        provisional = OutcomeKind::recovery_success;
    } else if (efficiency_flag || !chains.empty()) {
        provisional = OutcomeKind::inefficient_success;
    } else if (!signals.completion_steps.empty() && !error_signal) {
        provisional = OutcomeKind::clean_success;
    } else {
        provisional = OutcomeKind::failure;
    }

    std::string report_block =
        t.evaluation_report ? to_json(*t.evaluation_report).dump(2) : "absent";
    LlmRequest outcome_req{Role::outcome_interpreter,
                           prompts::outcome_interpreter(t, report_block,
                                                        pattern_digest_lines(ir.patterns),
                                                        to_string(provisional)),
                           "outcome.v1"};
    LlmResponse outcome_resp = gateway_.complete(outcome_req);
    const json& payload = outcome_resp.payload;

    OutcomeKind final_kind =
        outcome_kind_from_string(payload.at("outcome").at("kind").get<std::string>());
    std::string rationale = payload.at("outcome").value("rationale", "");
    if (t.evaluation_report && is_success_kind(final_kind) != t.evaluation_report->passed) {
        warn("outcome interpreter contradicted the ground-truth verdict; keeping the rule result");
        final_kind = provisional;
        rationale = "ground-truth evaluation verdict";
    }
    if (no_signal && !t.evaluation_report && final_kind == OutcomeKind::failure) {
        rationale = "no completion signal (low confidence)";
    }

    ir.outcome.kind = final_kind;
    ir.outcome.source =
        t.evaluation_report ? OutcomeSource::ground_truth : OutcomeSource::inferred;
    ir.outcome.rationale = rationale;
    ir.task_intent = payload.value("task_intent", t.task_description);
    if (ir.task_intent.empty()) ir.task_intent = t.task_description;

    if (final_kind != OutcomeKind::failure) {
        SuccessAnalysis analysis;
        bool from_payload = false;
        if (auto sa = payload.find("success_analysis"); sa != payload.end() && sa->is_object()) {
            std::string kind = sa->value("kind", "");
            if (kind == "clean") analysis.kind = SuccessAnalysis::Kind::clean;
            else if (kind == "inefficient") analysis.kind = SuccessAnalysis::Kind::inefficient;
            else if (kind == "recovery") analysis.kind = SuccessAnalysis::Kind::recovery;
            from_payload = !kind.empty();
            if (auto ev = sa->find("evidence"); ev != sa->end() && ev->is_array()) {
                for (const auto& node : *ev) {
                    CausalNode n = causal_node_from_json(node);
                    if (n.step_index < 0 || n.step_index >= ir.step_count) {
                        warn("dropping success evidence pointing at unknown step");
                        continue;
                    }
                    analysis.evidence.push_back(std::move(n));
                }
            }
        }
        if (!from_payload) {
            switch (final_kind) {
                case OutcomeKind::recovery_success:
                    analysis.kind = SuccessAnalysis::Kind::recovery;
                    break;
                case OutcomeKind::inefficient_success:
                    analysis.kind = SuccessAnalysis::Kind::inefficient;
                    break;
                default:
                    analysis.kind = SuccessAnalysis::Kind::clean;
                    break;
            }
        }
        if (analysis.evidence.empty()) {
            if (analysis.kind == SuccessAnalysis::Kind::recovery && !pairs.empty()) {
                analysis.evidence.push_back({pairs.front().error_step, "error recognized"});
                analysis.evidence.push_back({pairs.front().correction_step, "corrective action"});
            } else if (analysis.kind == SuccessAnalysis::Kind::inefficient && !chains.empty()) {
                analysis.evidence.push_back(
                    {chains.front().front(), "start of repeated operation sequence"});
            } else {
                analysis.evidence.push_back({0, "completed without errors"});
            }
        }
        ir.success_analysis = std::move(analysis);
    }

    if (t.evaluation_report) {
        std::vector<EvaluationDiagnosis> diags;
        if (auto ei = payload.find("evaluation_intelligence"); ei != payload.end() && ei->is_array()) {
            for (const auto& d : *ei) {
                diags.push_back({d.value("indicator", ""), d.value("diagnosis", "")});
            }
        }
        if (diags.empty()) {
            for (const auto& ind : t.evaluation_report->indicators) {
                diags.push_back({ind.name, ind.message});
            }
        }
        ir.evaluation_intelligence = std::move(diags);
    }

    return ir;
}

std::vector<OutcomeIndicator> Extractor::detect_indicators(const IntermediateRepresentation& ir,
                                                           const Trajectory& t) const {
    std::vector<OutcomeIndicator> indicators;
    int last_step = ir.step_count - 1;

    if (ir.outcome.kind == OutcomeKind::failure) {
        bool any = false;
        if (t.evaluation_report) {
            for (const auto& ind : t.evaluation_report->indicators) {
                if (ind.passed) continue;
                indicators.push_back(
                    {AttributionKind::failure, {last_step}, ind.name + ": " + ind.message});
                any = true;
            }
        }
        if (!any) {
            std::vector<int> steps{last_step};
            for (const auto& p : ir.patterns) {
                if (p.pattern.kind == PatternKind::error_recognition) steps.push_back(p.step_index);
            }
            std::sort(steps.begin(), steps.end());
            steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
            indicators.push_back({AttributionKind::failure, steps,
                                  "task did not complete: " + ir.outcome.rationale});
        }
    }

    std::vector<RecoveryPair> pairs = find_recovery_pairs(ir.patterns);
    for (const auto& pair : pairs) {
        indicators.push_back({AttributionKind::recovery,
                              {pair.error_step, pair.correction_step},
                              "error recognized at step " + std::to_string(pair.error_step) +
                                  ", corrected at step " + std::to_string(pair.correction_step)});
    }
    if (pairs.empty() && ir.success_analysis &&
        ir.success_analysis->kind == SuccessAnalysis::Kind::recovery) {
        // Interpreter-only recovery classification without a detected pattern
        // pair still gets one attribution.
        std::vector<int> steps;
        for (const auto& n : ir.success_analysis->evidence) steps.push_back(n.step_index);
        std::sort(steps.begin(), steps.end());
        if (!steps.empty()) {
            indicators.push_back(
                {AttributionKind::recovery, steps, "recovery identified by outcome analysis"});
        }
    }

    bool inefficiency_confirmed =
        ir.outcome.kind == OutcomeKind::inefficient_success ||
        (ir.success_analysis && ir.success_analysis->kind == SuccessAnalysis::Kind::inefficient);
    if (inefficiency_confirmed) {
        std::set<int> chain_steps;
        for (const auto& chain : detect_repeated_action_chains(t)) {
            const std::string& op = t.steps[static_cast<size_t>(chain.front())].action->name;
            indicators.push_back({AttributionKind::inefficiency, chain,
                                  "operation '" + op + "' repeated " +
                                      std::to_string(chain.size()) + " times consecutively"});
            chain_steps.insert(chain.begin(), chain.end());
        }
        for (const auto& p : ir.patterns) {
            if (p.pattern.kind != PatternKind::efficiency_awareness) continue;
            if (chain_steps.count(p.step_index)) continue;
            indicators.push_back({AttributionKind::inefficiency,
                                  {p.step_index},
                                  "agent noted a more efficient alternative: " +
                                      p.pattern.evidence});
        }
        bool has_inefficiency = std::any_of(indicators.begin(), indicators.end(), [](const auto& i) {
            return i.kind == AttributionKind::inefficiency;
        });
        if (!has_inefficiency && ir.success_analysis) {
            std::vector<int> steps;
            for (const auto& n : ir.success_analysis->evidence) steps.push_back(n.step_index);
            std::sort(steps.begin(), steps.end());
            if (!steps.empty()) {
                indicators.push_back({AttributionKind::inefficiency, steps,
                                      "inefficiency identified by outcome analysis"});
            }
        }
    }

    if (ir.outcome.kind == OutcomeKind::clean_success) {
        std::vector<int> steps;
        for (const auto& p : ir.patterns) {
            if (p.pattern.kind == PatternKind::validation ||
                p.pattern.kind == PatternKind::api_discovery) {
                steps.push_back(p.step_index);
            }
        }
        std::sort(steps.begin(), steps.end());
        steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
        if (steps.empty()) steps.push_back(0);
        indicators.push_back({AttributionKind::success_pattern, steps,
                              "clean completion with systematic verification"});
    }

    return indicators;
}

namespace {

std::string joined_steps(const std::vector<int>& steps) {
    std::string out;
    for (int s : steps) {
        if (!out.empty()) out += ", ";
        out += std::to_string(s);
    }
    return out;
}

CausalNode node_checked(const json& j, int step_count) {
    CausalNode n = causal_node_from_json(j);
    if (n.step_index < 0 || n.step_index >= step_count) {
        throw Error(ErrorCode::schema_violation,
                    "attribution references step " + std::to_string(n.step_index) +
                        " outside [0, " + std::to_string(step_count) + ")");
    }
    return n;
}

} // namespace

std::vector<DecisionAttribution> Extractor::attribute_decisions(
    const IntermediateRepresentation& ir, const Trajectory& t) {
    std::vector<OutcomeIndicator> indicators = detect_indicators(ir, t);
    if (indicators.empty()) {
        if (ir.outcome.kind != OutcomeKind::clean_success) {
            throw Error(ErrorCode::no_indicators,
                        "no outcome indicators detected for non-clean trajectory '" + t.id + "'");
        }
        return {};
    }

    std::vector<DecisionAttribution> out;
    for (const auto& indicator : indicators) {
        LlmRequest req{Role::attribution_analyst,
                       prompts::attribution_analyst(t, to_string(ir.outcome.kind),
                                                    ir.outcome.rationale,
                                                    to_string(indicator.kind),
                                                    joined_steps(indicator.step_indices),
                                                    indicator.summary),
                       "attribution.v1"};
        LlmResponse resp = gateway_.complete(req);
        const json& p = resp.payload;

        DecisionAttribution a;
        a.outcome_kind = indicator.kind;
        if (attribution_kind_from_string(p.at("outcome_kind").get<std::string>()) !=
            indicator.kind) {
            warn("analyst returned a different outcome kind; keeping the indicator's");
        }
        a.immediate_cause = node_checked(p.at("immediate_cause"), ir.step_count);
        a.root_cause = node_checked(p.at("root_cause"), ir.step_count);
        if (auto it = p.find("proximate_cause"); it != p.end() && it->is_object()) {
            CausalNode prox = node_checked(*it, ir.step_count);
            if (prox.step_index != a.immediate_cause.step_index) a.proximate_cause = prox;
        }
        if (a.immediate_cause.step_index == a.root_cause.step_index) a.proximate_cause.reset();
        if (auto it = p.find("contributing_factors"); it != p.end() && it->is_array()) {
            for (const auto& f : *it) a.contributing_factors.push_back(node_checked(f, ir.step_count));
        }
        if (auto it = p.find("improvement_steps"); it != p.end() && it->is_array()) {
            for (const auto& s : *it) {
                std::string step = trim(s.get<std::string>());
                if (!step.empty()) a.improvement_steps.push_back(std::move(step));
            }
        }
        if (a.improvement_steps.empty() && (indicator.kind == AttributionKind::failure ||
                                            indicator.kind == AttributionKind::inefficiency)) {
            throw Error(ErrorCode::schema_violation,
                        "analyst returned no improvement steps for a " +
                            std::string(to_string(indicator.kind)) + " indicator");
        }
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

Priority tip_priority(AttributionKind attribution, OutcomeKind outcome, bool prerequisite_critical) {
    switch (attribution) {
        case AttributionKind::failure:
            return outcome == OutcomeKind::failure ? Priority::critical : Priority::high;
        case AttributionKind::recovery:
            return Priority::high;
        case AttributionKind::success_pattern:
            return prerequisite_critical ? Priority::high : Priority::medium;
        case AttributionKind::inefficiency:
            return Priority::medium;
    }
    return Priority::medium;
}

} // namespace

std::vector<Tip> Extractor::generate_task_tips(const IntermediateRepresentation& ir,
                                               const std::vector<DecisionAttribution>& attributions,
                                               const Trajectory& t) {
    std::vector<Tip> tips;
    std::string source_outcome =
        std::string(to_string(ir.outcome.kind)) + ": " + ir.outcome.rationale;
    Embedding task_embedding = gateway_.embed(t.task_description);

    for (const auto& attribution : attributions) {
        LlmRequest req{Role::tip_generator,
                       prompts::tip_generator(t, to_string(ir.outcome.kind), ir.outcome.rationale,
                                              to_json(attribution)),
                       "tips.v1"};
        LlmResponse resp = gateway_.complete(req);
        const json& specs = resp.payload.at("tips");
        if (specs.empty()) {
            warn("tip generator returned no tips for a " +
                 std::string(to_string(attribution.outcome_kind)) + " attribution in '" + t.id +
                 "'");
            continue;
        }
        TipCategory category = category_for(attribution.outcome_kind);
        size_t limit = std::min<size_t>(specs.size(), 3);
        for (size_t i = 0; i < limit; ++i) {
            const json& spec = specs[i];
            bool prerequisite_critical = spec.value("prerequisite_critical", false);
            Priority priority = tip_priority(attribution.outcome_kind, ir.outcome.kind,
                                             prerequisite_critical);

            Tip tip;
            tip.category = category;
            tip.content = spec.at("content").get<std::string>();
            tip.purpose = spec.value("purpose", "");
            for (const auto& s : spec.at("steps")) tip.steps.push_back(s.get<std::string>());
            tip.trigger = spec.value("trigger", "");
            tip.negative_example = optional_string(spec, "negative_example");
            tip.application_context = optional_string(spec, "application_context");
            tip.task_category = optional_string(spec, "task_category");
            tip.priority = priority;
            tip.granularity = Granularity::task;
            tip.source_trajectory_ids = {t.id};
            tip.source_outcome = source_outcome;
            tip.embedding = gateway_.embed(tip.content + "\n" + tip.purpose);
            tip.index_description = t.task_description;
            tip.index_embedding = task_embedding;
            tip.created_at = clock_.now();
            tip.id = tip_id({t.id, "task", to_string(category), tip.content,
                             tip.application_context.value_or("")});
            tips.push_back(tip);

            if (auto gv = spec.find("generic_variant"); gv != spec.end() && gv->is_object()) {
                Tip generic = tip;
                generic.content = gv->at("content").get<std::string>();
                generic.purpose = gv->value("purpose", "");
                generic.steps.clear();
                for (const auto& s : gv->at("steps")) generic.steps.push_back(s.get<std::string>());
                generic.trigger = gv->value("trigger", "");
                generic.negative_example = optional_string(*gv, "negative_example");
                generic.application_context.reset();
                generic.task_category.reset();
                generic.embedding = gateway_.embed(generic.content + "\n" + generic.purpose);
                generic.id = tip_id({t.id, "task-generic", to_string(category), generic.content});
                tips.push_back(std::move(generic));
            }
        }
    }
    return tips;
}

std::vector<Subtask> clip_subtask_ranges(std::vector<Subtask> subtasks, int step_count,
                                         const std::function<void(const std::string&)>& warn) {
    std::vector<Subtask> bounded;
    bool clipped = false;
    for (Subtask& s : subtasks) {
        int start = std::max(s.start_step, 0);
        int end = std::min(s.end_step, step_count - 1);
        if (start != s.start_step || end != s.end_step) clipped = true;
        if (start > end) {
            clipped = true;
            continue;
        }
        s.start_step = start;
        s.end_step = end;
        bounded.push_back(std::move(s));
    }
    std::stable_sort(bounded.begin(), bounded.end(), [](const Subtask& a, const Subtask& b) {
        if (a.start_step != b.start_step) return a.start_step < b.start_step;
        return a.end_step < b.end_step;
    });
    std::vector<Subtask> out;
    int prev_end = -1;
    for (Subtask& s : bounded) {
        if (s.start_step <= prev_end) {
            clipped = true;
            s.start_step = prev_end + 1;
            if (s.start_step > s.end_step) continue;
        }
        prev_end = s.end_step;
        out.push_back(std::move(s));
    }
    if (clipped && warn) {
        warn("segmenter returned out-of-bounds or overlapping ranges; clipped to non-overlap");
    }
    return out;
}

std::vector<Subtask> Extractor::segment_subtasks(const Trajectory& t) {
    LlmRequest req{Role::segmenter, prompts::segmenter(t), "subtasks.v1"};
    LlmResponse resp = gateway_.complete(req);

    std::vector<Subtask> subtasks;
    for (const auto& spec : resp.payload.at("subtasks")) {
        Subtask s = subtask_from_json(spec);
        s.generalized = false;
        subtasks.push_back(std::move(s));
    }
    if (subtasks.empty()) {
        warn("segmenter returned no subtasks for '" + t.id +
             "'; falling back to a single span covering all steps");
        Subtask whole;
        whole.description = "Complete the requested task";
        whole.apps = t.app_hints;
        whole.start_step = 0;
        whole.end_step = static_cast<int>(t.steps.size()) - 1;
        whole.purpose = t.task_description;
        return {whole};
    }
    auto warn_fn = [this](const std::string& m) { warn(m); };
    return clip_subtask_ranges(std::move(subtasks), static_cast<int>(t.steps.size()), warn_fn);
}

std::vector<Tip> Extractor::generate_subtask_tips(const Trajectory& t,
                                                  const std::vector<Subtask>& subtasks) {
    std::string source_outcome = "unknown: no evaluation report";
    if (t.evaluation_report) {
        source_outcome = t.evaluation_report->passed ? "success: evaluation passed"
                                                     : "failure: evaluation failed";
    }

    std::vector<Tip> tips;
    for (const Subtask& subtask : subtasks) {
        LlmRequest req{Role::subtask_tipper, prompts::subtask_tipper(t, subtask),
                       "subtask_tips.v1"};
        LlmResponse resp = gateway_.complete(req);
        const json& specs = resp.payload.at("tips");
        if (specs.empty()) {
            warn("no tips for subtask '" + subtask.description + "' of '" + t.id + "'");
            continue;
        }
        if (static_cast<int>(specs.size()) > cfg_.max_tips_per_subtask) {
            warn("subtask tipper returned more than " +
                 std::to_string(cfg_.max_tips_per_subtask) + " tips; keeping the first " +
                 std::to_string(cfg_.max_tips_per_subtask));
        }
        Embedding index_embedding = gateway_.embed(subtask.description);
        size_t limit = std::min<size_t>(specs.size(),
                                        static_cast<size_t>(cfg_.max_tips_per_subtask));
        for (size_t i = 0; i < limit; ++i) {
            const json& spec = specs[i];
            Tip tip;
            tip.category = tip_category_from_string(spec.value("category", "strategy"));
            tip.content = spec.at("content").get<std::string>();
            tip.purpose = spec.value("purpose", "");
            for (const auto& s : spec.at("steps")) tip.steps.push_back(s.get<std::string>());
            tip.trigger = spec.value("trigger", "");
            tip.negative_example = optional_string(spec, "negative_example");
            tip.application_context = optional_string(spec, "application_context");
            tip.task_category = optional_string(spec, "task_category");
            tip.priority = spec.contains("priority") && spec["priority"].is_string()
                               ? priority_from_string(spec["priority"].get<std::string>())
                               : Priority::medium;
            tip.granularity = Granularity::subtask;
            tip.subtask_description = subtask.description;
            tip.source_trajectory_ids = {t.id};
            tip.source_outcome = source_outcome;
            tip.embedding = gateway_.embed(tip.content + "\n" + tip.purpose);
            tip.index_description = subtask.description;
            tip.index_embedding = index_embedding;
            tip.created_at = clock_.now();
            tip.id = tip_id({t.id, "subtask", subtask.description, tip.content});
            tips.push_back(std::move(tip));
        }
    }
    return tips;
}

} // namespace tmem
