#include "tmem/prompts.hpp"

#include <sstream>

#include "tmem/json_io.hpp"
#include "tmem/prompts_data.hpp"

namespace tmem::prompts {

std::string substitute(std::string tmpl,
                       const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [key, value] : vars) {
        std::string needle = "{{" + key + "}}";
        size_t pos = 0;
        while ((pos = tmpl.find(needle, pos)) != std::string::npos) {
            tmpl.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return tmpl;
}

std::string numbered_segments(const std::vector<std::string>& segments) {
    std::ostringstream out;
    for (size_t i = 0; i < segments.size(); ++i) {
        out << i << ": " << segments[i] << "\n";
    }
    return out.str();
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::string truncate(const std::string& s, size_t limit) {
    if (s.size() <= limit) return s;
    return s.substr(0, limit) + "...";
}

std::string app_hints_line(const Trajectory& t) {
    std::string out;
    for (const auto& a : t.app_hints) {
        if (!out.empty()) out += ", ";
        out += a;
    }
    return out.empty() ? "(none)" : out;
}

} // namespace

std::string steps_digest(const Trajectory& t, int start_step, int end_step) {
    std::ostringstream out;
    for (int i = start_step; i <= end_step && i < static_cast<int>(t.steps.size()); ++i) {
        const Step& s = t.steps[static_cast<size_t>(i)];
        out << "## step " << s.index << "\n";
        out << "response: " << truncate(s.response, 600) << "\n";
        if (s.action) {
            out << "action: " << s.action->name << " " << s.action->args.dump() << "\n";
        }
        if (s.action_result) {
            out << "result: " << truncate(*s.action_result, 300) << "\n";
        }
    }
    return out.str();
}

json tip_digest(const Tip& tip) {
    json j = to_json(tip);
    j.erase("embedding");
    j.erase("index_embedding");
    return j;
}

std::string thought_categorizer(const Trajectory& t, int step_index,
                                const std::vector<std::string>& segments) {
    return substitute(prompt_text::k_thought_categorizer,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"step_index", std::to_string(step_index)},
                       {"segments", numbered_segments(segments)}});
}

std::string pattern_detector(const Trajectory& t, int step_index,
                             const std::vector<std::string>& segments) {
    return substitute(prompt_text::k_pattern_detector,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"step_index", std::to_string(step_index)},
                       {"response", t.steps[static_cast<size_t>(step_index)].response},
                       {"segments", numbered_segments(segments)}});
}

std::string outcome_interpreter(const Trajectory& t, const std::string& evaluation_report_block,
                                const std::string& pattern_digest, const std::string& provisional) {
    return substitute(prompt_text::k_outcome_interpreter,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"step_count", std::to_string(t.steps.size())},
                       {"evaluation_report", evaluation_report_block},
                       {"patterns", pattern_digest.empty() ? "(none)" : pattern_digest},
                       {"provisional", provisional}});
}

std::string attribution_analyst(const Trajectory& t, const std::string& outcome_kind,
                                const std::string& outcome_rationale,
                                const std::string& indicator_kind,
                                const std::string& indicator_steps,
                                const std::string& indicator_summary) {
    return substitute(prompt_text::k_attribution_analyst,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"outcome_kind", outcome_kind},
                       {"outcome_rationale", outcome_rationale},
                       {"indicator_kind", indicator_kind},
                       {"indicator_steps", indicator_steps},
                       {"indicator_summary", indicator_summary},
                       {"steps_digest",
                        steps_digest(t, 0, static_cast<int>(t.steps.size()) - 1)}});
}

std::string tip_generator(const Trajectory& t, const std::string& outcome_kind,
                          const std::string& outcome_rationale, const json& attribution) {
    return substitute(prompt_text::k_tip_generator,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"app_hints", app_hints_line(t)},
                       {"outcome_kind", outcome_kind},
                       {"outcome_rationale", outcome_rationale},
                       {"attribution_json", attribution.dump(2)}});
}

std::string segmenter(const Trajectory& t) {
    return substitute(prompt_text::k_segmenter,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"app_hints", app_hints_line(t)},
                       {"step_count", std::to_string(t.steps.size())},
                       {"steps_digest",
                        steps_digest(t, 0, static_cast<int>(t.steps.size()) - 1)}});
}

std::string subtask_tipper(const Trajectory& t, const Subtask& subtask) {
    std::vector<std::string> apps(subtask.apps.begin(), subtask.apps.end());
    return substitute(prompt_text::k_subtask_tipper,
                      {{"trajectory_id", t.id},
                       {"task_description", t.task_description},
                       {"subtask_description", subtask.description},
                       {"subtask_purpose", subtask.purpose},
                       {"subtask_apps", apps.empty() ? "(none)" : join(apps, ", ")},
                       {"start_step", std::to_string(subtask.start_step)},
                       {"end_step", std::to_string(subtask.end_step)},
                       {"steps_digest", steps_digest(t, subtask.start_step, subtask.end_step)}});
}

std::string generalizer(const std::string& description,
                        const std::vector<std::string>& app_names) {
    return substitute(prompt_text::k_generalizer,
                      {{"description", description},
                       {"app_names", app_names.empty() ? "(none)" : join(app_names, ", ")}});
}

std::string consolidator(const std::string& cluster_id, Granularity granularity,
                         const std::vector<Tip>& members) {
    json digest = json::array();
    for (const Tip& m : members) digest.push_back(tip_digest(m));
    return substitute(prompt_text::k_consolidator,
                      {{"cluster_id", cluster_id},
                       {"granularity", to_string(granularity)},
                       {"members_json", digest.dump(2)}});
}

std::string retrieval_selector(const std::string& task_description,
                               const std::vector<std::string>& contexts,
                               const std::vector<std::string>& task_categories) {
    return substitute(prompt_text::k_retrieval_selector,
                      {{"task_description", task_description},
                       {"contexts", contexts.empty() ? "(none)" : join(contexts, ", ")},
                       {"task_categories",
                        task_categories.empty() ? "(none)" : join(task_categories, ", ")}});
}

} // namespace tmem::prompts
