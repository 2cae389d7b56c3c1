#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmem/types.hpp"

// Prompt builders for every gateway role. Templates live under
// assets/prompts/ and are embedded at build time; placeholders are documented
// in docs/prompts.md. Builders are pure functions of their inputs so the
// scripted provider's prompt hashes stay stable.

namespace tmem::prompts {

using nlohmann::json;

std::string substitute(std::string tmpl, const std::vector<std::pair<std::string, std::string>>& vars);

// "0: <text>" per line.
std::string numbered_segments(const std::vector<std::string>& segments);

// Compact per-step digest used by analyst/segmenter prompts.
std::string steps_digest(const Trajectory& t, int start_step, int end_step);

// Tip JSON without the embedding vectors, for consolidator prompts.
json tip_digest(const Tip& tip);

std::string thought_categorizer(const Trajectory& t, int step_index,
                                const std::vector<std::string>& segments);
std::string pattern_detector(const Trajectory& t, int step_index,
                             const std::vector<std::string>& segments);
std::string outcome_interpreter(const Trajectory& t, const std::string& evaluation_report_block,
                                const std::string& pattern_digest, const std::string& provisional);
std::string attribution_analyst(const Trajectory& t, const std::string& outcome_kind,
                                const std::string& outcome_rationale,
                                const std::string& indicator_kind,
                                const std::string& indicator_steps,
                                const std::string& indicator_summary);
std::string tip_generator(const Trajectory& t, const std::string& outcome_kind,
                          const std::string& outcome_rationale, const json& attribution);
std::string segmenter(const Trajectory& t);
std::string subtask_tipper(const Trajectory& t, const Subtask& subtask);
std::string generalizer(const std::string& description,
                        const std::vector<std::string>& app_names);
std::string consolidator(const std::string& cluster_id, Granularity granularity,
                         const std::vector<Tip>& members);
std::string retrieval_selector(const std::string& task_description,
                               const std::vector<std::string>& contexts,
                               const std::vector<std::string>& task_categories);

} // namespace tmem::prompts
