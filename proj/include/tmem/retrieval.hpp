#pragma once

#include <set>
#include <string>
#include <vector>

#include "tmem/gateway.hpp"
#include "tmem/store.hpp"
#include "tmem/types.hpp"

namespace tmem {

enum class RetrievalStrategy { cosine, llm_guided };

const char* to_string(RetrievalStrategy s);
RetrievalStrategy retrieval_strategy_from_string(const std::string& s);

struct RetrievalConfig {
    RetrievalStrategy strategy = RetrievalStrategy::cosine;
    double tau = 0.6;
    int k = 5;
    std::set<Granularity> granularities = {Granularity::task, Granularity::subtask};
    // tau also floors llm_guided candidates unless disabled.
    bool tau_floor_for_llm_guided = true;
};

void validate_retrieval_config(const RetrievalConfig& cfg);

struct ScoredTip {
    Tip tip;
    double score = 0.0;
    std::string matched_description;
};

struct RetrievalResult {
    std::vector<ScoredTip> tips; // scores descending, |tips| <= k
    std::string strategy_used;
    std::string query_text;
    std::vector<std::string> warnings;
};

// Embeds the task description, scores every candidate tip against its index
// description embedding, keeps scores >= tau, sorts descending with ascending
// tip-id tie-break, truncates to k.
RetrievalResult retrieve_cosine(const StoreState& state, Gateway& gateway,
                                const std::string& task_description, const RetrievalConfig& cfg);

// One retrieval_selector call infers metadata filters and category
// preferences; candidates are filtered, scored by cosine, ordered by
// (category preference, score desc, id asc) and truncated to k. Gateway
// failures fall back to retrieve_cosine with a warning in the result.
RetrievalResult retrieve_llm_guided(const StoreState& state, Gateway& gateway,
                                    const std::string& task_description,
                                    const RetrievalConfig& cfg);

RetrievalResult retrieve(const StoreState& state, Gateway& gateway,
                         const std::string& task_description, const RetrievalConfig& cfg);

// Deterministic guidelines section for prompt injection. One block per tip:
//   [PRIORITY: HIGH] Recovery Tip:
//   <content>
//
//   Apply when: <trigger>
//   Steps:
//   1. <step>
//   Avoid: <negative example>     (only when present)
// Blocks are separated by one blank line; an empty result renders as "".
std::string render_guidelines(const RetrievalResult& result);

nlohmann::json to_json(const RetrievalResult& result);

} // namespace tmem
