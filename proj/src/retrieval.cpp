#include "tmem/retrieval.hpp"

#include <algorithm>
#include <sstream>

#include "tmem/errors.hpp"
#include "tmem/json_io.hpp"
#include "tmem/prompts.hpp"

namespace tmem {

const char* to_string(RetrievalStrategy s) {
    return s == RetrievalStrategy::cosine ? "cosine" : "llm_guided";
}

RetrievalStrategy retrieval_strategy_from_string(const std::string& s) {
    if (s == "cosine") return RetrievalStrategy::cosine;
    if (s == "llm_guided" || s == "llm") return RetrievalStrategy::llm_guided;
    throw Error(ErrorCode::invalid_field, "unknown retrieval strategy '" + s + "'");
}

void validate_retrieval_config(const RetrievalConfig& cfg) {
    if (!(cfg.tau > 0.0) || cfg.tau > 1.0) {
        throw Error(ErrorCode::invalid_threshold,
                    "tau must be in (0, 1], got " + std::to_string(cfg.tau));
    }
    if (cfg.k < 1) {
        throw Error(ErrorCode::invalid_field, "k must be >= 1, got " + std::to_string(cfg.k));
    }
    if (cfg.granularities.empty()) {
        throw Error(ErrorCode::invalid_field, "at least one granularity must be enabled");
    }
}

namespace {

std::string trimmed(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

void sort_and_truncate(std::vector<ScoredTip>& tips, int k) {
    std::stable_sort(tips.begin(), tips.end(), [](const ScoredTip& a, const ScoredTip& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tip.id < b.tip.id;
    });
    if (static_cast<int>(tips.size()) > k) tips.resize(static_cast<size_t>(k));
}

} // namespace

RetrievalResult retrieve_cosine(const StoreState& state, Gateway& gateway,
                                const std::string& task_description, const RetrievalConfig& cfg) {
    validate_retrieval_config(cfg);
    std::string query = trimmed(task_description);
    if (query.empty()) throw Error(ErrorCode::empty_query, "task description is empty");

    Embedding query_embedding = gateway.embed(query);
    RetrievalResult result;
    result.query_text = query;
    result.strategy_used = "cosine";
    for (const auto& [id, tip] : state.tips) {
        if (!cfg.granularities.count(tip.granularity)) continue;
        double score = cosine(query_embedding, tip.index_embedding);
        if (score < cfg.tau) continue;
        result.tips.push_back({tip, score, tip.index_description});
    }
    sort_and_truncate(result.tips, cfg.k);
    return result;
}

RetrievalResult retrieve_llm_guided(const StoreState& state, Gateway& gateway,
                                    const std::string& task_description,
                                    const RetrievalConfig& cfg) {
    validate_retrieval_config(cfg);
    std::string query = trimmed(task_description);
    if (query.empty()) throw Error(ErrorCode::empty_query, "task description is empty");

    std::set<std::string> contexts, categories;
    for (const auto& [id, tip] : state.tips) {
        if (tip.application_context) contexts.insert(*tip.application_context);
        if (tip.task_category) categories.insert(*tip.task_category);
    }

    json payload;
    try {
        LlmRequest req{Role::retrieval_selector,
                       prompts::retrieval_selector(
                           query, {contexts.begin(), contexts.end()},
                           {categories.begin(), categories.end()}),
                       "retrieval_query.v1"};
        payload = gateway.complete(req).payload;
    } catch (const Error& e) {
        if (!is_gateway_error(e.code())) throw;
        RetrievalResult fallback = retrieve_cosine(state, gateway, task_description, cfg);
        fallback.strategy_used = "cosine_fallback";
        fallback.warnings.push_back(std::string("llm_guided selector unavailable (") + e.what() +
                                    "); fell back to cosine retrieval");
        return fallback;
    }

    MetadataFilter filter;
    filter.application_context = optional_string(payload, "application_context");
    filter.task_category = optional_string(payload, "task_category");
    std::vector<TipCategory> preferred;
    for (const auto& c : payload.at("preferred_categories")) {
        preferred.push_back(tip_category_from_string(c.get<std::string>()));
    }
    auto category_rank = [&](TipCategory c) {
        for (size_t i = 0; i < preferred.size(); ++i) {
            if (preferred[i] == c) return i;
        }
        return preferred.size();
    };

    Embedding query_embedding = gateway.embed(query);
    RetrievalResult result;
    result.query_text = query;
    result.strategy_used = "llm_guided";
    for (const auto& [id, tip] : state.tips) {
        if (!cfg.granularities.count(tip.granularity)) continue;
        if (!matches_filter(tip, filter)) continue;
        double score = cosine(query_embedding, tip.index_embedding);
        if (cfg.tau_floor_for_llm_guided && score < cfg.tau) continue;
        result.tips.push_back({tip, score, tip.index_description});
    }
    std::stable_sort(result.tips.begin(), result.tips.end(),
                     [&](const ScoredTip& a, const ScoredTip& b) {
                         size_t ra = category_rank(a.tip.category);
                         size_t rb = category_rank(b.tip.category);
                         if (ra != rb) return ra < rb;
                         if (a.score != b.score) return a.score > b.score;
                         return a.tip.id < b.tip.id;
                     });
    if (static_cast<int>(result.tips.size()) > cfg.k) {
        result.tips.resize(static_cast<size_t>(cfg.k));
    }
    return result;
}

RetrievalResult retrieve(const StoreState& state, Gateway& gateway,
                         const std::string& task_description, const RetrievalConfig& cfg) {
    return cfg.strategy == RetrievalStrategy::cosine
               ? retrieve_cosine(state, gateway, task_description, cfg)
               : retrieve_llm_guided(state, gateway, task_description, cfg);
}

namespace {

std::string category_label(TipCategory c) {
    switch (c) {
        case TipCategory::strategy: return "Strategy";
        case TipCategory::recovery: return "Recovery";
        case TipCategory::optimization: return "Optimization";
    }
    return "Strategy";
}

std::string priority_label(Priority p) {
    std::string s = to_string(p);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

std::string render_guidelines(const RetrievalResult& result) {
    std::vector<std::string> blocks;
    for (const ScoredTip& scored : result.tips) {
        const Tip& tip = scored.tip;
        std::ostringstream block;
        block << "[PRIORITY: " << priority_label(tip.priority) << "] "
              << category_label(tip.category) << " Tip:\n";
        block << tip.content << "\n";
        block << "\n";
        block << "Apply when: " << tip.trigger << "\n";
        block << "Steps:\n";
        for (size_t i = 0; i < tip.steps.size(); ++i) {
            block << (i + 1) << ". " << tip.steps[i] << "\n";
        }
        if (tip.negative_example) {
            block << "Avoid: " << *tip.negative_example << "\n";
        }
        blocks.push_back(block.str());
    }
    std::string out;
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += "\n";
        out += blocks[i];
    }
    return out;
}

nlohmann::json to_json(const RetrievalResult& result) {
    json tips = json::array();
    for (const ScoredTip& s : result.tips) {
        tips.push_back(json{{"tip", to_json(s.tip)},
                            {"score", s.score},
                            {"matched_description", s.matched_description}});
    }
    return json{{"query_text", result.query_text},
                {"strategy_used", result.strategy_used},
                {"warnings", result.warnings},
                {"tips", tips}};
}

} // namespace tmem
