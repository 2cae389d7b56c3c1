#include "tmem/engine.hpp"

#include "tmem/errors.hpp"
#include "tmem/ids.hpp"
#include "tmem/json_io.hpp"

namespace tmem {

ExtractMode extract_mode_from_string(const std::string& s) {
    if (s == "none" || s.empty()) return ExtractMode::none;
    if (s == "task") return ExtractMode::task;
    if (s == "subtask") return ExtractMode::subtask;
    if (s == "both") return ExtractMode::both;
    throw Error(ErrorCode::invalid_field, "unknown extract mode '" + s + "'");
}

const char* to_string(ExtractMode m) {
    switch (m) {
        case ExtractMode::none: return "none";
        case ExtractMode::task: return "task";
        case ExtractMode::subtask: return "subtask";
        case ExtractMode::both: return "both";
    }
    return "none";
}

nlohmann::json to_json(const ExtractSummary& summary) {
    return nlohmann::json{{"trajectory_id", summary.trajectory_id},
                          {"task_tips", summary.task_tips},
                          {"subtask_tips", summary.subtask_tips},
                          {"subtasks", summary.subtasks},
                          {"revision", summary.revision},
                          {"tip_ids", summary.tip_ids}};
}

Engine::Engine(Store store, std::shared_ptr<Gateway> gateway, std::shared_ptr<Clock> clock,
               EngineConfig cfg)
    : store_(std::move(store)), gateway_(std::move(gateway)), clock_(std::move(clock)),
      cfg_(std::move(cfg)) {
    if (!gateway_ || !clock_) {
        throw Error(ErrorCode::invalid_field, "engine needs a gateway and a clock");
    }
}

PutResult Engine::put_trajectory_doc(const nlohmann::json& doc) {
    Trajectory t = trajectory_from_json(doc);
    if (t.id.empty()) t.id = "traj-" + sha256_hex(doc.dump()).substr(0, 12);
    if (t.created_at == 0) t.created_at = clock_->now();
    t = validate_trajectory(std::move(t), cfg_.step_cap);
    std::uint64_t revision = store_.put_trajectory(t);
    return {t.id, revision};
}

ExtractSummary Engine::extract_tips(const std::string& trajectory_id, ExtractMode mode) {
    auto snap = store_.snapshot();
    auto it = snap->trajectories.find(trajectory_id);
    if (it == snap->trajectories.end()) {
        throw Error(ErrorCode::invalid_field, "unknown trajectory '" + trajectory_id + "'");
    }
    const Trajectory& t = it->second;

    ExtractSummary summary;
    summary.trajectory_id = trajectory_id;
    summary.revision = snap->revision;
    if (mode == ExtractMode::none) return summary;

    ExtractionConfig xcfg;
    xcfg.warn = cfg_.warn;
    Extractor extractor(*gateway_, *clock_, xcfg);

    std::vector<Tip> tips;
    if (mode == ExtractMode::task || mode == ExtractMode::both) {
        IntermediateRepresentation ir = extractor.extract_intelligence(t);
        std::vector<DecisionAttribution> attributions = extractor.attribute_decisions(ir, t);
        std::vector<Tip> task_tips = extractor.generate_task_tips(ir, attributions, t);
        summary.task_tips = static_cast<int>(task_tips.size());
        tips.insert(tips.end(), task_tips.begin(), task_tips.end());
    }
    if (mode == ExtractMode::subtask || mode == ExtractMode::both) {
        std::vector<Subtask> subtasks = extractor.segment_subtasks(t);
        summary.subtasks = static_cast<int>(subtasks.size());
        std::vector<Tip> subtask_tips = extractor.generate_subtask_tips(t, subtasks);
        summary.subtask_tips = static_cast<int>(subtask_tips.size());
        tips.insert(tips.end(), subtask_tips.begin(), subtask_tips.end());
    }
    for (const Tip& tip : tips) summary.tip_ids.push_back(tip.id);
    if (!tips.empty()) {
        summary.revision = store_.put_tips(tips);
    }
    return summary;
}

ConsolidationReport Engine::consolidate(std::optional<double> threshold) {
    CurationConfig cfg;
    cfg.threshold = threshold.value_or(cfg_.consolidation_threshold);
    cfg.consolidate_task_level = cfg_.consolidate_task_level;
    cfg.warn = cfg_.warn;
    return run_consolidation(store_, *gateway_, *clock_, cfg);
}

RetrievalResult Engine::retrieve(const std::string& task_description, const RetrievalConfig& cfg) {
    auto snap = store_.snapshot();
    return tmem::retrieve(*snap, *gateway_, task_description, cfg);
}

RetrievalResult Engine::retrieve_with_defaults(const std::string& task_description,
                                               std::optional<RetrievalStrategy> strategy,
                                               std::optional<double> tau, std::optional<int> k) {
    RetrievalConfig cfg = cfg_.retrieval;
    if (strategy) cfg.strategy = *strategy;
    if (tau) cfg.tau = *tau;
    if (k) cfg.k = *k;
    return retrieve(task_description, cfg);
}

nlohmann::json Engine::stats() const {
    auto snap = store_.snapshot();
    nlohmann::json by_category{{"strategy", 0}, {"recovery", 0}, {"optimization", 0}};
    nlohmann::json by_priority{{"critical", 0}, {"high", 0}, {"medium", 0}, {"low", 0}};
    nlohmann::json by_granularity{{"task", 0}, {"subtask", 0}};
    int generic = 0;
    for (const auto& [id, tip] : snap->tips) {
        by_category[to_string(tip.category)] = by_category[to_string(tip.category)].get<int>() + 1;
        by_priority[to_string(tip.priority)] = by_priority[to_string(tip.priority)].get<int>() + 1;
        by_granularity[to_string(tip.granularity)] =
            by_granularity[to_string(tip.granularity)].get<int>() + 1;
        if (!tip.application_context) ++generic;
    }
    return nlohmann::json{{"revision", snap->revision},
                          {"embed_dim", snap->embed_dim},
                          {"trajectories", snap->trajectories.size()},
                          {"tips", snap->tips.size()},
                          {"clusters", snap->clusters.size()},
                          {"generic_tips", generic},
                          {"by_category", by_category},
                          {"by_priority", by_priority},
                          {"by_granularity", by_granularity}};
}

nlohmann::json Engine::tip_as_json(const std::string& tip_id) const {
    auto snap = store_.snapshot();
    auto it = snap->tips.find(tip_id);
    if (it == snap->tips.end()) {
        throw Error(ErrorCode::invalid_field, "unknown tip '" + tip_id + "'");
    }
    return to_json(it->second);
}

nlohmann::json Engine::list_tips(const MetadataFilter& filter) const {
    auto snap = store_.snapshot();
    nlohmann::json out = nlohmann::json::array();
    for (const auto& ref : query_state(*snap, filter, std::nullopt)) {
        out.push_back(to_json(*ref.tip));
    }
    return out;
}

void Engine::export_tips_jsonl(std::ostream& out) const {
    auto snap = store_.snapshot();
    for (const auto& [id, tip] : snap->tips) {
        out << to_json(tip).dump() << "\n";
    }
}

} // namespace tmem
