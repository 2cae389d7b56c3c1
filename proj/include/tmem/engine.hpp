#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "tmem/clock.hpp"
#include "tmem/curation.hpp"
#include "tmem/extraction.hpp"
#include "tmem/gateway.hpp"
#include "tmem/retrieval.hpp"
#include "tmem/store.hpp"

namespace tmem {

enum class ExtractMode { none, task, subtask, both };

ExtractMode extract_mode_from_string(const std::string& s);
const char* to_string(ExtractMode m);

struct EngineConfig {
    int step_cap = kDefaultStepCap;
    double consolidation_threshold = 0.85;
    bool consolidate_task_level = true;
    RetrievalConfig retrieval; // defaults: cosine, tau 0.6, k 5
    std::function<void(const std::string&)> warn;
};

struct PutResult {
    std::string id;
    std::uint64_t revision = 0;
};

struct ExtractSummary {
    std::string trajectory_id;
    int task_tips = 0;
    int subtask_tips = 0;
    int subtasks = 0;
    std::uint64_t revision = 0;
    std::vector<std::string> tip_ids;
};

nlohmann::json to_json(const ExtractSummary& summary);

// One object owning the store, gateway and pipeline configuration; the CLI,
// the HTTP service and the Python bindings all sit on top of this.
class Engine {
public:
    Engine(Store store, std::shared_ptr<Gateway> gateway, std::shared_ptr<Clock> clock,
           EngineConfig cfg = {});

    // Validates and stores one trajectory document. Missing ids get a
    // content-derived "traj-<hash>" id; missing created_at gets the clock.
    PutResult put_trajectory_doc(const nlohmann::json& doc);

    // Runs Phase 1 for a stored trajectory and persists the tips.
    ExtractSummary extract_tips(const std::string& trajectory_id, ExtractMode mode);

    ConsolidationReport consolidate(std::optional<double> threshold = std::nullopt);

    RetrievalResult retrieve(const std::string& task_description, const RetrievalConfig& cfg);
    RetrievalResult retrieve_with_defaults(const std::string& task_description,
                                           std::optional<RetrievalStrategy> strategy,
                                           std::optional<double> tau, std::optional<int> k);

    nlohmann::json stats() const;
    nlohmann::json tip_as_json(const std::string& tip_id) const; // throws invalid_field if absent
    nlohmann::json list_tips(const MetadataFilter& filter) const;
    void export_tips_jsonl(std::ostream& out) const;

    Store& store() { return store_; }
    const Store& store() const { return store_; }
    Gateway& gateway() { return *gateway_; }
    const Clock& clock() const { return *clock_; }
    const EngineConfig& config() const { return cfg_; }

private:
    Store store_;
    std::shared_ptr<Gateway> gateway_;
    std::shared_ptr<Clock> clock_;
    EngineConfig cfg_;
};

} // namespace tmem
