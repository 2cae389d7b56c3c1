#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmem/clock.hpp"
#include "tmem/gateway.hpp"
#include "tmem/store.hpp"
#include "tmem/types.hpp"

namespace tmem {

// App names harvested from trajectory app_hints plus pattern checks for
// emails and user/item identifiers; used to verify generalized descriptions
// without an LLM.
struct EntityLexicon {
    std::set<std::string> app_names; // lowercased

    // Returns a description of the first violation, if any: a lexicon entity,
    // an email address, an identifier-like token, a non-canonical verb or a
    // purpose clause.
    std::optional<std::string> check_generalized(const std::string& text) const;
};

EntityLexicon build_lexicon(const StoreState& state);

// Mechanical generalization fallback: entity scrub, verb canonicalization,
// purpose-clause removal. Idempotent.
std::string scrub_description(const std::string& text, const EntityLexicon& lexicon);

// LLM rewrite with deterministic post-checks; re-prompts once on violation,
// then falls back to the mechanical scrub.
std::string generalize_description(Gateway& gateway, const std::string& description,
                                   const EntityLexicon& lexicon,
                                   const std::function<void(const std::string&)>& warn = {});

// Average-linkage agglomerative clustering on cosine similarity of the tips'
// index-description embeddings. Merging stops when no pair of clusters
// reaches the threshold; equal-similarity ties merge the pair with the
// lexicographically smallest (id, id). Tips of different granularities never
// share a cluster.
std::vector<Cluster> cluster_tips(const std::vector<Tip>& tips, double threshold);

// Precedence for conflicting guidance: source success over failure, recovery
// category over others, higher priority, newer created_at, smaller id.
bool tip_beats(const Tip& a, const Tip& b);

struct ClusterConsolidation {
    std::string canonical_description;
    std::vector<Tip> merged;
    int conflicts_resolved = 0;
};

ClusterConsolidation consolidate_cluster(Gateway& gateway, const Clock& clock, const Cluster& c,
                                         const std::vector<Tip>& members,
                                         const EntityLexicon& lexicon,
                                         const std::function<void(const std::string&)>& warn = {});

struct CurationConfig {
    double threshold = 0.85;
    bool consolidate_task_level = true;
    std::function<void(const std::string&)> warn;
};

struct ConsolidationReport {
    std::uint64_t revision_before = 0;
    std::uint64_t revision_after = 0;
    int tips_before = 0;
    int tips_after = 0;
    int generalized = 0;
    int clusters_formed = 0;
    int clusters_updated = 0;
    int conflicts_resolved = 0;
    std::vector<std::string> failures; // clusters left unmodified, with reason
};

nlohmann::json to_json(const ConsolidationReport& report);

// Phase 2 end to end: generalize subtask tips lacking a generalized
// description, cluster unclustered tips (joining an existing cluster when the
// average similarity reaches the threshold), consolidate, and commit each
// cluster's swap atomically. Already-clustered tips are left alone, which
// makes a second run a no-op.
ConsolidationReport run_consolidation(Store& store, Gateway& gateway, const Clock& clock,
                                      const CurationConfig& cfg = {});

} // namespace tmem
