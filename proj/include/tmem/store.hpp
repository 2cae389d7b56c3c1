#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmem/types.hpp"

namespace tmem {

struct MetadataFilter {
    std::optional<TipCategory> category;
    std::optional<Priority> priority;
    // A concrete context matches tips with that context OR a null context
    // (generic tips cover every app); generic_only selects null-context tips.
    std::optional<std::string> application_context;
    bool generic_only = false;
    std::optional<std::string> task_category;
    std::optional<Granularity> granularity;
};

bool matches_filter(const Tip& tip, const MetadataFilter& filter);

// Immutable snapshot; readers share these without synchronization.
struct StoreState {
    std::map<std::string, Trajectory> trajectories;
    std::map<std::string, Tip> tips;
    std::map<std::string, Cluster> clusters;
    std::map<std::string, std::string> cluster_of_tip; // derived
    int embed_dim = 0;
    std::uint64_t revision = 0;

    const Cluster* cluster_of(const std::string& tip_id) const;
};

struct ScoredTipRef {
    const Tip* tip;
    double score;
};

// Brute-force filtered scan over one snapshot. With an embedding the result
// is sorted by cosine descending, ties broken by ascending tip id; without
// one it is the filtered set in id order and score is 0.
std::vector<ScoredTipRef> query_state(const StoreState& state, const MetadataFilter& filter,
                                      const std::optional<Embedding>& query_embedding);

// Durable store: append-only JSONL log plus periodic full-state checkpoint.
// Layout under the store directory:
//   log.jsonl        one record per committed write, replayed after the
//                    checkpoint on recovery; a torn trailing line is ignored
//   checkpoint.json  full state at some revision
//   meta.json        embed_dim and last committed revision
// One writer at a time; every committed revision is internally consistent.
class Store {
public:
    static Store open(const std::filesystem::path& dir, int embed_dim,
                      int checkpoint_interval = 128);
    static Store in_memory(int embed_dim);

    Store(Store&&) = default;

    std::shared_ptr<const StoreState> snapshot() const;
    int embed_dim() const;
    std::uint64_t revision() const;

    std::uint64_t put_trajectory(const Trajectory& t);
    std::uint64_t put_tips(const std::vector<Tip>& tips);

    // Atomic swap: removed tips disappear and added tips + cluster upserts
    // appear in one revision. The union of source trajectory ids over added
    // must equal the union over removed (ProvenanceLoss otherwise).
    std::uint64_t replace_tips(const std::set<std::string>& removed_ids,
                               const std::vector<Tip>& added, const std::vector<Cluster>& clusters);

    void checkpoint();

    std::vector<std::pair<Tip, double>> query(const MetadataFilter& filter,
                                              const std::optional<Embedding>& query_embedding) const;

    bool durable() const { return !inner_->dir.empty(); }
    const std::filesystem::path& dir() const { return inner_->dir; }

private:
    struct Inner {
        std::filesystem::path dir; // empty = in-memory
        int checkpoint_interval = 128;
        std::uint64_t commits_since_checkpoint = 0;
        mutable std::mutex snapshot_mu;
        std::mutex writer_mu;
        std::shared_ptr<const StoreState> state;
    };

    Store() : inner_(std::make_unique<Inner>()) {}

    std::uint64_t commit(const nlohmann::json& record, StoreState next);
    void persist_meta(std::uint64_t revision) const;
    void maybe_checkpoint_locked(bool force = false);

    std::unique_ptr<Inner> inner_;
};

// Record-level appliers, shared by the writer and recovery replay.
StoreState apply_put_trajectory(const StoreState& s, const Trajectory& t);
StoreState apply_put_tips(const StoreState& s, const std::vector<Tip>& tips);
StoreState apply_replace_tips(const StoreState& s, const std::set<std::string>& removed_ids,
                              const std::vector<Tip>& added, const std::vector<Cluster>& clusters);

} // namespace tmem
