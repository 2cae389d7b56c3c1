#include "tmem/store.hpp"

#include <algorithm>
#include <fstream>

#include "tmem/errors.hpp"
#include "tmem/json_io.hpp"

namespace tmem {

namespace fs = std::filesystem;

bool matches_filter(const Tip& tip, const MetadataFilter& filter) {
    if (filter.category && tip.category != *filter.category) return false;
    if (filter.priority && tip.priority != *filter.priority) return false;
    if (filter.granularity && tip.granularity != *filter.granularity) return false;
    if (filter.generic_only && tip.application_context) return false;
    if (filter.application_context && tip.application_context &&
        *tip.application_context != *filter.application_context) {
        return false; // null context always matches a concrete filter
    }
    if (filter.task_category && tip.task_category &&
        *tip.task_category != *filter.task_category) {
        return false;
    }
    return true;
}

const Cluster* StoreState::cluster_of(const std::string& tip_id) const {
    auto it = cluster_of_tip.find(tip_id);
    if (it == cluster_of_tip.end()) return nullptr;
    auto cit = clusters.find(it->second);
    return cit == clusters.end() ? nullptr : &cit->second;
}

std::vector<ScoredTipRef> query_state(const StoreState& state, const MetadataFilter& filter,
                                      const std::optional<Embedding>& query_embedding) {
    if (query_embedding && query_embedding->dim() != state.embed_dim) {
        throw Error(ErrorCode::dimension_mismatch,
                    "query embedding dim " + std::to_string(query_embedding->dim()) +
                        " != store dim " + std::to_string(state.embed_dim));
    }
    std::vector<ScoredTipRef> out;
    for (const auto& [id, tip] : state.tips) {
        if (!matches_filter(tip, filter)) continue;
        double score = query_embedding ? cosine(*query_embedding, tip.embedding) : 0.0;
        out.push_back({&tip, score});
    }
    if (query_embedding) {
        std::stable_sort(out.begin(), out.end(), [](const ScoredTipRef& a, const ScoredTipRef& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.tip->id < b.tip->id;
        });
    }
    return out;
}

namespace {

void check_embedding_dim(const Tip& tip, int dim) {
    if (tip.embedding.dim() != dim || tip.index_embedding.dim() != dim) {
        throw Error(ErrorCode::dimension_mismatch,
                    "tip '" + tip.id + "' embedding dim != store dim " + std::to_string(dim));
    }
}

void rebuild_cluster_index(StoreState& s) {
    s.cluster_of_tip.clear();
    for (const auto& [cid, cluster] : s.clusters) {
        for (const auto& tid : cluster.member_tip_ids) {
            auto [it, inserted] = s.cluster_of_tip.emplace(tid, cid);
            if (!inserted) {
                throw Error(ErrorCode::invalid_field,
                            "tip '" + tid + "' belongs to clusters '" + it->second + "' and '" +
                                cid + "'");
            }
        }
    }
    for (const auto& [tid, cid] : s.cluster_of_tip) {
        if (!s.tips.count(tid)) {
            throw Error(ErrorCode::dangling_provenance,
                        "cluster '" + cid + "' references missing tip '" + tid + "'");
        }
    }
}

} // namespace

StoreState apply_put_trajectory(const StoreState& s, const Trajectory& t) {
    if (s.trajectories.count(t.id)) {
        throw Error(ErrorCode::duplicate_id, "trajectory '" + t.id + "' already stored");
    }
    StoreState next = s;
    next.trajectories.emplace(t.id, t);
    return next;
}

StoreState apply_put_tips(const StoreState& s, const std::vector<Tip>& tips) {
    StoreState next = s;
    for (const Tip& tip : tips) {
        validate_tip(tip);
        check_embedding_dim(tip, s.embed_dim);
        if (next.tips.count(tip.id)) {
            throw Error(ErrorCode::duplicate_id, "tip '" + tip.id + "' already stored");
        }
        for (const auto& src : tip.source_trajectory_ids) {
            if (!next.trajectories.count(src)) {
                throw Error(ErrorCode::dangling_provenance,
                            "tip '" + tip.id + "' references unknown trajectory '" + src + "'");
            }
        }
        next.tips.emplace(tip.id, tip);
    }
    return next;
}

StoreState apply_replace_tips(const StoreState& s, const std::set<std::string>& removed_ids,
                              const std::vector<Tip>& added, const std::vector<Cluster>& clusters) {
    std::set<std::string> removed_sources;
    for (const auto& id : removed_ids) {
        auto it = s.tips.find(id);
        if (it == s.tips.end()) {
            throw Error(ErrorCode::invalid_field, "cannot remove unknown tip '" + id + "'");
        }
        removed_sources.insert(it->second.source_trajectory_ids.begin(),
                               it->second.source_trajectory_ids.end());
    }
    std::set<std::string> added_sources;
    for (const Tip& tip : added) {
        added_sources.insert(tip.source_trajectory_ids.begin(), tip.source_trajectory_ids.end());
    }
    for (const auto& src : removed_sources) {
        if (!added_sources.count(src)) {
            throw Error(ErrorCode::provenance_loss,
                        "replacement drops source trajectory '" + src + "'");
        }
    }
    for (const auto& src : added_sources) {
        if (!removed_sources.count(src)) {
            throw Error(ErrorCode::provenance_loss,
                        "replacement introduces source trajectory '" + src +
                            "' absent from the removed tips");
        }
    }

    StoreState next = s;
    for (const auto& id : removed_ids) next.tips.erase(id);
    for (const Tip& tip : added) {
        validate_tip(tip);
        check_embedding_dim(tip, s.embed_dim);
        if (next.tips.count(tip.id)) {
            throw Error(ErrorCode::duplicate_id, "tip '" + tip.id + "' already stored");
        }
        for (const auto& src : tip.source_trajectory_ids) {
            if (!next.trajectories.count(src)) {
                throw Error(ErrorCode::dangling_provenance,
                            "tip '" + tip.id + "' references unknown trajectory '" + src + "'");
            }
        }
        next.tips.emplace(tip.id, tip);
    }
    for (const Cluster& c : clusters) {
        if (c.canonical_embedding.dim() != s.embed_dim) {
            throw Error(ErrorCode::dimension_mismatch,
                        "cluster '" + c.id + "' embedding dim != store dim");
        }
        next.clusters[c.id] = c;
    }
    // Drop cluster records whose membership was fully removed.
    for (auto it = next.clusters.begin(); it != next.clusters.end();) {
        bool any_member = false;
        for (const auto& tid : it->second.member_tip_ids) {
            if (next.tips.count(tid)) {
                any_member = true;
                break;
            }
        }
        it = any_member ? std::next(it) : next.clusters.erase(it);
    }
    rebuild_cluster_index(next);
    return next;
}

Store Store::in_memory(int embed_dim) {
    Store s;
    auto state = std::make_shared<StoreState>();
    state->embed_dim = embed_dim;
    s.inner_->state = std::move(state);
    return s;
}

Store Store::open(const fs::path& dir, int embed_dim, int checkpoint_interval) {
    Store s;
    s.inner_->dir = dir;
    s.inner_->checkpoint_interval = checkpoint_interval;

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create store dir: " + ec.message());

    auto state = std::make_shared<StoreState>();
    state->embed_dim = embed_dim;

    fs::path meta_path = dir / "meta.json";
    if (fs::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        json meta = json::parse(meta_in, nullptr, false);
        if (meta.is_discarded()) throw Error(ErrorCode::io_error, "meta.json is corrupt");
        state->embed_dim = meta.at("embed_dim").get<int>();
        if (embed_dim != 0 && embed_dim != state->embed_dim) {
            throw Error(ErrorCode::dimension_mismatch,
                        "store has embed_dim " + std::to_string(state->embed_dim) +
                            ", requested " + std::to_string(embed_dim));
        }
    }

    fs::path checkpoint_path = dir / "checkpoint.json";
    if (fs::exists(checkpoint_path)) {
        std::ifstream in(checkpoint_path);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw Error(ErrorCode::io_error, "checkpoint.json is corrupt");
        state->revision = doc.at("revision").get<std::uint64_t>();
        state->embed_dim = doc.at("embed_dim").get<int>();
        for (const auto& t : doc.at("trajectories")) {
            Trajectory traj = trajectory_from_json(t);
            state->trajectories.emplace(traj.id, std::move(traj));
        }
        for (const auto& t : doc.at("tips")) {
            Tip tip = tip_from_json(t);
            state->tips.emplace(tip.id, std::move(tip));
        }
        for (const auto& c : doc.at("clusters")) {
            Cluster cluster = cluster_from_json(c);
            state->clusters.emplace(cluster.id, std::move(cluster));
        }
        rebuild_cluster_index(*state);
    }

    fs::path log_path = dir / "log.jsonl";
    if (fs::exists(log_path)) {
        std::ifstream in(log_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded()) {
                // A torn tail is expected after a crash; anything after it is
                // not replayed.
                break;
            }
            std::uint64_t rev = rec.at("revision").get<std::uint64_t>();
            if (rev <= state->revision) continue; // already in the checkpoint
            std::string type = rec.at("type").get<std::string>();
            StoreState next;
            if (type == "put_trajectory") {
                next = apply_put_trajectory(*state, trajectory_from_json(rec.at("trajectory")));
            } else if (type == "put_tips") {
                std::vector<Tip> tips;
                for (const auto& t : rec.at("tips")) tips.push_back(tip_from_json(t));
                next = apply_put_tips(*state, tips);
            } else if (type == "replace_tips") {
                std::set<std::string> removed;
                for (const auto& r : rec.at("removed")) removed.insert(r.get<std::string>());
                std::vector<Tip> added;
                for (const auto& t : rec.at("added")) added.push_back(tip_from_json(t));
                std::vector<Cluster> clusters;
                for (const auto& c : rec.at("clusters")) clusters.push_back(cluster_from_json(c));
                next = apply_replace_tips(*state, removed, added, clusters);
            } else {
                throw Error(ErrorCode::io_error, "unknown log record type '" + type + "'");
            }
            next.revision = rev;
            *state = std::move(next);
        }
    }

    s.inner_->state = std::move(state);
    s.persist_meta(s.inner_->state->revision);
    return s;
}

std::shared_ptr<const StoreState> Store::snapshot() const {
    std::lock_guard<std::mutex> lock(inner_->snapshot_mu);
    return inner_->state;
}

int Store::embed_dim() const { return snapshot()->embed_dim; }
std::uint64_t Store::revision() const { return snapshot()->revision; }

void Store::persist_meta(std::uint64_t revision) const {
    if (inner_->dir.empty()) return;
    json meta{{"embed_dim", inner_->state->embed_dim}, {"revision", revision}};
    std::ofstream out(inner_->dir / "meta.json", std::ios::trunc);
    out << meta.dump() << "\n";
    if (!out) throw Error(ErrorCode::io_error, "failed to write meta.json");
}

std::uint64_t Store::commit(const json& record, StoreState next) {
    next.revision = inner_->state->revision + 1;
    if (!inner_->dir.empty()) {
        json rec = record;
        rec["revision"] = next.revision;
        std::ofstream out(inner_->dir / "log.jsonl", std::ios::app);
        out << rec.dump() << "\n";
        out.flush();
        if (!out) throw Error(ErrorCode::io_error, "failed to append to log.jsonl");
    }
    auto next_ptr = std::make_shared<const StoreState>(std::move(next));
    {
        std::lock_guard<std::mutex> lock(inner_->snapshot_mu);
        inner_->state = std::move(next_ptr);
    }
    persist_meta(inner_->state->revision);
    ++inner_->commits_since_checkpoint;
    maybe_checkpoint_locked();
    return inner_->state->revision;
}

void Store::maybe_checkpoint_locked(bool force) {
    if (inner_->dir.empty()) return;
    if (!force) {
        if (inner_->checkpoint_interval <= 0) return;
        if (inner_->commits_since_checkpoint <
            static_cast<std::uint64_t>(inner_->checkpoint_interval)) {
            return;
        }
    }
    inner_->commits_since_checkpoint = 0;

    auto snap = snapshot();
    json trajectories = json::array();
    for (const auto& [id, t] : snap->trajectories) trajectories.push_back(to_json(t));
    json tips = json::array();
    for (const auto& [id, t] : snap->tips) tips.push_back(to_json(t));
    json clusters = json::array();
    for (const auto& [id, c] : snap->clusters) clusters.push_back(to_json(c));
    json doc{{"revision", snap->revision},
             {"embed_dim", snap->embed_dim},
             {"trajectories", trajectories},
             {"tips", tips},
             {"clusters", clusters}};

    fs::path tmp = inner_->dir / "checkpoint.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << doc.dump() << "\n";
        if (!out) throw Error(ErrorCode::io_error, "failed to write checkpoint");
    }
    std::error_code ec;
    fs::rename(tmp, inner_->dir / "checkpoint.json", ec);
    if (ec) throw Error(ErrorCode::io_error, "failed to publish checkpoint: " + ec.message());
    // Records at or below the checkpoint revision are skipped on replay, so a
    // crash between the rename and this truncation is harmless.
    std::ofstream(inner_->dir / "log.jsonl", std::ios::trunc);
}

void Store::checkpoint() {
    std::lock_guard<std::mutex> lock(inner_->writer_mu);
    maybe_checkpoint_locked(/*force=*/true);
}

std::uint64_t Store::put_trajectory(const Trajectory& t) {
    std::lock_guard<std::mutex> lock(inner_->writer_mu);
    StoreState next = apply_put_trajectory(*inner_->state, t);
    return commit(json{{"type", "put_trajectory"}, {"trajectory", to_json(t)}}, std::move(next));
}

std::uint64_t Store::put_tips(const std::vector<Tip>& tips) {
    std::lock_guard<std::mutex> lock(inner_->writer_mu);
    StoreState next = apply_put_tips(*inner_->state, tips);
    json arr = json::array();
    for (const auto& t : tips) arr.push_back(to_json(t));
    return commit(json{{"type", "put_tips"}, {"tips", arr}}, std::move(next));
}

std::uint64_t Store::replace_tips(const std::set<std::string>& removed_ids,
                                  const std::vector<Tip>& added,
                                  const std::vector<Cluster>& clusters) {
    std::lock_guard<std::mutex> lock(inner_->writer_mu);
    StoreState next = apply_replace_tips(*inner_->state, removed_ids, added, clusters);
    json added_arr = json::array();
    for (const auto& t : added) added_arr.push_back(to_json(t));
    json cluster_arr = json::array();
    for (const auto& c : clusters) cluster_arr.push_back(to_json(c));
    return commit(json{{"type", "replace_tips"},
                       {"removed", removed_ids},
                       {"added", added_arr},
                       {"clusters", cluster_arr}},
                  std::move(next));
}

std::vector<std::pair<Tip, double>> Store::query(
    const MetadataFilter& filter, const std::optional<Embedding>& query_embedding) const {
    auto snap = snapshot();
    std::vector<std::pair<Tip, double>> out;
    for (const auto& ref : query_state(*snap, filter, query_embedding)) {
        out.emplace_back(*ref.tip, ref.score);
    }
    return out;
}

} // namespace tmem
