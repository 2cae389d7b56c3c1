#include "tmem/curation.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <regex>

#include "tmem/errors.hpp"
#include "tmem/ids.hpp"
#include "tmem/json_io.hpp"
#include "tmem/prompts.hpp"

namespace tmem {

namespace {

std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const std::regex& email_re() {
    static const std::regex re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+)");
    return re;
}

const std::regex& dotted_name_re() {
    static const std::regex re(R"(\b[A-Za-z]+\.[A-Za-z]+\b)");
    return re;
}

const std::regex& id_token_re() {
    static const std::regex re(R"(\b[A-Za-z]*\d{3,}[A-Za-z0-9]*\b)");
    return re;
}

const std::regex& noncanonical_verb_re() {
    static const std::regex re(R"(\b(get|fetch|obtain|grab)\b)", std::regex::icase);
    return re;
}

const std::regex& login_verb_re() {
    static const std::regex re(R"(\b(log in|sign in|login)\b)", std::regex::icase);
    return re;
}

const std::regex& purpose_clause_re() {
    static const std::regex re(R"(\s+(in order to|so as to|so that)\b.*$)", std::regex::icase);
    return re;
}

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::string collapse_spaces(const std::string& text) {
    std::string out;
    bool in_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

} // namespace

EntityLexicon build_lexicon(const StoreState& state) {
    EntityLexicon lexicon;
    for (const auto& [id, trajectory] : state.trajectories) {
        for (const auto& hint : trajectory.app_hints) lexicon.app_names.insert(lowercase(hint));
    }
    return lexicon;
}

std::optional<std::string> EntityLexicon::check_generalized(const std::string& text) const {
    for (const auto& word : words_of(text)) {
        if (app_names.count(word)) return "contains application name '" + word + "'";
    }
    if (std::regex_search(text, email_re())) return "contains an email address";
    if (std::regex_search(text, dotted_name_re())) return "contains a user-id-like token";
    if (std::regex_search(text, id_token_re())) return "contains an identifier-like token";
    std::smatch m;
    if (std::regex_search(text, m, noncanonical_verb_re())) {
        return "uses non-canonical verb '" + m.str() + "'";
    }
    if (std::regex_search(text, m, login_verb_re())) {
        return "uses non-canonical verb '" + m.str() + "'";
    }
    if (std::regex_search(text, purpose_clause_re())) return "contains a purpose clause";
    return std::nullopt;
}

std::string scrub_description(const std::string& text, const EntityLexicon& lexicon) {
    std::string out = std::regex_replace(text, purpose_clause_re(), "");
    out = std::regex_replace(out, email_re(), "account");
    out = std::regex_replace(out, dotted_name_re(), "account");
    out = std::regex_replace(out, id_token_re(), "item");
    out = std::regex_replace(out, login_verb_re(), "authenticate");
    out = std::regex_replace(out, noncanonical_verb_re(), "retrieve");

    // Word-level app-name replacement, preserving everything else verbatim.
    std::string rebuilt;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        rebuilt += lexicon.app_names.count(lowercase(current)) ? "service" : current;
        current.clear();
    };
    for (char c : out) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(c);
        } else {
            flush();
            rebuilt.push_back(c);
        }
    }
    flush();

    rebuilt = collapse_spaces(rebuilt);
    if (!rebuilt.empty()) {
        rebuilt[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rebuilt[0])));
    }
    return rebuilt.empty() ? "Perform the operation" : rebuilt;
}

std::string generalize_description(Gateway& gateway, const std::string& description,
                                   const EntityLexicon& lexicon,
                                   const std::function<void(const std::string&)>& warn) {
    if (description.empty()) {
        throw Error(ErrorCode::empty_text, "cannot generalize an empty description");
    }
    std::vector<std::string> app_names(lexicon.app_names.begin(), lexicon.app_names.end());
    LlmRequest req{Role::generalizer, prompts::generalizer(description, app_names),
                   "generalized.v1"};

    std::string candidate = gateway.complete(req).payload.at("generalized").get<std::string>();
    auto violation = lexicon.check_generalized(candidate);
    if (!violation) return candidate;

    if (warn) warn("generalized description rejected (" + *violation + "); re-prompting once");
    LlmRequest retry = req;
    retry.prompt += "\n\nThe previous answer was rejected: " + *violation +
                    ". Produce a more abstract rewrite.";
    candidate = gateway.complete(retry).payload.at("generalized").get<std::string>();
    violation = lexicon.check_generalized(candidate);
    if (!violation) return candidate;

    if (warn) warn("generalized description rejected twice; applying the mechanical scrub");
    return scrub_description(candidate, lexicon);
}

namespace {

double linkage_sim(const Embedding& a, const Embedding& b) {
    // Identical texts must cluster at threshold 1.0 despite rounding.
    if (a.vector == b.vector) return 1.0;
    return cosine(a, b);
}

std::vector<Cluster> agglomerate(const std::vector<const Tip*>& tips, double threshold) {
    size_t n = tips.size();
    std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            sim[i][j] = sim[j][i] = linkage_sim(tips[i]->index_embedding, tips[j]->index_embedding);
        }
    }

    struct Group {
        std::vector<size_t> members;
        std::string min_id;
    };
    std::vector<Group> groups;
    for (size_t i = 0; i < n; ++i) groups.push_back({{i}, tips[i]->id});

    // S[a][b] = sum of pairwise similarities between groups a and b, so the
    // average linkage is S / (|a| * |b|) and merges update in O(n).
    std::vector<std::vector<double>> cross(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) cross[i][j] = i == j ? 0.0 : sim[i][j];
    }
    std::vector<bool> alive(n, true);

    for (;;) {
        double best = -2.0;
        size_t best_a = n, best_b = n;
        for (size_t a = 0; a < groups.size(); ++a) {
            if (!alive[a]) continue;
            for (size_t b = a + 1; b < groups.size(); ++b) {
                if (!alive[b]) continue;
                double avg = cross[a][b] /
                             (static_cast<double>(groups[a].members.size()) *
                              static_cast<double>(groups[b].members.size()));
                const std::string& lo_a = std::min(groups[a].min_id, groups[b].min_id);
                const std::string& hi_a = std::max(groups[a].min_id, groups[b].min_id);
                bool better = avg > best;
                if (!better && avg == best && best_a < n) {
                    const std::string& lo_b = std::min(groups[best_a].min_id, groups[best_b].min_id);
                    const std::string& hi_b = std::max(groups[best_a].min_id, groups[best_b].min_id);
                    better = std::tie(lo_a, hi_a) < std::tie(lo_b, hi_b);
                }
                if (better) {
                    best = avg;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_a == n || best < threshold) break;

        Group merged;
        merged.members = groups[best_a].members;
        merged.members.insert(merged.members.end(), groups[best_b].members.begin(),
                              groups[best_b].members.end());
        merged.min_id = std::min(groups[best_a].min_id, groups[best_b].min_id);
        alive[best_a] = false;
        alive[best_b] = false;

        size_t idx = groups.size();
        groups.push_back(std::move(merged));
        alive.push_back(true);
        for (auto& row : cross) row.push_back(0.0);
        cross.emplace_back(groups.size(), 0.0);
        for (size_t other = 0; other < idx; ++other) {
            if (!alive[other]) continue;
            cross[idx][other] = cross[other][idx] =
                cross[std::min(best_a, other)][std::max(best_a, other)] +
                cross[std::min(best_b, other)][std::max(best_b, other)];
        }
    }

    std::vector<Cluster> out;
    for (size_t g = 0; g < groups.size(); ++g) {
        if (!alive[g]) continue;
        std::vector<std::string> member_ids;
        for (size_t m : groups[g].members) member_ids.push_back(tips[m]->id);
        std::sort(member_ids.begin(), member_ids.end());

        const Tip* anchor = nullptr;
        for (size_t m : groups[g].members) {
            if (!anchor || tips[m]->id < anchor->id) anchor = tips[m];
        }
        Cluster cluster;
        cluster.id = cluster_id(member_ids);
        cluster.canonical_description =
            anchor->generalized_description.value_or(anchor->index_description);
        cluster.canonical_embedding = anchor->index_embedding;
        cluster.member_tip_ids = std::move(member_ids);
        out.push_back(std::move(cluster));
    }
    std::sort(out.begin(), out.end(),
              [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
    return out;
}

} // namespace

std::vector<Cluster> cluster_tips(const std::vector<Tip>& tips, double threshold) {
    if (!(threshold > 0.0) || threshold > 1.0) {
        throw Error(ErrorCode::invalid_threshold,
                    "clustering threshold must be in (0, 1], got " + std::to_string(threshold));
    }
    std::map<Granularity, std::vector<const Tip*>> pools;
    for (const Tip& tip : tips) pools[tip.granularity].push_back(&tip);

    std::vector<Cluster> out;
    for (auto& [granularity, pool] : pools) {
        std::sort(pool.begin(), pool.end(),
                  [](const Tip* a, const Tip* b) { return a->id < b->id; });
        for (auto& cluster : agglomerate(pool, threshold)) out.push_back(std::move(cluster));
    }
    return out;
}

namespace {

int priority_severity(Priority p) {
    switch (p) {
        case Priority::critical: return 3;
        case Priority::high: return 2;
        case Priority::medium: return 1;
        case Priority::low: return 0;
    }
    return 0;
}

// 2 = derived from a successful trajectory, 0 = failed, 1 = unknown.
int source_success_rank(const Tip& tip) {
    const std::string& s = tip.source_outcome;
    if (s.rfind("failure", 0) == 0) return 0;
    if (s.rfind("clean_success", 0) == 0 || s.rfind("inefficient_success", 0) == 0 ||
        s.rfind("recovery_success", 0) == 0 || s.rfind("success", 0) == 0) {
        return 2;
    }
    return 1;
}

} // namespace

bool tip_beats(const Tip& a, const Tip& b) {
    int sa = source_success_rank(a), sb = source_success_rank(b);
    if (sa != sb) return sa > sb;
    bool ra = a.category == TipCategory::recovery, rb = b.category == TipCategory::recovery;
    if (ra != rb) return ra;
    int pa = priority_severity(a.priority), pb = priority_severity(b.priority);
    if (pa != pb) return pa > pb;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id < b.id;
}

ClusterConsolidation consolidate_cluster(Gateway& gateway, const Clock& clock, const Cluster& c,
                                         const std::vector<Tip>& members,
                                         const EntityLexicon& lexicon,
                                         const std::function<void(const std::string&)>& warn) {
    if (members.empty()) {
        throw Error(ErrorCode::invalid_field, "cannot consolidate an empty cluster");
    }
    Granularity granularity = members.front().granularity;
    for (const Tip& m : members) {
        if (m.granularity != granularity) {
            throw Error(ErrorCode::invalid_field,
                        "cluster '" + c.id + "' mixes task-level and subtask-level tips");
        }
    }

    if (members.size() == 1) {
        const Tip& only = members.front();
        return {only.generalized_description.value_or(only.index_description), {only}, 0};
    }

    std::map<std::string, const Tip*> by_id;
    for (const Tip& m : members) by_id[m.id] = &m;

    LlmRequest req{Role::consolidator, prompts::consolidator(c.id, granularity, members),
                   "consolidation.v1"};
    const json payload = gateway.complete(req).payload;

    std::string canonical = payload.at("canonical_description").get<std::string>();
    if (granularity == Granularity::subtask) {
        if (auto violation = lexicon.check_generalized(canonical)) {
            if (warn) {
                warn("canonical description for cluster '" + c.id + "' rejected (" + *violation +
                     "); applying the mechanical scrub");
            }
            canonical = scrub_description(canonical, lexicon);
        }
    }

    int conflicts = 0;
    if (auto it = payload.find("conflicts"); it != payload.end() && it->is_array()) {
        for (const auto& conflict : *it) {
            std::string winner_id = conflict.at("winner_tip_id").get<std::string>();
            std::string loser_id = conflict.at("loser_tip_id").get<std::string>();
            auto w = by_id.find(winner_id);
            auto l = by_id.find(loser_id);
            if (w == by_id.end() || l == by_id.end()) {
                throw Error(ErrorCode::invalid_field,
                            "conflict references a tip outside cluster '" + c.id + "'");
            }
            if (!tip_beats(*w->second, *l->second)) {
                throw Error(ErrorCode::invalid_field,
                            "conflict winner '" + winner_id +
                                "' contradicts the precedence order in cluster '" + c.id + "'");
            }
            ++conflicts;
        }
    }

    std::set<std::string> absorbed_total;
    ClusterConsolidation result;
    result.canonical_description = canonical;
    result.conflicts_resolved = conflicts;

    Embedding canonical_embedding = gateway.embed(canonical);
    for (const auto& spec : payload.at("merged_tips")) {
        std::vector<const Tip*> absorbed;
        std::vector<std::string> absorbed_ids;
        for (const auto& sid : spec.at("source_tip_ids")) {
            std::string id = sid.get<std::string>();
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw Error(ErrorCode::invalid_field,
                            "merged tip absorbs unknown member '" + id + "'");
            }
            if (!absorbed_total.insert(id).second) {
                throw Error(ErrorCode::invalid_field,
                            "member '" + id + "' absorbed by more than one merged tip");
            }
            absorbed.push_back(it->second);
            absorbed_ids.push_back(id);
        }
        if (absorbed.empty()) {
            throw Error(ErrorCode::invalid_field, "merged tip absorbs no members");
        }
        std::sort(absorbed_ids.begin(), absorbed_ids.end());

        const Tip* winner = absorbed.front();
        for (const Tip* t : absorbed) {
            if (tip_beats(*t, *winner)) winner = t;
        }

        Tip merged;
        merged.category = spec.contains("category") && spec["category"].is_string()
                              ? tip_category_from_string(spec["category"].get<std::string>())
                              : winner->category;
        merged.content = spec.at("content").get<std::string>();
        merged.purpose = spec.value("purpose", "");
        for (const auto& s : spec.at("steps")) merged.steps.push_back(s.get<std::string>());
        merged.trigger = spec.value("trigger", "");
        merged.negative_example = optional_string(spec, "negative_example");
        merged.application_context = optional_string(spec, "application_context");
        merged.task_category = optional_string(spec, "task_category");
        if (spec.contains("priority") && spec["priority"].is_string()) {
            merged.priority = priority_from_string(spec["priority"].get<std::string>());
        } else {
            merged.priority = Priority::low;
            for (const Tip* t : absorbed) {
                if (priority_severity(t->priority) > priority_severity(merged.priority)) {
                    merged.priority = t->priority;
                }
            }
        }
        merged.granularity = granularity;
        if (granularity == Granularity::subtask) merged.subtask_description = canonical;
        merged.generalized_description = canonical;
        std::set<std::string> sources;
        for (const Tip* t : absorbed) {
            sources.insert(t->source_trajectory_ids.begin(), t->source_trajectory_ids.end());
        }
        merged.source_trajectory_ids.assign(sources.begin(), sources.end());
        merged.source_outcome = winner->source_outcome;
        merged.embedding = gateway.embed(merged.content + "\n" + merged.purpose);
        merged.index_description = canonical;
        merged.index_embedding = canonical_embedding;
        merged.created_at = clock.now();

        std::vector<std::string> id_parts{"consolidated", canonical, to_string(merged.category),
                                          merged.content};
        id_parts.insert(id_parts.end(), absorbed_ids.begin(), absorbed_ids.end());
        merged.id = tip_id(id_parts);
        result.merged.push_back(std::move(merged));
    }

    for (const Tip& m : members) {
        if (!absorbed_total.count(m.id)) {
            throw Error(ErrorCode::provenance_loss,
                        "member '" + m.id + "' not absorbed by any merged tip in cluster '" +
                            c.id + "'");
        }
    }
    if (result.merged.size() > members.size()) {
        throw Error(ErrorCode::invalid_field,
                    "consolidation grew cluster '" + c.id + "' instead of shrinking it");
    }
    return result;
}

nlohmann::json to_json(const ConsolidationReport& report) {
    return nlohmann::json{{"revision_before", report.revision_before},
                          {"revision_after", report.revision_after},
                          {"tips_before", report.tips_before},
                          {"tips_after", report.tips_after},
                          {"generalized", report.generalized},
                          {"clusters_formed", report.clusters_formed},
                          {"clusters_updated", report.clusters_updated},
                          {"conflicts_resolved", report.conflicts_resolved},
                          {"failures", report.failures}};
}

ConsolidationReport run_consolidation(Store& store, Gateway& gateway, const Clock& clock,
                                      const CurationConfig& cfg) {
    if (!(cfg.threshold > 0.0) || cfg.threshold > 1.0) {
        throw Error(ErrorCode::invalid_threshold,
                    "consolidation threshold must be in (0, 1], got " +
                        std::to_string(cfg.threshold));
    }
    std::function<void(const std::string&)> warn = cfg.warn;
    if (!warn) warn = [](const std::string& m) { std::cerr << "[tmem] " << m << "\n"; };

    ConsolidationReport report;
    auto snap = store.snapshot();
    report.revision_before = snap->revision;
    report.tips_before = static_cast<int>(snap->tips.size());

    EntityLexicon lexicon = build_lexicon(*snap);

    // Generalize unclustered subtask tips that still lack a generalized
    // description, updating their retrieval index in place.
    {
        std::set<std::string> updated_ids;
        std::vector<Tip> updated;
        for (const auto& [id, tip] : snap->tips) {
            if (tip.granularity != Granularity::subtask) continue;
            if (tip.generalized_description) continue;
            if (snap->cluster_of_tip.count(id)) continue;
            std::string generalized = generalize_description(
                gateway, tip.subtask_description.value_or(tip.index_description), lexicon, warn);
            Tip next = tip;
            next.generalized_description = generalized;
            next.index_description = generalized;
            next.index_embedding = gateway.embed(generalized);
            updated_ids.insert(id);
            updated.push_back(std::move(next));
            ++report.generalized;
        }
        if (!updated.empty()) {
            store.replace_tips(updated_ids, updated, {});
            snap = store.snapshot();
        }
    }

    std::vector<Granularity> pools{Granularity::subtask};
    if (cfg.consolidate_task_level) pools.push_back(Granularity::task);

    std::vector<Cluster> singleton_records;

    for (Granularity granularity : pools) {
        std::vector<const Tip*> unclustered;
        for (const auto& [id, tip] : snap->tips) {
            if (tip.granularity != granularity) continue;
            if (snap->cluster_of_tip.count(id)) continue;
            unclustered.push_back(&tip);
        }
        if (unclustered.empty()) continue;

        // Existing clusters are stable attractors: new tips may join one but
        // clusters never re-merge, so a rerun with no new tips is a no-op.
        std::map<std::string, std::vector<const Tip*>> pending;
        std::vector<const Tip*> remaining;
        for (const Tip* tip : unclustered) {
            std::string best_cluster;
            double best_avg = -2.0;
            for (const auto& [cid, cluster] : snap->clusters) {
                double total = 0.0;
                int count = 0;
                bool granularity_match = true;
                for (const auto& mid : cluster.member_tip_ids) {
                    auto mit = snap->tips.find(mid);
                    if (mit == snap->tips.end()) continue;
                    if (mit->second.granularity != granularity) {
                        granularity_match = false;
                        break;
                    }
                    total += linkage_sim(tip->index_embedding, mit->second.index_embedding);
                    ++count;
                }
                if (!granularity_match || count == 0) continue;
                double avg = total / count;
                if (avg > best_avg || (avg == best_avg && cid < best_cluster)) {
                    best_avg = avg;
                    best_cluster = cid;
                }
            }
            if (!best_cluster.empty() && best_avg >= cfg.threshold) {
                pending[best_cluster].push_back(tip);
            } else {
                remaining.push_back(tip);
            }
        }

        for (const auto& [cid, additions] : pending) {
            const Cluster& existing = snap->clusters.at(cid);
            std::vector<Tip> members;
            std::set<std::string> removed;
            for (const auto& mid : existing.member_tip_ids) {
                members.push_back(snap->tips.at(mid));
                removed.insert(mid);
            }
            for (const Tip* t : additions) {
                members.push_back(*t);
                removed.insert(t->id);
            }
            try {
                ClusterConsolidation merged =
                    consolidate_cluster(gateway, clock, existing, members, lexicon, warn);
                Cluster record = existing;
                record.canonical_description = merged.canonical_description;
                record.canonical_embedding = gateway.embed(merged.canonical_description);
                record.member_tip_ids.clear();
                for (const Tip& t : merged.merged) record.member_tip_ids.push_back(t.id);
                std::sort(record.member_tip_ids.begin(), record.member_tip_ids.end());
                store.replace_tips(removed, merged.merged, {record});
                ++report.clusters_updated;
                report.conflicts_resolved += merged.conflicts_resolved;
            } catch (const Error& e) {
                report.failures.push_back("cluster " + cid + ": " + e.what());
            }
        }
        if (!pending.empty()) snap = store.snapshot();

        std::vector<Tip> remaining_tips;
        remaining_tips.reserve(remaining.size());
        for (const Tip* t : remaining) remaining_tips.push_back(*t);
        for (const Cluster& cluster : cluster_tips(remaining_tips, cfg.threshold)) {
            if (cluster.member_tip_ids.size() == 1) {
                singleton_records.push_back(cluster);
                continue;
            }
            std::vector<Tip> members;
            std::set<std::string> removed;
            for (const auto& mid : cluster.member_tip_ids) {
                members.push_back(snap->tips.at(mid));
                removed.insert(mid);
            }
            try {
                ClusterConsolidation merged =
                    consolidate_cluster(gateway, clock, cluster, members, lexicon, warn);
                Cluster record = cluster;
                record.canonical_description = merged.canonical_description;
                record.canonical_embedding = gateway.embed(merged.canonical_description);
                record.member_tip_ids.clear();
                for (const Tip& t : merged.merged) record.member_tip_ids.push_back(t.id);
                std::sort(record.member_tip_ids.begin(), record.member_tip_ids.end());
                store.replace_tips(removed, merged.merged, {record});
                ++report.clusters_formed;
                report.conflicts_resolved += merged.conflicts_resolved;
            } catch (const Error& e) {
                report.failures.push_back("cluster " + cluster.id + ": " + e.what());
            }
        }
        snap = store.snapshot();
    }

    if (!singleton_records.empty()) {
        store.replace_tips({}, {}, singleton_records);
        report.clusters_formed += static_cast<int>(singleton_records.size());
        snap = store.snapshot();
    }

    report.revision_after = snap->revision;
    report.tips_after = static_cast<int>(snap->tips.size());
    return report;
}

} // namespace tmem
