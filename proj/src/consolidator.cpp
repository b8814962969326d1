#include "hyperkg/consolidator.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    // Smaller index becomes the root so components are keyed by first member.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }
    std::vector<std::vector<std::size_t>> components() {
        std::map<std::size_t, std::vector<std::size_t>> by_root;
        for (std::size_t i = 0; i < parent_.size(); ++i) by_root[find(i)].push_back(i);
        std::vector<std::vector<std::size_t>> out;
        for (auto& [root, members] : by_root) out.push_back(std::move(members));
        return out;
    }

private:
    std::vector<std::size_t> parent_;
};

void warn(std::vector<std::string>& sink, std::string message) {
    spdlog::warn("{}", message);
    sink.push_back(std::move(message));
}

std::string fuse(const std::vector<std::string>& parts, std::string_view kind, Gateway& gateway,
                 const DedupConfig& config, const PromptTemplates& prompts,
                 std::vector<std::string>& warnings) {
    std::vector<std::string> distinct;
    for (const auto& p : parts) {
        auto t = text::trim(p);
        if (!t.empty() && std::find(distinct.begin(), distinct.end(), t) == distinct.end())
            distinct.push_back(std::move(t));
    }
    if (config.fusion_mode == FusionMode::llm_summarize && distinct.size() > 1) {
        try {
            std::string listing;
            for (const auto& d : distinct) listing += "- " + d + "\n";
            auto fused = text::trim(gateway.complete(prompts.render(
                PromptKind::description_fusion, {{"kind", std::string(kind)}, {"descriptions", listing}})));
            if (!fused.empty()) return fused;
            warn(warnings, "description fusion returned empty text; using concatenation");
        } catch (const FixtureMissError&) {
            throw;
        } catch (const Error& e) {
            warn(warnings, std::string("description fusion failed; using concatenation: ") + e.what());
        }
    }
    return fuse_texts(parts);
}

}  // namespace

void DedupConfig::validate() const {
    auto in_range = [](double t) { return t > 0.0 && t <= 1.0; };
    if (!in_range(entity_sim_threshold))
        throw InvalidInput("dedup.entity_sim_threshold must be in (0, 1]");
    if (!in_range(edge_sim_threshold)) throw InvalidInput("dedup.edge_sim_threshold must be in (0, 1]");
}

std::string entity_embedding_text(const Entity& entity) {
    auto desc = text::trim(entity.description);
    return desc.empty() ? entity.name : entity.name + ": " + desc;
}

std::string fuse_texts(const std::vector<std::string>& parts) {
    std::vector<std::string> nonempty;
    for (const auto& p : parts) {
        auto t = text::trim(p);
        if (!t.empty() && std::find(nonempty.begin(), nonempty.end(), t) == nonempty.end())
            nonempty.push_back(std::move(t));
    }
    if (nonempty.empty()) return {};
    if (nonempty.size() == 1) return nonempty.front();

    std::vector<std::string> sentences;
    for (const auto& p : nonempty)
        for (auto& s : text::split_sentences(p))
            if (std::find(sentences.begin(), sentences.end(), s) == sentences.end())
                sentences.push_back(std::move(s));
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) {
            char last = out.back();
            out += (last == '.' || last == '!' || last == '?') ? " " : "; ";
        }
        out += s;
    }
    return out;
}

EntityClusters cluster_entities(const std::vector<EntityMention>& mentions, Gateway& gateway,
                                const DedupConfig& config) {
    config.validate();
    if (mentions.empty()) throw InvalidInput("cluster_entities requires at least one mention");
    EntityClusters out;
    const std::size_t n = mentions.size();
    DisjointSets sets(n);

    std::map<std::string, std::size_t> first_with_key;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::string> keys{fold_key(mentions[i].entity.name)};
        for (const auto& a : mentions[i].entity.aliases) keys.insert(fold_key(a));
        for (const auto& k : keys) {
            auto [it, inserted] = first_with_key.emplace(k, i);
            if (!inserted) sets.unite(it->second, i);
        }
    }

    if (n > 1) {
        try {
            std::vector<std::string> texts;
            for (const auto& m : mentions) texts.push_back(entity_embedding_text(m.entity));
            auto vectors = gateway.embed(texts);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (cosine(vectors[i], vectors[j]) >= config.entity_sim_threshold)
                        sets.unite(i, j);
        } catch (const FixtureMissError&) {
            throw;
        } catch (const Error& e) {
            warn(out.warnings,
                 std::string("entity embedding failed; clustering by exact name only: ") + e.what());
        }
    }

    out.clusters = sets.components();
    for (const auto& cluster : out.clusters) {
        std::map<std::string, std::size_t> freq;
        for (std::size_t i : cluster) ++freq[mentions[i].entity.name];
        auto best = std::max_element(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
            return a.first > b.first;
        });
        out.canonical_names.push_back(best->first);
    }
    return out;
}

DedupResult deduplicate_graph(const RawGraph& raw, Gateway& gateway, const DedupConfig& config,
                              const PromptTemplates& prompts) {
    config.validate();
    DedupResult out;
    out.graph.set_source_id(raw.source_id);
    out.edge_map.assign(raw.edges.size(), std::nullopt);

    // Entities.
    std::map<std::string, std::string> to_canonical;
    if (!raw.mentions.empty()) {
        auto clusters = cluster_entities(raw.mentions, gateway, config);
        for (auto& w : clusters.warnings) out.warnings.push_back(std::move(w));
        for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
            const auto& members = clusters.clusters[c];
            const std::string& canonical = clusters.canonical_names[c];
            Entity merged;
            merged.name = canonical;
            const EntityMention* typed = nullptr;
            std::vector<std::string> descriptions;
            for (std::size_t i : members) {
                const auto& m = raw.mentions[i].entity;
                if (!typed && m.name == canonical) typed = &raw.mentions[i];
                descriptions.push_back(m.description);
                merged.aliases.insert(m.name);
                merged.aliases.insert(m.aliases.begin(), m.aliases.end());
                to_canonical[m.name] = canonical;
                for (const auto& a : m.aliases) to_canonical[canonicalize_name(a)] = canonical;
            }
            merged.entity_type = (typed ? typed : &raw.mentions[members.front()])->entity.entity_type;
            merged.description = fuse(descriptions, "entity", gateway, config, prompts, out.warnings);
            merged.aliases.erase(canonical);
            out.graph.upsert_entity(std::move(merged));
        }
    }

    // Member rewrite.
    std::vector<Hyperedge> rewritten(raw.edges.size());
    std::vector<bool> alive(raw.edges.size(), false);
    for (std::size_t i = 0; i < raw.edges.size(); ++i) {
        const auto& e = raw.edges[i];
        Hyperedge r;
        r.relation = text::trim(e.relation);
        r.provenance = e.provenance;
        bool dangling = false;
        for (const auto& m : e.members) {
            auto it = to_canonical.find(canonicalize_name(m));
            if (it == to_canonical.end()) {
                dangling = true;
                warn(out.warnings, "raw edge '" + e.relation + "' names unknown entity '" + m + "'");
                break;
            }
            if (std::find(r.members.begin(), r.members.end(), it->second) == r.members.end())
                r.members.push_back(it->second);
        }
        if (dangling) continue;
        if (r.members.size() < 2) {
            warn(out.warnings, "raw edge '" + e.relation +
                                   "' collapsed below two members after coreference");
            continue;
        }
        r.tier = tier_admits(e.tier, r.members.size())
                     ? e.tier
                     : (r.members.size() == 2 ? Tier::binary : Tier::nary);
        rewritten[i] = std::move(r);
        alive[i] = true;
    }

    // Group by canonical member set, keyed in order of first appearance.
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::set<std::string>, std::size_t> group_of;
    for (std::size_t i = 0; i < rewritten.size(); ++i) {
        if (!alive[i]) continue;
        auto [it, inserted] = group_of.emplace(rewritten[i].member_set(), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }

    for (const auto& group : groups) {
        DisjointSets sets(group.size());
        for (std::size_t a = 0; a < group.size(); ++a)
            for (std::size_t b = a + 1; b < group.size(); ++b)
                if (rewritten[group[a]].relation == rewritten[group[b]].relation) sets.unite(a, b);
        if (group.size() > 1) {
            try {
                std::vector<std::string> texts;
                for (std::size_t i : group) texts.push_back(rewritten[i].relation);
                auto vectors = gateway.embed(texts);
                for (std::size_t a = 0; a < group.size(); ++a)
                    for (std::size_t b = a + 1; b < group.size(); ++b)
                        if (cosine(vectors[a], vectors[b]) >= config.edge_sim_threshold)
                            sets.unite(a, b);
            } catch (const FixtureMissError&) {
                throw;
            } catch (const Error& e) {
                warn(out.warnings,
                     std::string("relation embedding failed; merging exact duplicates only: ") +
                         e.what());
            }
        }
        for (const auto& component : sets.components()) {
            const Hyperedge& first = rewritten[group[component.front()]];
            Hyperedge merged;
            merged.members = first.members;
            merged.tier = first.tier;
            std::vector<std::string> relations;
            for (std::size_t c : component) {
                const auto& e = rewritten[group[c]];
                relations.push_back(e.relation);
                merged.provenance.insert(e.provenance.begin(), e.provenance.end());
            }
            merged.relation = fuse(relations, "relation", gateway, config, prompts, out.warnings);
            auto [index, appended] = out.graph.add_edge(std::move(merged));
            for (std::size_t c : component) out.edge_map[group[c]] = index;
        }
    }

    require_valid(out.graph);
    return out;
}

}  // namespace hkg
