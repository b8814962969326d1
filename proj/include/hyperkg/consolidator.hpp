#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyperkg/model.hpp"
#include "hyperkg/prompts.hpp"

namespace hkg {

class Gateway;

enum class FusionMode { concat_unique, llm_summarize };

struct DedupConfig {
    double entity_sim_threshold = 0.90;
    double edge_sim_threshold = 0.85;
    FusionMode fusion_mode = FusionMode::concat_unique;

    void validate() const;
};

// Text embedded for entity coreference: "name: description" (or just the name).
std::string entity_embedding_text(const Entity& entity);

struct EntityClusters {
    // Mention indices per cluster, ascending; clusters ordered by their first mention.
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::string> canonical_names;
    std::vector<std::string> warnings;
};

// Single-link clustering: fold-equal names always link, and pairs whose embedding cosine
// reaches entity_sim_threshold link. Canonical name: most frequent surface form, then the
// longest, then the lexicographically smallest.
EntityClusters cluster_entities(const std::vector<EntityMention>& mentions, Gateway& gateway,
                                const DedupConfig& config);

// Unique sentences in source order. A single distinct input comes back unchanged.
std::string fuse_texts(const std::vector<std::string>& parts);

struct DedupResult {
    KnowledgeHypergraph graph;
    // For each raw edge, the index of the output edge holding it. nullopt only when the edge
    // named an unknown entity or coreference collapsed it below two distinct members.
    std::vector<std::optional<std::size_t>> edge_map;
    std::vector<std::string> warnings;
};

DedupResult deduplicate_graph(const RawGraph& raw, Gateway& gateway, const DedupConfig& config,
                              const PromptTemplates& prompts = PromptTemplates::builtin());

}  // namespace hkg
