#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperkg/chunker.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/prompts.hpp"
#include "hyperkg/skill_library.hpp"

namespace hkg {

class Gateway;

struct ExtractionConfig {
    // Coarse to fine. Each pass sees the edges of the passes before it.
    std::vector<Tier> tiers = {Tier::binary, Tier::qualified_binary, Tier::nary};
    bool skills_enabled = true;
    std::size_t max_skills_injected = 20;
    // Retrieval key for skill selection: the first chunk, truncated to this many bytes.
    std::size_t skill_context_chars = 1000;

    void validate() const;
};

// Which rollout a call belongs to. Index keys scripted fixtures; temperature overrides the
// gateway default.
struct Sampling {
    int index = 0;
    std::optional<double> temperature;
};

std::string render_entity_prompt(std::string_view chunk_text,
                                 const PromptTemplates& prompts = PromptTemplates::builtin());

std::string render_known_nodes(const std::vector<Entity>& known);
std::string render_previous_relations(const std::vector<Hyperedge>& edges);
std::string_view tier_guidance(Tier tier);

std::string render_relation_prompt(Tier tier, std::string_view chunk_text,
                                   const std::vector<Entity>& known,
                                   const std::vector<Skill>& skills, bool skills_enabled,
                                   const std::vector<Hyperedge>& previous,
                                   const PromptTemplates& prompts = PromptTemplates::builtin());

// Entities of one chunk, duplicates by canonical name collapsed (first description kept).
// Empty when the model answered with the empty-content sentinel.
std::vector<EntityMention> extract_entities(const Chunk& chunk, Gateway& gateway,
                                            const ExtractionConfig& config, Sampling sampling = {},
                                            const PromptTemplates& prompts = PromptTemplates::builtin());

struct TieredExtraction {
    std::vector<Hyperedge> edges;
    std::vector<TierTrace> traces;
    std::vector<std::string> warnings;
};

// One call per configured tier, in order. Members are restricted to `known` names.
TieredExtraction extract_hyperedges_tiered(const Chunk& chunk, const std::vector<Entity>& known,
                                           const std::vector<Skill>& skills, Gateway& gateway,
                                           const ExtractionConfig& config, Sampling sampling = {},
                                           const PromptTemplates& prompts = PromptTemplates::builtin());

// Retrieval context used to pick skills for a document.
std::string skill_context(std::string_view first_chunk, std::size_t max_bytes);

struct DocumentExtraction {
    RawGraph raw;
    std::vector<std::string> warnings;  // includes per-chunk failures
};

// Chunk, extract per chunk (concurrently), and union into one raw graph in chunk order.
DocumentExtraction extract_document(std::string_view document, std::string source_id,
                                    const SkillLibrary& skills, Gateway& gateway,
                                    const ChunkingConfig& chunk_config,
                                    const ExtractionConfig& extraction_config,
                                    Sampling sampling = {},
                                    const PromptTemplates& prompts = PromptTemplates::builtin());

}  // namespace hkg
