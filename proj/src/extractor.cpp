#include "hyperkg/extractor.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/parallel.hpp"
#include "hyperkg/parsers.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

void ExtractionConfig::validate() const {
    if (tiers.empty()) throw InvalidInput("extraction.tiers must not be empty");
    std::set<Tier> seen;
    for (Tier t : tiers)
        if (!seen.insert(t).second)
            throw InvalidInput("extraction.tiers lists " + std::string(to_string(t)) + " twice");
    if (max_skills_injected == 0) throw InvalidInput("extraction.max_skills_injected must be >= 1");
}

std::string render_entity_prompt(std::string_view chunk_text, const PromptTemplates& prompts) {
    return prompts.render(PromptKind::entity_extraction, {{"text", std::string(chunk_text)}});
}

std::string render_known_nodes(const std::vector<Entity>& known) {
    std::vector<std::string> names;
    for (const auto& e : known) names.push_back(e.name);
    return text::join(names, "; ");
}

std::string render_previous_relations(const std::vector<Hyperedge>& edges) {
    if (edges.empty()) return "(none)";
    std::string out;
    for (const auto& e : edges) {
        if (!out.empty()) out += "\n";
        out += "- {" + text::join(e.members, "; ") + "} -> " + e.relation;
    }
    return out;
}

std::string_view tier_guidance(Tier tier) {
    switch (tier) {
        case Tier::binary:
            return "Extract BINARY relations (the structural skeleton): each relation links exactly "
                   "two Known nodes, subject and object, without qualifiers.";
        case Tier::qualified_binary:
            return "Extract QUALIFIED BINARY relations: a binary link augmented with qualifying "
                   "arguments such as time, location or condition. Each relation lists the linked "
                   "pair plus at least one qualifier node (3 or more nodes).";
        case Tier::nary:
            return "Extract general N-ARY relations: whole events or story plots in which several "
                   "Known nodes jointly participate. List every participant of the event as one "
                   "relation instance.";
    }
    return "";
}

std::string render_relation_prompt(Tier tier, std::string_view chunk_text,
                                   const std::vector<Entity>& known,
                                   const std::vector<Skill>& skills, bool skills_enabled,
                                   const std::vector<Hyperedge>& previous,
                                   const PromptTemplates& prompts) {
    static const std::vector<Skill> none;
    return prompts.render(PromptKind::relation_extraction,
                          {{"text", std::string(chunk_text)},
                           {"known nodes", render_known_nodes(known)},
                           {"experiences", render_skill_block(skills_enabled ? skills : none)},
                           {"tier", std::string(to_string(tier))},
                           {"tier guidance", std::string(tier_guidance(tier))},
                           {"previous relations", render_previous_relations(previous)}});
}

std::vector<EntityMention> extract_entities(const Chunk& chunk, Gateway& gateway,
                                            const ExtractionConfig&, Sampling sampling,
                                            const PromptTemplates& prompts) {
    std::string raw;
    EntityParse parsed;
    try {
        raw = gateway.complete(render_entity_prompt(chunk.text, prompts), sampling.index,
                               sampling.temperature);
        parsed = parse_entities(raw);
    } catch (const ParseError& e) {
        throw ParseError("chunk " + chunk.id + ": " + e.what(), e.raw());
    } catch (const FixtureMissError&) {
        throw;
    } catch (const GatewayError& e) {
        throw GatewayError("chunk " + chunk.id + ": " + e.what(), e.retryable());
    }
    if (std::holds_alternative<EmptyContent>(parsed)) return {};

    std::vector<EntityMention> out;
    std::set<std::string> seen;
    for (auto& e : std::get<std::vector<Entity>>(parsed)) {
        if (!seen.insert(e.name).second) continue;
        out.push_back({std::move(e), chunk.id});
    }
    return out;
}

namespace {

Tier assign_tier(Tier pass, std::size_t members) {
    if (tier_admits(pass, members)) return pass;
    return members == 2 ? Tier::binary : Tier::nary;
}

}  // namespace

TieredExtraction extract_hyperedges_tiered(const Chunk& chunk, const std::vector<Entity>& known,
                                           const std::vector<Skill>& skills, Gateway& gateway,
                                           const ExtractionConfig& config, Sampling sampling,
                                           const PromptTemplates& prompts) {
    config.validate();
    if (known.empty()) throw InvalidInput("chunk " + chunk.id + ": no known entities to relate");

    std::map<std::string, std::string> exact, folded;
    for (const auto& e : known) {
        exact.emplace(e.name, e.name);
        folded.emplace(fold_key(e.name), e.name);
    }
    auto resolve = [&](const std::string& node) -> std::optional<std::string> {
        auto canon = canonicalize_name(node);
        if (auto it = exact.find(canon); it != exact.end()) return it->second;
        if (auto it = folded.find(fold_key(canon)); it != folded.end()) return it->second;
        return std::nullopt;
    };

    TieredExtraction out;
    std::size_t failed = 0;
    for (Tier tier : config.tiers) {
        auto prompt = render_relation_prompt(tier, chunk.text, known, skills,
                                             config.skills_enabled, out.edges, prompts);
        std::vector<RelationCandidate> candidates;
        try {
            auto raw = gateway.complete(prompt, sampling.index, sampling.temperature);
            out.traces.push_back({chunk.id, tier, raw});
            candidates = parse_relations(raw);
        } catch (const ParseError& e) {
            ++failed;
            out.warnings.push_back("chunk " + chunk.id + " tier " + std::string(to_string(tier)) +
                                   ": " + e.what());
            spdlog::warn("{}", out.warnings.back());
            continue;
        }
        for (const auto& c : candidates) {
            Hyperedge edge;
            edge.relation = text::trim(c.description);
            for (const auto& node : c.nodes) {
                auto name = resolve(node);
                if (!name) continue;
                if (std::find(edge.members.begin(), edge.members.end(), *name) == edge.members.end())
                    edge.members.push_back(*name);
            }
            if (edge.relation.empty() || edge.members.size() < 2) {
                out.warnings.push_back("chunk " + chunk.id + " tier " +
                                       std::string(to_string(tier)) + ": dropped relation '" +
                                       c.description + "' (" +
                                       std::to_string(edge.members.size()) + " known members)");
                continue;
            }
            edge.tier = assign_tier(tier, edge.members.size());
            edge.provenance.insert(chunk.id);
            out.edges.push_back(std::move(edge));
        }
    }
    if (failed == config.tiers.size())
        throw ExtractionError("chunk " + chunk.id + ": every tier failed to parse");
    return out;
}

std::string skill_context(std::string_view first_chunk, std::size_t max_bytes) {
    if (first_chunk.size() <= max_bytes) return std::string(first_chunk);
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(first_chunk[cut]) & 0xC0) == 0x80) --cut;
    return std::string(first_chunk.substr(0, cut));
}

DocumentExtraction extract_document(std::string_view document, std::string source_id,
                                    const SkillLibrary& library, Gateway& gateway,
                                    const ChunkingConfig& chunk_config,
                                    const ExtractionConfig& extraction_config, Sampling sampling,
                                    const PromptTemplates& prompts) {
    extraction_config.validate();
    if (document.empty()) throw InvalidInput("cannot extract from an empty document");
    auto chunks = chunk_document(document, chunk_config);

    std::vector<Skill> skills;
    if (extraction_config.skills_enabled && !library.empty()) {
        skills = select_skills(library,
                               skill_context(chunks.front().text,
                                             extraction_config.skill_context_chars),
                               extraction_config.max_skills_injected, gateway);
    }

    struct ChunkResult {
        std::vector<EntityMention> mentions;
        TieredExtraction tiered;
    };
    std::vector<ChunkResult> results(chunks.size());
    auto errors = parallel_for(chunks.size(), gateway.max_parallel(), [&](std::size_t i) {
        auto& r = results[i];
        r.mentions = extract_entities(chunks[i], gateway, extraction_config, sampling, prompts);
        if (r.mentions.empty()) return;
        std::vector<Entity> known;
        for (const auto& m : r.mentions) known.push_back(m.entity);
        r.tiered = extract_hyperedges_tiered(chunks[i], known, skills, gateway,
                                             extraction_config, sampling, prompts);
    });

    DocumentExtraction out;
    out.raw.source_id = std::move(source_id);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (errors[i]) {
            ++failures;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const FixtureMissError&) {
                throw;
            } catch (const std::exception& e) {
                out.warnings.push_back("chunk " + chunks[i].id + " failed: " + e.what());
                spdlog::warn("{}", out.warnings.back());
            }
            continue;
        }
        auto& r = results[i];
        for (auto& m : r.mentions) out.raw.mentions.push_back(std::move(m));
        for (auto& e : r.tiered.edges) out.raw.edges.push_back(std::move(e));
        for (auto& t : r.tiered.traces) out.raw.traces.push_back(std::move(t));
        for (auto& w : r.tiered.warnings) out.warnings.push_back(std::move(w));
    }
    if (failures == chunks.size()) {
        std::string msg = "every chunk failed";
        for (const auto& w : out.warnings) msg += "; " + w;
        throw ExtractionError(msg);
    }
    return out;
}

}  // namespace hkg
