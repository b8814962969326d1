#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperkg/gateway.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/text.hpp"

namespace hkg::testing {

enum class PromptRole { entity, relation, unstable, missed, controller, judge, fusion, unknown };

inline PromptRole classify(const std::string& prompt) {
    auto starts = [&](std::string_view p) { return prompt.rfind(p, 0) == 0; };
    if (starts("You are a named entity recognition assistant")) return PromptRole::entity;
    if (starts("You are an expert hypergraph extraction assistant")) return PromptRole::relation;
    if (starts("You are an expert hyperedge extraction coach. Your task is to analyze ONE successful"))
        return PromptRole::unstable;
    if (starts("You are an expert hyperedge extraction coach. Your task is to analyze ONE hard case"))
        return PromptRole::missed;
    if (starts("You are an expert knowledge manager")) return PromptRole::controller;
    if (starts("You are a fact-checking assistant")) return PromptRole::judge;
    if (starts("You are consolidating a knowledge hypergraph")) return PromptRole::fusion;
    return PromptRole::unknown;
}

inline std::optional<Tier> relation_pass(const std::string& prompt) {
    for (Tier t : {Tier::binary, Tier::qualified_binary, Tier::nary})
        if (prompt.find("Current pass: " + std::string(to_string(t)) + "\n") != std::string::npos) return t;
    return std::nullopt;
}

// Text between "Text:" and the end of the entity or relation prompt.
inline std::string prompt_text(const std::string& prompt) {
    auto p = prompt.rfind("Text:");
    return p == std::string::npos ? std::string() : text::trim(prompt.substr(p + 5));
}

inline std::string entities_json(const std::vector<Entity>& entities) {
    if (entities.empty()) return "{State: False}";
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& e : entities)
        nodes.push_back({{"name", e.name}, {"type", e.entity_type}, {"description", e.description}});
    return nlohmann::ordered_json{{"nodes", nodes}}.dump();
}

inline std::string relations_json(const std::vector<Hyperedge>& edges) {
    nlohmann::ordered_json rels = nlohmann::ordered_json::array();
    for (const auto& e : edges)
        rels.push_back({{"description", e.relation}, {"nodes", e.members}, {"type", to_string(e.tier)}});
    return nlohmann::ordered_json{{"relations", rels}}.dump();
}

inline std::string insight_block(const std::string& trigger, const std::string& action) {
    return "<Insight>\nSKILL: RELATION DISCOVERY\nTRIGGER: " + trigger + "\nACTION: " + action +
           "\n</Insight>";
}

// Every distinct text gets its own axis, so cosine is 1 for identical texts and 0 otherwise.
class AxisEmbedder {
public:
    explicit AxisEmbedder(std::size_t dim = 512) : dim_(dim) {}

    Embedding operator()(const std::string& text) {
        std::lock_guard lock(mutex_);
        auto [it, inserted] = axes_.emplace(text, axes_.size());
        if (it->second >= dim_) throw std::runtime_error("AxisEmbedder ran out of axes");
        Embedding v(dim_, 0.0);
        v[it->second] = 1.0;
        return v;
    }

private:
    std::size_t dim_;
    std::mutex mutex_;
    std::map<std::string, std::size_t> axes_;
};

}  // namespace hkg::testing
