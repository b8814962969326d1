#include "hyperkg/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "hyperkg/error.hpp"

namespace hkg {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

// Applies `setters` to the members of object `j`, rejecting anything unknown.
void apply_section(const json& j, const std::string& section,
                   const std::map<std::string, Setter>& setters) {
    if (!j.is_object()) throw InvalidInput("config: '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        const auto path = section.empty() ? key : section + "." + key;
        auto it = setters.find(key);
        if (it == setters.end()) throw InvalidInput("config: unknown key '" + path + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw InvalidInput("config: bad value for '" + path + "': " + e.what());
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.empty() || path.is_absolute() || base.empty()) return path;
    return base / path;
}

template <class T>
Setter set(T& field) {
    return [&field](const json& v) { field = v.get<T>(); };
}

}  // namespace

void RunConfig::validate() const {
    gateway.validate();
    chunking.validate();
    extraction.validate();
    dedup.validate();
    rollout.validate();
    if (paths.output_dir.empty()) throw InvalidInput("paths.output_dir must not be empty");
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    RunConfig c;
    auto& g = c.gateway;
    auto path_setter = [&](std::filesystem::path& field) -> Setter {
        return [&field, &base_dir](const json& v) { field = resolve(base_dir, v.get<std::string>()); };
    };
    auto ms_setter = [](std::chrono::milliseconds& field) -> Setter {
        return [&field](const json& v) { field = std::chrono::milliseconds(v.get<long>()); };
    };

    std::map<std::string, Setter> retry{
        {"max_attempts", set(g.retry.max_attempts)},
        {"initial_backoff_ms", ms_setter(g.retry.initial_backoff)},
        {"multiplier", set(g.retry.multiplier)},
        {"max_backoff_ms", ms_setter(g.retry.max_backoff)},
    };
    std::map<std::string, Setter> gateway{
        {"provider",
         [&](const json& v) {
             const auto name = v.get<std::string>();
             if (name == "scripted")
                 g.provider = ProviderKind::scripted;
             else if (name == "live")
                 g.provider = ProviderKind::live;
             else
                 throw InvalidInput("config: gateway.provider must be 'scripted' or 'live'");
         }},
        {"model_id", set(g.model_id)},
        {"temperature", set(g.temperature)},
        {"max_parallel", set(g.max_parallel)},
        {"retry", [&](const json& v) { apply_section(v, "gateway.retry", retry); }},
        {"embedding_model_id", set(g.embedding_model_id)},
        {"base_url", set(g.base_url)},
        {"api_key_env", set(g.api_key_env)},
        {"timeout_seconds", set(g.timeout_seconds)},
    };
    std::map<std::string, Setter> chunking{
        {"target_size", set(c.chunking.target_size)},
        {"overlap", set(c.chunking.overlap)},
        {"boundary_markers", set(c.chunking.boundary_markers)},
    };
    std::map<std::string, Setter> extraction{
        {"tiers",
         [&](const json& v) {
             c.extraction.tiers.clear();
             for (const auto& label : v.get<std::vector<std::string>>()) {
                 auto tier = parse_tier(label);
                 if (!tier) throw InvalidInput("config: unknown tier '" + label + "'");
                 c.extraction.tiers.push_back(*tier);
             }
         }},
        {"skills_enabled", set(c.extraction.skills_enabled)},
        {"max_skills_injected", set(c.extraction.max_skills_injected)},
        {"skill_context_chars", set(c.extraction.skill_context_chars)},
    };
    std::map<std::string, Setter> dedup{
        {"entity_sim_threshold", set(c.dedup.entity_sim_threshold)},
        {"edge_sim_threshold", set(c.dedup.edge_sim_threshold)},
        {"fusion_mode",
         [&](const json& v) {
             const auto name = v.get<std::string>();
             if (name == "concat_unique")
                 c.dedup.fusion_mode = FusionMode::concat_unique;
             else if (name == "llm_summarize")
                 c.dedup.fusion_mode = FusionMode::llm_summarize;
             else
                 throw InvalidInput("config: dedup.fusion_mode must be 'concat_unique' or 'llm_summarize'");
         }},
    };
    std::map<std::string, Setter> rollout{
        {"k_samples", set(c.rollout.k_samples)},
        {"temperature", set(c.rollout.temperature)},
        {"train_match_threshold", set(c.rollout.train_match_threshold)},
        {"update_between_documents", set(c.rollout.update_between_documents)},
    };
    std::map<std::string, Setter> paths{
        {"skill_library", path_setter(c.paths.skill_library)},
        {"output_dir", path_setter(c.paths.output_dir)},
        {"fixtures_dir", path_setter(c.paths.fixtures_dir)},
    };
    std::map<std::string, Setter> top{
        {"gateway", [&](const json& v) { apply_section(v, "gateway", gateway); }},
        {"chunk", [&](const json& v) { apply_section(v, "chunk", chunking); }},
        {"chunking", [&](const json& v) { apply_section(v, "chunking", chunking); }},
        {"extraction", [&](const json& v) { apply_section(v, "extraction", extraction); }},
        {"dedup", [&](const json& v) { apply_section(v, "dedup", dedup); }},
        {"rollout", [&](const json& v) { apply_section(v, "rollout", rollout); }},
        {"paths", [&](const json& v) { apply_section(v, "paths", paths); }},
        {"prompts_dir", path_setter(c.prompts_dir)},
    };
    apply_section(j, "", top);
    c.gateway.fixtures_dir = c.paths.fixtures_dir;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    const auto& g = c.gateway;
    std::vector<std::string> tiers;
    for (Tier t : c.extraction.tiers) tiers.emplace_back(to_string(t));
    return {
        {"gateway",
         {{"provider", g.provider == ProviderKind::live ? "live" : "scripted"},
          {"model_id", g.model_id},
          {"temperature", g.temperature},
          {"max_parallel", g.max_parallel},
          {"retry",
           {{"max_attempts", g.retry.max_attempts},
            {"initial_backoff_ms", g.retry.initial_backoff.count()},
            {"multiplier", g.retry.multiplier},
            {"max_backoff_ms", g.retry.max_backoff.count()}}},
          {"embedding_model_id", g.embedding_model_id},
          {"base_url", g.base_url},
          {"api_key_env", g.api_key_env},
          {"timeout_seconds", g.timeout_seconds}}},
        {"chunk",
         {{"target_size", c.chunking.target_size},
          {"overlap", c.chunking.overlap},
          {"boundary_markers", c.chunking.boundary_markers}}},
        {"extraction",
         {{"tiers", tiers},
          {"skills_enabled", c.extraction.skills_enabled},
          {"max_skills_injected", c.extraction.max_skills_injected},
          {"skill_context_chars", c.extraction.skill_context_chars}}},
        {"dedup",
         {{"entity_sim_threshold", c.dedup.entity_sim_threshold},
          {"edge_sim_threshold", c.dedup.edge_sim_threshold},
          {"fusion_mode",
           c.dedup.fusion_mode == FusionMode::concat_unique ? "concat_unique" : "llm_summarize"}}},
        {"rollout",
         {{"k_samples", c.rollout.k_samples},
          {"temperature", c.rollout.temperature},
          {"train_match_threshold", c.rollout.train_match_threshold},
          {"update_between_documents", c.rollout.update_between_documents}}},
        {"paths",
         {{"skill_library", c.paths.skill_library.string()},
          {"output_dir", c.paths.output_dir.string()},
          {"fixtures_dir", c.paths.fixtures_dir.string()}}},
        {"prompts_dir", c.prompts_dir.string()},
    };
}

}  // namespace hkg
