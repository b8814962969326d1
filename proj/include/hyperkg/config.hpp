#pragma once

#include <filesystem>

#include <json.hpp>

#include "hyperkg/chunker.hpp"
#include "hyperkg/consolidator.hpp"
#include "hyperkg/extractor.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/trainer.hpp"

namespace hkg {

struct PathsConfig {
    std::filesystem::path skill_library = "skills.json";
    std::filesystem::path output_dir = "out";
    std::filesystem::path fixtures_dir;
};

// Everything a CLI run needs. Loaded from one JSON file; flags override afterwards.
struct RunConfig {
    GatewayConfig gateway;
    ChunkingConfig chunking;
    ExtractionConfig extraction;
    DedupConfig dedup;
    RolloutConfig rollout;
    PathsConfig paths;
    std::filesystem::path prompts_dir;  // empty: built-in templates only

    PipelineConfig pipeline() const { return {chunking, extraction, dedup}; }
    void validate() const;
};

// Unknown keys are rejected; "chunking" is accepted as an alias of "chunk". Relative paths
// resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace hkg
