#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hyperkg/chunker.hpp"
#include "hyperkg/consolidator.hpp"
#include "hyperkg/evaluator.hpp"
#include "hyperkg/extractor.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/parsers.hpp"
#include "hyperkg/prompts.hpp"
#include "hyperkg/skill_library.hpp"

namespace hkg {

class Gateway;

struct RolloutConfig {
    std::size_t k_samples = 4;
    double temperature = 0.8;
    double train_match_threshold = 0.70;
    // Apply controller ops after each document (true) or only once the round ends.
    bool update_between_documents = true;

    void validate() const;
};

struct PipelineConfig {
    ChunkingConfig chunking;
    ExtractionConfig extraction;
    DedupConfig dedup;

    void validate() const;
};

struct PipelineOutput {
    KnowledgeHypergraph graph;
    std::vector<TierTrace> traces;
    std::vector<std::string> warnings;
};

// Extraction followed by consolidation.
PipelineOutput run_pipeline(std::string_view document, const std::string& source_id,
                            const SkillLibrary& skills, Gateway& gateway,
                            const PipelineConfig& config, Sampling sampling = {},
                            const PromptTemplates& prompts = PromptTemplates::builtin());

struct RolloutSet {
    std::string document_id;
    std::vector<PipelineOutput> candidates;  // sample index order
};

// K independent pipeline runs with sample_index 0..K-1 at the rollout temperature.
// A failed sample is retried once; a second failure throws RolloutError.
RolloutSet sample_rollouts(std::string_view document, const std::string& document_id,
                           const SkillLibrary& skills, Gateway& gateway,
                           const RolloutConfig& rollout, const PipelineConfig& pipeline,
                           const PromptTemplates& prompts = PromptTemplates::builtin());

struct Witness {
    std::size_t candidate = 0;
    std::size_t edge = 0;  // index into that candidate's hyperedges()
    double similarity = 0.0;

    friend bool operator==(const Witness&, const Witness&) = default;
};

// Gold edges are identified by their index in gold.hyperedges().
struct StabilityPartition {
    std::size_t k = 0;
    std::vector<std::size_t> counts;
    std::set<std::size_t> stable;
    std::set<std::size_t> unstable;
    std::set<std::size_t> missed;
    std::map<std::size_t, std::vector<Witness>> witnesses;  // every gold id with count > 0
};

// Partition from one MatchResult per candidate (pred = candidate edges, gold = gold edges).
// A gold edge is retrieved in a candidate when its assigned similarity is >= threshold.
StabilityPartition partition_from_matches(std::size_t n_gold,
                                          const std::vector<MatchResult>& per_candidate,
                                          double threshold);

StabilityPartition partition_by_stability(const RolloutSet& rollouts,
                                          const KnowledgeHypergraph& gold, Gateway& gateway,
                                          const RolloutConfig& config);

struct Reflection {
    InsightProposal proposal;
    std::vector<std::string> warnings;
};

// Distills a skill from the first witnessing candidate of an unstable gold edge. The
// reasoning slot carries that candidate's raw responses from the edge's chunks that name
// its relation (or, failing that, the responses of the pass for its tier).
Reflection induce_from_unstable(const Hyperedge& gold_edge, const std::vector<Witness>& witnesses,
                                const RolloutSet& rollouts, std::string_view document,
                                Gateway& gateway,
                                const PromptTemplates& prompts = PromptTemplates::builtin());

// Hindsight reflection on a missed gold edge: the text and the gold edge only.
Reflection hindsight_from_missed(const Hyperedge& gold_edge, std::string_view document,
                                 Gateway& gateway,
                                 const PromptTemplates& prompts = PromptTemplates::builtin());

struct TrainingExample {
    std::string document_id;
    std::string document;
    KnowledgeHypergraph gold;
};

struct ManifestEntry {
    std::filesystem::path document_path;
    std::filesystem::path gold_graph_path;
};

// JSON list of {document_path, gold_graph_path}; relative paths resolve against the
// manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::vector<TrainingExample> load_training_examples(const std::vector<ManifestEntry>& entries);

struct RoundResult {
    SkillLibrary library;
    nlohmann::ordered_json report;
};

// One pass over the training documents. Documents run in order; a failing document is
// recorded in the report and skipped. Throws Error when every document fails.
RoundResult run_learning_round(const std::vector<TrainingExample>& examples,
                               const SkillLibrary& library, Gateway& gateway,
                               const RolloutConfig& rollout, const PipelineConfig& pipeline,
                               const PromptTemplates& prompts = PromptTemplates::builtin());

}  // namespace hkg
