#pragma once

#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hyperkg/model.hpp"
#include "hyperkg/prompts.hpp"

namespace hkg {

class Gateway;

// Row-major rows x cols matrix of similarities (rows: predicted, cols: gold).
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

// Maximum-weight one-to-one assignment (Kuhn-Munkres with potentials, O(n^2 m)).
// Returns, per row, the assigned column or kUnassigned. Exactly min(rows, cols) rows assigned.
std::vector<std::size_t> max_weight_assignment(const SimilarityMatrix& weights);

struct Assignment {
    std::size_t pred = 0;
    std::size_t gold = 0;
    double similarity = 0.0;
};

struct MatchResult {
    std::vector<Assignment> assignment;  // ordered by gold index
    std::set<std::size_t> unmatched_pred;
    std::set<std::size_t> unmatched_gold;

    double total_similarity() const;
};

MatchResult match_similarity(const SimilarityMatrix& similarity);

// "relation; participants: a, b, c" with members sorted.
std::string render_for_matching(const Hyperedge& edge);

SimilarityMatrix relation_similarity(const std::vector<Hyperedge>& pred,
                                     const std::vector<Hyperedge>& gold, Gateway& gateway);

MatchResult match_relations(const std::vector<Hyperedge>& pred, const std::vector<Hyperedge>& gold,
                            Gateway& gateway);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// 2PR / (P + R), or 0 when P + R = 0.
double f1_score(double precision, double recall);
PRF prf_from_counts(std::size_t tp, std::size_t n_pred, std::size_t n_gold);

// Assigned pairs with similarity >= threshold.
std::size_t true_positives(const MatchResult& match, double threshold);

PRF score_prf(const MatchResult& match, double threshold, std::size_t n_pred, std::size_t n_gold);

struct DocCounts {
    std::size_t tp = 0;
    std::size_t n_pred = 0;
    std::size_t n_gold = 0;
};

struct CorpusScores {
    PRF micro;
    PRF macro;
};

// Micro pools counts; macro averages per-document P, R and F1 without weighting.
CorpusScores aggregate_corpus(const std::vector<DocCounts>& per_doc);

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MatchedDocument {
    std::string name;
    MatchResult match;
    std::size_t n_pred = 0;
    std::size_t n_gold = 0;
};

// One micro-pooled point per threshold. Thresholds must be ascending and in (0, 1].
std::vector<PRPoint> build_pr_curve(const std::vector<MatchedDocument>& docs,
                                    const std::vector<double>& thresholds);

// CSV with header threshold,precision,recall,f1.
std::string pr_curve_csv(const std::vector<PRPoint>& points);

inline const std::vector<double> kDefaultThresholds = {0.65, 0.70, 0.75};

struct NamedGraphPair {
    std::string name;
    KnowledgeHypergraph pred;
    KnowledgeHypergraph gold;
};

struct CorpusEvaluation {
    std::vector<MatchedDocument> docs;
    std::vector<PRPoint> curve;
    nlohmann::ordered_json report;
};

// Matches every pair and reports per-document and micro/macro scores at each threshold.
CorpusEvaluation evaluate_corpus(const std::vector<NamedGraphPair>& pairs, Gateway& gateway,
                                 const std::vector<double>& thresholds = kDefaultThresholds);

// --- fact coverage -------------------------------------------------------------------------

// Text embedded for entity retrieval.
std::string entity_retrieval_text(const Entity& entity);

struct ScoredEntity {
    std::string name;
    double score = 0.0;
};

// All entities, best match first; ties by name.
std::vector<ScoredEntity> rank_entities(std::string_view query, const KnowledgeHypergraph& graph,
                                        Gateway& gateway);

// Subgraph reached from `seeds` in `hops` incidence steps. One step: entity -> incident edges
// -> their members. Holds the reached entities and every traversed edge.
KnowledgeHypergraph expand_incidence(const KnowledgeHypergraph& graph,
                                     const std::vector<std::string>& seeds, std::size_t hops);

std::string render_evidence(const KnowledgeHypergraph& evidence);

struct FactVerdict {
    std::string fact;
    int supported = 0;
    std::vector<std::string> seeds;
    KnowledgeHypergraph evidence;
};

FactVerdict verify_fact(std::string_view fact, const KnowledgeHypergraph& graph, Gateway& gateway,
                        std::size_t top_n = 5, std::size_t hops = 2,
                        const PromptTemplates& prompts = PromptTemplates::builtin());

struct FactCheckReport {
    std::vector<FactVerdict> verdicts;
    double accuracy = 0.0;
    nlohmann::ordered_json to_json() const;
};

FactCheckReport check_facts(const std::vector<std::string>& facts, const KnowledgeHypergraph& graph,
                            Gateway& gateway, std::size_t top_n = 5, std::size_t hops = 2,
                            const PromptTemplates& prompts = PromptTemplates::builtin());

struct ScoredEdge {
    std::size_t index = 0;  // into graph.hyperedges()
    double score = 0.0;
};

struct EvidenceBundle {
    std::vector<ScoredEntity> entities;  // best first
    std::vector<ScoredEdge> edges;       // best first
    bool empty() const { return entities.empty() && edges.empty(); }
};

// Top-k entities (expanded one hop) and top-k hyperedges (with their members), deduplicated.
EvidenceBundle retrieve_evidence(std::string_view query, const KnowledgeHypergraph& graph,
                                 Gateway& gateway, std::size_t k);

}  // namespace hkg
