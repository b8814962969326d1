#include "hyperkg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "hyperkg/consolidator.hpp"
#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/parallel.hpp"
#include "hyperkg/parsers.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

// ------------------------------------------------------------------ assignment

namespace {

// Minimum-cost assignment of every row (rows <= cols). cost(i, j) is 0-based.
template <class Cost>
std::vector<std::size_t> min_cost_rows(std::size_t n, std::size_t m, Cost cost) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, kUnassigned);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

std::vector<std::size_t> max_weight_assignment(const SimilarityMatrix& w) {
    const std::size_t rows = w.rows(), cols = w.cols();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (!std::isfinite(w(r, c))) throw InvalidInput("similarity matrix holds a non-finite value");
    if (rows == 0 || cols == 0) return std::vector<std::size_t>(rows, kUnassigned);
    if (rows <= cols)
        return min_cost_rows(rows, cols, [&](std::size_t i, std::size_t j) { return -w(i, j); });
    auto col_to_row =
        min_cost_rows(cols, rows, [&](std::size_t i, std::size_t j) { return -w(j, i); });
    std::vector<std::size_t> row_to_col(rows, kUnassigned);
    for (std::size_t c = 0; c < cols; ++c) row_to_col[col_to_row[c]] = c;
    return row_to_col;
}

double MatchResult::total_similarity() const {
    double total = 0.0;
    for (const auto& a : assignment) total += a.similarity;
    return total;
}

MatchResult match_similarity(const SimilarityMatrix& similarity) {
    MatchResult out;
    auto row_to_col = max_weight_assignment(similarity);
    std::vector<bool> gold_used(similarity.cols(), false);
    for (std::size_t r = 0; r < row_to_col.size(); ++r) {
        if (row_to_col[r] == kUnassigned) {
            out.unmatched_pred.insert(r);
            continue;
        }
        out.assignment.push_back({r, row_to_col[r], similarity(r, row_to_col[r])});
        gold_used[row_to_col[r]] = true;
    }
    for (std::size_t c = 0; c < gold_used.size(); ++c)
        if (!gold_used[c]) out.unmatched_gold.insert(c);
    std::sort(out.assignment.begin(), out.assignment.end(),
              [](const Assignment& a, const Assignment& b) { return a.gold < b.gold; });
    return out;
}

std::string render_for_matching(const Hyperedge& edge) {
    std::vector<std::string> members = edge.members;
    std::sort(members.begin(), members.end());
    return edge.relation + "; participants: " + text::join(members, ", ");
}

SimilarityMatrix relation_similarity(const std::vector<Hyperedge>& pred,
                                     const std::vector<Hyperedge>& gold, Gateway& gateway) {
    SimilarityMatrix sim(pred.size(), gold.size());
    if (pred.empty() || gold.empty()) return sim;
    std::vector<std::string> texts;
    for (const auto& e : pred) texts.push_back(render_for_matching(e));
    for (const auto& e : gold) texts.push_back(render_for_matching(e));
    std::vector<Embedding> vectors;
    try {
        vectors = gateway.embed(texts);
    } catch (const GatewayError& e) {
        throw GatewayError(std::string("relation matching: ") + e.what(), e.retryable());
    }
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = 0; j < gold.size(); ++j)
            sim(i, j) = std::clamp(cosine(vectors[i], vectors[pred.size() + j]), -1.0, 1.0);
    return sim;
}

MatchResult match_relations(const std::vector<Hyperedge>& pred, const std::vector<Hyperedge>& gold,
                            Gateway& gateway) {
    return match_similarity(relation_similarity(pred, gold, gateway));
}

// ------------------------------------------------------------------ scores

double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

PRF prf_from_counts(std::size_t tp, std::size_t n_pred, std::size_t n_gold) {
    PRF s;
    s.precision = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
    s.recall = n_gold ? static_cast<double>(tp) / static_cast<double>(n_gold) : 0.0;
    s.f1 = f1_score(s.precision, s.recall);
    return s;
}

std::size_t true_positives(const MatchResult& match, double threshold) {
    return static_cast<std::size_t>(
        std::count_if(match.assignment.begin(), match.assignment.end(),
                      [&](const Assignment& a) { return a.similarity >= threshold; }));
}

PRF score_prf(const MatchResult& match, double threshold, std::size_t n_pred, std::size_t n_gold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidInput("threshold must be in (0, 1]");
    return prf_from_counts(true_positives(match, threshold), n_pred, n_gold);
}

CorpusScores aggregate_corpus(const std::vector<DocCounts>& per_doc) {
    if (per_doc.empty()) throw InvalidInput("aggregate_corpus needs at least one document");
    DocCounts pooled;
    PRF sum;
    for (const auto& d : per_doc) {
        pooled.tp += d.tp;
        pooled.n_pred += d.n_pred;
        pooled.n_gold += d.n_gold;
        auto s = prf_from_counts(d.tp, d.n_pred, d.n_gold);
        sum.precision += s.precision;
        sum.recall += s.recall;
        sum.f1 += s.f1;
    }
    const double n = static_cast<double>(per_doc.size());
    CorpusScores out;
    out.micro = prf_from_counts(pooled.tp, pooled.n_pred, pooled.n_gold);
    out.macro = {sum.precision / n, sum.recall / n, sum.f1 / n};
    return out;
}

std::vector<PRPoint> build_pr_curve(const std::vector<MatchedDocument>& docs,
                                    const std::vector<double>& thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw InvalidInput("PR-curve thresholds must be sorted ascending");
    std::vector<PRPoint> out;
    for (double t : thresholds) {
        if (!(t > 0.0 && t <= 1.0)) throw InvalidInput("threshold must be in (0, 1]");
        DocCounts pooled;
        for (const auto& d : docs) {
            pooled.tp += true_positives(d.match, t);
            pooled.n_pred += d.n_pred;
            pooled.n_gold += d.n_gold;
        }
        auto s = prf_from_counts(pooled.tp, pooled.n_pred, pooled.n_gold);
        out.push_back({t, s.precision, s.recall, s.f1});
    }
    return out;
}

std::string pr_curve_csv(const std::vector<PRPoint>& points) {
    std::ostringstream out;
    out << "threshold,precision,recall,f1\n" << std::fixed;
    for (const auto& p : points)
        out << std::setprecision(2) << p.threshold << ',' << std::setprecision(6) << p.precision
            << ',' << p.recall << ',' << p.f1 << '\n';
    return out.str();
}

namespace {

nlohmann::ordered_json prf_json(const PRF& s) {
    return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

std::string threshold_key(double t) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << t;
    return ss.str();
}

}  // namespace

CorpusEvaluation evaluate_corpus(const std::vector<NamedGraphPair>& pairs, Gateway& gateway,
                                 const std::vector<double>& thresholds) {
    if (pairs.empty()) throw InvalidInput("evaluation needs at least one document pair");
    CorpusEvaluation out;
    for (const auto& pair : pairs) {
        MatchedDocument d;
        d.name = pair.name;
        d.match = match_relations(pair.pred.hyperedges(), pair.gold.hyperedges(), gateway);
        d.n_pred = pair.pred.hyperedges().size();
        d.n_gold = pair.gold.hyperedges().size();
        out.docs.push_back(std::move(d));
    }
    out.curve = build_pr_curve(out.docs, thresholds);

    auto& r = out.report;
    r["metadata"] = {{"embedding_model_id", gateway.config().embedding_model_id},
                     {"match_text", "relation + participants"},
                     {"thresholds", thresholds}};
    nlohmann::ordered_json per_doc = nlohmann::ordered_json::array();
    for (const auto& d : out.docs) {
        nlohmann::ordered_json jd;
        jd["document"] = d.name;
        jd["n_pred"] = d.n_pred;
        jd["n_gold"] = d.n_gold;
        jd["total_similarity"] = d.match.total_similarity();
        nlohmann::ordered_json scores;
        for (double t : thresholds) {
            auto tp = true_positives(d.match, t);
            auto s = prf_from_counts(tp, d.n_pred, d.n_gold);
            auto js = prf_json(s);
            js["tp"] = tp;
            scores[threshold_key(t)] = js;
        }
        jd["scores"] = std::move(scores);
        per_doc.push_back(std::move(jd));
    }
    r["documents"] = std::move(per_doc);
    nlohmann::ordered_json aggregates;
    for (double t : thresholds) {
        std::vector<DocCounts> counts;
        for (const auto& d : out.docs) counts.push_back({true_positives(d.match, t), d.n_pred, d.n_gold});
        auto agg = aggregate_corpus(counts);
        aggregates[threshold_key(t)] = {{"micro", prf_json(agg.micro)}, {"macro", prf_json(agg.macro)}};
    }
    r["aggregates"] = std::move(aggregates);
    return out;
}

// ------------------------------------------------------------------ fact coverage

std::string entity_retrieval_text(const Entity& entity) { return entity_embedding_text(entity); }

std::vector<ScoredEntity> rank_entities(std::string_view query, const KnowledgeHypergraph& graph,
                                        Gateway& gateway) {
    std::vector<ScoredEntity> out;
    if (graph.entities().empty()) return out;
    std::vector<std::string> texts{std::string(query)};
    for (const auto& [name, e] : graph.entities()) texts.push_back(entity_retrieval_text(e));
    auto vectors = gateway.embed(texts);
    std::size_t i = 1;
    for (const auto& [name, e] : graph.entities()) out.push_back({name, cosine(vectors[0], vectors[i++])});
    std::stable_sort(out.begin(), out.end(),
                     [](const ScoredEntity& a, const ScoredEntity& b) { return a.score > b.score; });
    return out;
}

KnowledgeHypergraph expand_incidence(const KnowledgeHypergraph& graph,
                                     const std::vector<std::string>& seeds, std::size_t hops) {
    std::map<std::string, std::vector<std::size_t>> incident;
    const auto& edges = graph.hyperedges();
    for (std::size_t i = 0; i < edges.size(); ++i)
        for (const auto& m : edges[i].members) incident[m].push_back(i);

    std::set<std::string> reached;
    std::set<std::size_t> traversed;
    std::vector<std::string> frontier;
    for (const auto& s : seeds) {
        auto name = canonicalize_name(s);
        if (graph.entities().count(name) && reached.insert(name).second) frontier.push_back(name);
    }
    for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const auto& entity : frontier) {
            for (std::size_t e : incident[entity]) {
                if (!traversed.insert(e).second) continue;
                for (const auto& m : edges[e].members)
                    if (reached.insert(m).second) next.push_back(m);
            }
        }
        frontier = std::move(next);
    }

    KnowledgeHypergraph out(graph.source_id());
    for (const auto& name : reached) out.upsert_entity(graph.entities().at(name));
    for (std::size_t e : traversed) out.add_edge(edges[e]);
    return out;
}

namespace {

std::string entity_lines(const KnowledgeHypergraph& evidence) {
    std::string out;
    for (const auto& [name, e] : evidence.entities()) {
        out += "- " + name;
        if (!e.entity_type.empty()) out += " (" + e.entity_type + ")";
        if (!e.description.empty()) out += ": " + e.description;
        out += "\n";
    }
    return out.empty() ? "(none)" : text::trim(out);
}

std::string relation_lines(const KnowledgeHypergraph& evidence) {
    std::string out;
    for (std::size_t idx : canonical_edge_order(evidence.hyperedges())) {
        const auto& e = evidence.hyperedges()[idx];
        out += "- {" + text::join(e.members, "; ") + "} -> " + e.relation + "\n";
    }
    return out.empty() ? "(none)" : text::trim(out);
}

}  // namespace

std::string render_evidence(const KnowledgeHypergraph& evidence) {
    return "Entities:\n" + entity_lines(evidence) + "\n\nRelations:\n" + relation_lines(evidence) +
           "\n";
}

FactVerdict verify_fact(std::string_view fact, const KnowledgeHypergraph& graph, Gateway& gateway,
                        std::size_t top_n, std::size_t hops, const PromptTemplates& prompts) {
    if (graph.entities().empty()) throw InvalidInput("fact verification needs a non-empty graph");
    if (text::trim(fact).empty()) throw InvalidInput("fact must not be empty");
    FactVerdict out;
    out.fact = std::string(fact);
    auto ranked = rank_entities(fact, graph, gateway);
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) out.seeds.push_back(ranked[i].name);
    out.evidence = expand_incidence(graph, out.seeds, hops);

    const auto prompt = prompts.render(PromptKind::fact_verification,
                                       {{"entities", entity_lines(out.evidence)},
                                        {"relations", relation_lines(out.evidence)},
                                        {"fact", out.fact}});
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto raw = gateway.complete(prompt, attempt);
        try {
            out.supported = parse_verdict(raw);
            return out;
        } catch (const ParseError& e) {
            if (attempt == 1)
                throw VerificationError("judge verdict unparseable after reprompt: " + e.raw());
        }
    }
    return out;
}

nlohmann::ordered_json FactCheckReport::to_json() const {
    nlohmann::ordered_json facts = nlohmann::ordered_json::array();
    for (const auto& v : verdicts) {
        facts.push_back({{"fact", v.fact},
                         {"supported", v.supported},
                         {"seeds", v.seeds},
                         {"evidence", hkg::to_json(v.evidence)}});
    }
    return {{"accuracy", accuracy}, {"facts", std::move(facts)}};
}

FactCheckReport check_facts(const std::vector<std::string>& facts, const KnowledgeHypergraph& graph,
                            Gateway& gateway, std::size_t top_n, std::size_t hops,
                            const PromptTemplates& prompts) {
    FactCheckReport report;
    report.verdicts.resize(facts.size());
    auto errors = parallel_for(facts.size(), gateway.max_parallel(), [&](std::size_t i) {
        report.verdicts[i] = verify_fact(facts[i], graph, gateway, top_n, hops, prompts);
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::size_t supported = 0;
    for (const auto& v : report.verdicts) supported += static_cast<std::size_t>(v.supported);
    report.accuracy = facts.empty() ? 0.0
                                    : static_cast<double>(supported) / static_cast<double>(facts.size());
    return report;
}

EvidenceBundle retrieve_evidence(std::string_view query, const KnowledgeHypergraph& graph,
                                 Gateway& gateway, std::size_t k) {
    if (k == 0) throw InvalidInput("retrieve_evidence requires k >= 1");
    EvidenceBundle out;
    if (graph.empty()) return out;

    const auto& edges = graph.hyperedges();
    std::vector<std::string> texts{std::string(query)};
    std::vector<std::string> names;
    for (const auto& [name, e] : graph.entities()) {
        names.push_back(name);
        texts.push_back(entity_retrieval_text(e));
    }
    for (const auto& e : edges) texts.push_back(render_for_matching(e));
    std::vector<Embedding> vectors;
    try {
        vectors = gateway.embed(texts);
    } catch (const GatewayError& e) {
        throw GatewayError(std::string("evidence retrieval: ") + e.what(), e.retryable());
    }
    std::map<std::string, double> entity_score;
    for (std::size_t i = 0; i < names.size(); ++i)
        entity_score[names[i]] = cosine(vectors[0], vectors[1 + i]);
    std::vector<double> edge_score(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i)
        edge_score[i] = cosine(vectors[0], vectors[1 + names.size() + i]);

    std::vector<std::string> ranked_names = names;
    std::stable_sort(ranked_names.begin(), ranked_names.end(), [&](const auto& a, const auto& b) {
        return entity_score[a] > entity_score[b];
    });
    std::vector<std::size_t> ranked_edges(edges.size());
    std::iota(ranked_edges.begin(), ranked_edges.end(), 0);
    std::stable_sort(ranked_edges.begin(), ranked_edges.end(),
                     [&](std::size_t a, std::size_t b) { return edge_score[a] > edge_score[b]; });

    std::set<std::string> picked_entities;
    std::set<std::size_t> picked_edges;
    auto take_edge = [&](std::size_t e) {
        picked_edges.insert(e);
        for (const auto& m : edges[e].members) picked_entities.insert(m);
    };
    for (std::size_t i = 0; i < ranked_names.size() && i < k; ++i) {
        picked_entities.insert(ranked_names[i]);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto& m = edges[e].members;
            if (std::find(m.begin(), m.end(), ranked_names[i]) != m.end()) take_edge(e);
        }
    }
    for (std::size_t i = 0; i < ranked_edges.size() && i < k; ++i) take_edge(ranked_edges[i]);

    for (const auto& name : picked_entities) out.entities.push_back({name, entity_score[name]});
    for (std::size_t e : picked_edges) out.edges.push_back({e, edge_score[e]});
    std::stable_sort(out.entities.begin(), out.entities.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    std::stable_sort(out.edges.begin(), out.edges.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    return out;
}

}  // namespace hkg
