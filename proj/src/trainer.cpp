#include "hyperkg/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/parallel.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

void RolloutConfig::validate() const {
    if (k_samples < 2) throw InvalidInput("rollout.k_samples must be >= 2");
    if (!(temperature > 0.0)) throw InvalidInput("rollout.temperature must be > 0");
    if (!(train_match_threshold > 0.0 && train_match_threshold <= 1.0))
        throw InvalidInput("rollout.train_match_threshold must be in (0, 1]");
}

void PipelineConfig::validate() const {
    chunking.validate();
    extraction.validate();
    dedup.validate();
}

PipelineOutput run_pipeline(std::string_view document, const std::string& source_id,
                            const SkillLibrary& skills, Gateway& gateway,
                            const PipelineConfig& config, Sampling sampling,
                            const PromptTemplates& prompts) {
    auto extraction = extract_document(document, source_id, skills, gateway, config.chunking,
                                       config.extraction, sampling, prompts);
    auto dedup = deduplicate_graph(extraction.raw, gateway, config.dedup, prompts);
    PipelineOutput out;
    out.graph = std::move(dedup.graph);
    out.traces = std::move(extraction.raw.traces);
    out.warnings = std::move(extraction.warnings);
    out.warnings.insert(out.warnings.end(), dedup.warnings.begin(), dedup.warnings.end());
    return out;
}

RolloutSet sample_rollouts(std::string_view document, const std::string& document_id,
                           const SkillLibrary& skills, Gateway& gateway,
                           const RolloutConfig& rollout, const PipelineConfig& pipeline,
                           const PromptTemplates& prompts) {
    rollout.validate();
    RolloutSet out;
    out.document_id = document_id;
    out.candidates.resize(rollout.k_samples);
    auto errors = parallel_for(rollout.k_samples, gateway.max_parallel(), [&](std::size_t i) {
        const Sampling sampling{static_cast<int>(i), rollout.temperature};
        try {
            out.candidates[i] =
                run_pipeline(document, document_id, skills, gateway, pipeline, sampling, prompts);
        } catch (const FixtureMissError&) {
            throw;
        } catch (const std::exception& first) {
            spdlog::warn("{}: rollout {} failed ({}); retrying", document_id, i, first.what());
            try {
                out.candidates[i] = run_pipeline(document, document_id, skills, gateway, pipeline,
                                                 sampling, prompts);
            } catch (const FixtureMissError&) {
                throw;
            } catch (const std::exception& second) {
                throw RolloutError(document_id + ": rollout " + std::to_string(i) +
                                       " failed twice: " + second.what(),
                                   static_cast<int>(i));
            }
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

StabilityPartition partition_from_matches(std::size_t n_gold,
                                          const std::vector<MatchResult>& per_candidate,
                                          double threshold) {
    StabilityPartition p;
    p.k = per_candidate.size();
    p.counts.assign(n_gold, 0);
    for (std::size_t c = 0; c < per_candidate.size(); ++c) {
        for (const auto& a : per_candidate[c].assignment) {
            if (a.gold >= n_gold) throw InvalidInput("match refers to an unknown gold edge");
            if (a.similarity < threshold) continue;
            ++p.counts[a.gold];
            p.witnesses[a.gold].push_back({c, a.pred, a.similarity});
        }
    }
    for (std::size_t g = 0; g < n_gold; ++g) {
        if (p.counts[g] == p.k)
            p.stable.insert(g);
        else if (p.counts[g] == 0)
            p.missed.insert(g);
        else
            p.unstable.insert(g);
    }
    return p;
}

StabilityPartition partition_by_stability(const RolloutSet& rollouts,
                                          const KnowledgeHypergraph& gold, Gateway& gateway,
                                          const RolloutConfig& config) {
    if (gold.hyperedges().empty()) throw InvalidInput("gold graph has no hyperedges");
    std::vector<MatchResult> matches;
    matches.reserve(rollouts.candidates.size());
    for (const auto& candidate : rollouts.candidates)
        matches.push_back(match_relations(candidate.graph.hyperedges(), gold.hyperedges(), gateway));
    return partition_from_matches(gold.hyperedges().size(), matches,
                                  config.train_match_threshold);
}

namespace {

std::string render_edge(const Hyperedge& edge) {
    return "{" + text::join(edge.members, "; ") + "} -> " + edge.relation;
}

std::map<std::string, std::string> gold_slots(const Hyperedge& gold, std::string_view document) {
    return {{"text", std::string(document)},
            {"nodes", text::join(gold.members, "; ")},
            {"type", std::string(to_string(gold.tier))},
            {"description", gold.relation}};
}

// Entity names are banned from insights; a hit is reported, not rejected.
void lint_entity_names(const Hyperedge& gold, Reflection& r) {
    for (const auto& name : gold.members) {
        if (text::contains_ci(r.proposal.trigger, name) ||
            text::contains_ci(r.proposal.action, name)) {
            r.warnings.push_back("insight mentions entity name '" + name + "'");
            spdlog::warn("reflection: {}", r.warnings.back());
        }
    }
}

Reflection reflect(const std::string& prompt, InsightOrigin origin, const Hyperedge& gold,
                   Gateway& gateway) {
    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto raw = gateway.complete(prompt, attempt);
        try {
            auto parsed = parse_insights(raw, origin);
            Reflection r;
            r.proposal = parsed.proposals.front();
            r.proposal.source_relation = render_edge(gold);
            r.warnings = std::move(parsed.warnings);
            if (parsed.proposals.size() > 1) {
                r.warnings.push_back("reflection returned " +
                                     std::to_string(parsed.proposals.size()) +
                                     " insight blocks; kept the first");
                spdlog::warn("reflection: {}", r.warnings.back());
            }
            lint_entity_names(gold, r);
            return r;
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw ReflectionError(std::string(to_string(origin)) + " reflection for " + render_edge(gold) +
                          " failed after reprompt: " + last_error);
}

}  // namespace

Reflection induce_from_unstable(const Hyperedge& gold_edge, const std::vector<Witness>& witnesses,
                                const RolloutSet& rollouts, std::string_view document,
                                Gateway& gateway, const PromptTemplates& prompts) {
    if (witnesses.empty()) throw InvalidInput("path induction needs at least one witness");
    const Witness& w = witnesses.front();
    if (w.candidate >= rollouts.candidates.size())
        throw InvalidInput("witness refers to an unknown candidate");
    const auto& candidate = rollouts.candidates[w.candidate];
    if (w.edge >= candidate.graph.hyperedges().size())
        throw InvalidInput("witness refers to an unknown edge");
    const Hyperedge& predicted = candidate.graph.hyperedges()[w.edge];

    // Responses from the edge's chunks that name its relation; failing that, the responses of
    // the pass matching its tier.
    std::vector<std::string> reasoning, same_tier;
    for (const auto& t : candidate.traces) {
        if (!predicted.provenance.count(t.chunk_id)) continue;
        if (t.response.find(predicted.relation) != std::string::npos)
            reasoning.push_back(text::trim(t.response));
        else if (t.tier == predicted.tier)
            same_tier.push_back(text::trim(t.response));
    }
    if (reasoning.empty()) reasoning = std::move(same_tier);
    auto slots = gold_slots(gold_edge, document);
    slots["success reasoning"] = reasoning.empty() ? "(not captured)" : text::join(reasoning, "\n\n");
    slots["success edge"] = render_edge(predicted);
    return reflect(prompts.render(PromptKind::unstable_reflection, slots), InsightOrigin::unstable,
                   gold_edge, gateway);
}

Reflection hindsight_from_missed(const Hyperedge& gold_edge, std::string_view document,
                                 Gateway& gateway, const PromptTemplates& prompts) {
    return reflect(prompts.render(PromptKind::missed_reflection, gold_slots(gold_edge, document)),
                   InsightOrigin::missed, gold_edge, gateway);
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError("manifest " + path.string() + ": expected a JSON list");
    const auto base = path.parent_path();
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const auto where = "manifest " + path.string() + "[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("document_path") || !e.contains("gold_graph_path") ||
            !e["document_path"].is_string() || !e["gold_graph_path"].is_string())
            throw ParseError(where + ": needs string fields document_path and gold_graph_path");
        std::filesystem::path doc = e["document_path"].get<std::string>();
        std::filesystem::path gold = e["gold_graph_path"].get<std::string>();
        out.push_back({doc.is_absolute() ? doc : base / doc, gold.is_absolute() ? gold : base / gold});
    }
    if (out.empty()) throw InvalidInput("manifest " + path.string() + " lists no documents");
    return out;
}

std::vector<TrainingExample> load_training_examples(const std::vector<ManifestEntry>& entries) {
    std::vector<TrainingExample> out;
    for (const auto& entry : entries) {
        std::ifstream in(entry.document_path, std::ios::binary);
        if (!in) throw InvalidInput("cannot open document " + entry.document_path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back({entry.document_path.stem().string(), ss.str(), load_graph(entry.gold_graph_path)});
    }
    return out;
}

namespace {

struct DocOutcome {
    nlohmann::ordered_json report;
    std::vector<LibraryOp> ops;
};

std::vector<LibraryOp> controller_ops(const SkillLibrary& library,
                                      const std::vector<InsightProposal>& proposals,
                                      Gateway& gateway, const PromptTemplates& prompts) {
    std::string blocks;
    for (const auto& p : proposals) {
        if (!blocks.empty()) blocks += "\n\n";
        blocks += render_insight(p);
    }
    const auto prompt = prompts.render(
        PromptKind::skill_update,
        {{"existing experiences", render_experience_pool(library)}, {"new experiences", blocks}});
    for (int attempt = 0;; ++attempt) {
        auto raw = gateway.complete(prompt, attempt);
        try {
            return parse_library_ops(raw);
        } catch (const ParseError&) {
            if (attempt == 1) throw;
        }
    }
}

DocOutcome learn_from_document(const TrainingExample& example, const SkillLibrary& library,
                               Gateway& gateway, const RolloutConfig& rollout,
                               const PipelineConfig& pipeline, const PromptTemplates& prompts) {
    auto rollouts = sample_rollouts(example.document, example.document_id, library, gateway,
                                    rollout, pipeline, prompts);
    auto partition = partition_by_stability(rollouts, example.gold, gateway, rollout);

    // Stable edges carry no learning signal.
    std::vector<std::size_t> targets;
    for (std::size_t g = 0; g < example.gold.hyperedges().size(); ++g)
        if (!partition.stable.count(g)) targets.push_back(g);

    std::vector<std::optional<Reflection>> reflections(targets.size());
    std::vector<std::string> warnings;
    std::mutex warnings_mutex;
    auto errors = parallel_for(targets.size(), gateway.max_parallel(), [&](std::size_t i) {
        const std::size_t g = targets[i];
        const auto& edge = example.gold.hyperedges()[g];
        try {
            if (partition.unstable.count(g))
                reflections[i] = induce_from_unstable(edge, partition.witnesses.at(g), rollouts,
                                                      example.document, gateway, prompts);
            else
                reflections[i] = hindsight_from_missed(edge, example.document, gateway, prompts);
        } catch (const ReflectionError& e) {
            spdlog::warn("{}: {}", example.document_id, e.what());
            std::lock_guard lock(warnings_mutex);
            warnings.push_back(e.what());
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<InsightProposal> proposals;
    for (auto& r : reflections) {
        if (!r) continue;
        proposals.push_back(r->proposal);
        warnings.insert(warnings.end(), r->warnings.begin(), r->warnings.end());
    }

    DocOutcome out;
    if (!proposals.empty()) out.ops = controller_ops(library, proposals, gateway, prompts);

    auto& j = out.report;
    j["document"] = example.document_id;
    j["status"] = "ok";
    j["k_samples"] = rollout.k_samples;
    j["gold_edges"] = example.gold.hyperedges().size();
    j["stable"] = partition.stable.size();
    j["unstable"] = partition.unstable.size();
    j["missed"] = partition.missed.size();
    j["counts"] = partition.counts;
    j["path_induction_calls"] = partition.unstable.size();
    j["hindsight_calls"] = partition.missed.size();
    j["proposals_made"] = proposals.size();
    j["proposals_accepted"] = std::count_if(out.ops.begin(), out.ops.end(), [](const LibraryOp& op) {
        return op.kind == LibraryOpKind::add || op.kind == LibraryOpKind::merge;
    });
    nlohmann::ordered_json ops = nlohmann::ordered_json::array();
    for (const auto& op : out.ops) ops.push_back(to_json(op));
    j["ops"] = std::move(ops);
    std::sort(warnings.begin(), warnings.end());
    j["warnings"] = warnings;
    return out;
}

}  // namespace

RoundResult run_learning_round(const std::vector<TrainingExample>& examples,
                               const SkillLibrary& library, Gateway& gateway,
                               const RolloutConfig& rollout, const PipelineConfig& pipeline,
                               const PromptTemplates& prompts) {
    if (examples.empty()) throw InvalidInput("learning round needs at least one document");
    rollout.validate();
    pipeline.validate();

    SkillLibrary working = library;
    nlohmann::ordered_json docs = nlohmann::ordered_json::array();
    std::vector<std::vector<LibraryOp>> deferred(examples.size());
    std::size_t failures = 0;
    std::exception_ptr first_failure;

    auto record_failure = [&](nlohmann::ordered_json& report, const std::string& message) {
        report["status"] = "failed";
        report["error"] = message;
    };

    for (std::size_t d = 0; d < examples.size(); ++d) {
        const auto& example = examples[d];
        const SkillLibrary& visible = rollout.update_between_documents ? working : library;
        try {
            auto outcome = learn_from_document(example, visible, gateway, rollout, pipeline, prompts);
            if (rollout.update_between_documents) {
                try {
                    working = apply_library_ops_within_round(working, outcome.ops);
                    outcome.report["ops_applied"] = outcome.ops.size();
                } catch (const OpApplicationError& e) {
                    outcome.report["ops_applied"] = 0;
                    record_failure(outcome.report, e.what());
                    ++failures;
                    if (!first_failure) first_failure = std::current_exception();
                }
            } else {
                deferred[d] = std::move(outcome.ops);
            }
            docs.push_back(std::move(outcome.report));
        } catch (const std::exception& e) {
            spdlog::error("{}: skipped ({})", example.document_id, e.what());
            nlohmann::ordered_json report;
            report["document"] = example.document_id;
            record_failure(report, e.what());
            docs.push_back(std::move(report));
            ++failures;
            if (!first_failure) first_failure = std::current_exception();
        }
    }

    if (!rollout.update_between_documents) {
        for (std::size_t d = 0; d < examples.size(); ++d) {
            if (docs[d]["status"] != "ok") continue;
            try {
                working = apply_library_ops_within_round(working, deferred[d]);
                docs[d]["ops_applied"] = deferred[d].size();
            } catch (const OpApplicationError& e) {
                docs[d]["ops_applied"] = 0;
                record_failure(docs[d], e.what());
                ++failures;
                if (!first_failure) first_failure = std::current_exception();
            }
        }
    }

    if (failures == examples.size()) {
        try {
            std::rethrow_exception(first_failure);
        } catch (const FixtureMissError&) {
            throw;
        } catch (const std::exception& e) {
            throw Error(std::string("learning round failed for every document; first error: ") +
                        e.what());
        }
    }

    RoundResult out;
    out.library = advance_round(working);
    auto& r = out.report;
    r["round"] = out.library.round();
    r["library_size_before"] = library.size();
    r["library_size_after"] = out.library.size();
    r["update_between_documents"] = rollout.update_between_documents;
    std::size_t stable = 0, unstable = 0, missed = 0, made = 0, accepted = 0;
    for (const auto& d : docs) {
        if (d["status"] != "ok") continue;
        stable += d["stable"].get<std::size_t>();
        unstable += d["unstable"].get<std::size_t>();
        missed += d["missed"].get<std::size_t>();
        made += d["proposals_made"].get<std::size_t>();
        if (d["ops_applied"].get<std::size_t>() > 0) accepted += d["proposals_accepted"].get<std::size_t>();
    }
    r["totals"] = {{"stable", stable},
                   {"unstable", unstable},
                   {"missed", missed},
                   {"proposals_made", made},
                   {"proposals_accepted", accepted},
                   {"failed_documents", failures}};
    r["documents"] = std::move(docs);
    return out;
}

}  // namespace hkg
