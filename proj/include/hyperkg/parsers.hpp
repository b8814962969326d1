#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hyperkg/model.hpp"

namespace hkg {

// The entity prompt's "{State: False}" answer: the chunk held no meaningful content.
struct EmptyContent {};

using EntityParse = std::variant<std::vector<Entity>, EmptyContent>;

EntityParse parse_entities(std::string_view raw);

// Inverse of parse_entities for (name, type, description); used to build fixtures.
std::string render_entities_json(const std::vector<Entity>& entities);

// One relation from the relation-extraction JSON: {"relations":[{description,nodes,type}]}.
struct RelationCandidate {
    std::string description;
    std::vector<std::string> nodes;
    std::string type;
};

std::vector<RelationCandidate> parse_relations(std::string_view raw);
std::string render_relations_json(const std::vector<RelationCandidate>& relations);

enum class InsightOrigin { unstable, missed };

std::string_view to_string(InsightOrigin origin);

// Word budget for trigger + action, counted as whitespace-separated tokens.
std::size_t insight_word_budget(InsightOrigin origin);

inline constexpr std::string_view kRelationDiscovery = "RELATION DISCOVERY";

struct InsightProposal {
    std::string skill_kind{kRelationDiscovery};
    std::string trigger;
    std::string action;
    InsightOrigin origin = InsightOrigin::missed;
    // Gold hyperedge this proposal was distilled from; filled in by the trainer.
    std::string source_relation;
};

struct InsightParse {
    std::vector<InsightProposal> proposals;
    std::vector<std::string> warnings;
};

// Every well-formed <Insight> block within budget. Throws ParseError when there are none.
InsightParse parse_insights(std::string_view raw, InsightOrigin origin);

std::string render_insight(const InsightProposal& proposal);

enum class LibraryOpKind { add, merge, skip, del };

std::string_view to_string(LibraryOpKind kind);

struct LibraryOp {
    LibraryOpKind kind = LibraryOpKind::skip;
    std::string trigger;
    std::string action;
    std::vector<std::string> merge_with_ids;
    std::string target_id;
    std::string reason;

    static LibraryOp add(std::string trigger, std::string action);
    static LibraryOp merge(std::string trigger, std::string action, std::vector<std::string> ids);
    static LibraryOp skip(std::string reason);
    static LibraryOp remove(std::string target_id, std::string reason);

    friend bool operator==(const LibraryOp&, const LibraryOp&) = default;
};

// Controller output. MODIFY is rewritten to DELETE + ADD, KEEP to SKIP.
std::vector<LibraryOp> parse_library_ops(std::string_view raw);

nlohmann::ordered_json to_json(const LibraryOp& op);

// Bare "1"/"0" verdict of the fact-verification judge.
int parse_verdict(std::string_view raw);

}  // namespace hkg
