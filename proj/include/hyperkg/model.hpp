#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hkg {

// Trims and collapses internal whitespace runs to a single space. Case is preserved.
std::string canonicalize_name(std::string_view name);

// Canonical name, lower-cased (ASCII). Used where "Pong" and "pong" must meet.
std::string fold_key(std::string_view name);

enum class Tier { binary, qualified_binary, nary };

std::string_view to_string(Tier tier);
std::optional<Tier> parse_tier(std::string_view label);

// Whether a member count is admissible for the tier.
bool tier_admits(Tier tier, std::size_t member_count);

struct Entity {
    std::string name;
    std::string entity_type;
    std::string description;
    std::set<std::string> aliases;

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Hyperedge {
    std::string relation;
    // First-mention order; compared as a set.
    std::vector<std::string> members;
    Tier tier = Tier::nary;
    std::set<std::string> provenance;

    std::set<std::string> member_set() const { return {members.begin(), members.end()}; }

    // Same relation text and same member set.
    bool same_fact(const Hyperedge& other) const;
};

bool operator==(const Hyperedge& a, const Hyperedge& b);

class KnowledgeHypergraph {
public:
    KnowledgeHypergraph() = default;
    explicit KnowledgeHypergraph(std::string source_id) : source_id_(std::move(source_id)) {}

    const std::string& source_id() const noexcept { return source_id_; }
    void set_source_id(std::string id) { source_id_ = std::move(id); }

    const std::map<std::string, Entity>& entities() const noexcept { return entities_; }
    const std::vector<Hyperedge>& hyperedges() const noexcept { return edges_; }

    bool empty() const noexcept { return entities_.empty() && edges_.empty(); }

    const Entity* find_entity(std::string_view name) const;

    // Inserts or replaces the entity keyed by its canonical name. Returns the key.
    const std::string& upsert_entity(Entity entity);

    // Appends the edge unless an edge with the same relation text and member set exists;
    // in that case provenance is unioned into the existing edge. Returns the index of the
    // edge that now holds the fact and whether a new edge was appended.
    std::pair<std::size_t, bool> add_edge(Hyperedge edge);

    // Structural equality: edge order is irrelevant, member order is irrelevant.
    friend bool operator==(const KnowledgeHypergraph& a, const KnowledgeHypergraph& b);

private:
    std::string source_id_;
    std::map<std::string, Entity> entities_;
    std::vector<Hyperedge> edges_;
};

// One entity record as extracted from a single chunk, before coreference clustering.
struct EntityMention {
    Entity entity;
    std::string chunk_id;
};

// Raw model response for one tier pass over one chunk. Kept so reflection can quote it.
struct TierTrace {
    std::string chunk_id;
    Tier tier = Tier::binary;
    std::string response;
};

// Pre-deduplication extraction output. Mentions and edges may repeat across chunks.
struct RawGraph {
    std::string source_id;
    std::vector<EntityMention> mentions;
    std::vector<Hyperedge> edges;
    std::vector<TierTrace> traces;
};

// Each entity becomes one mention (aliases kept); edges copied as-is.
RawGraph lift_to_raw(const KnowledgeHypergraph& graph);

// Empty iff all type invariants hold. Each entry names the offending entity or edge.
std::vector<std::string> validate_hypergraph(const KnowledgeHypergraph& graph);

// Throws ValidationError when validate_hypergraph reports anything.
void require_valid(const KnowledgeHypergraph& graph);

// Sorted canonical order used for serialization: (relation, sorted members).
std::vector<std::size_t> canonical_edge_order(const std::vector<Hyperedge>& edges);

nlohmann::ordered_json to_json(const KnowledgeHypergraph& graph);
KnowledgeHypergraph graph_from_json(const nlohmann::json& j);

std::string serialize_graph(const KnowledgeHypergraph& graph);
KnowledgeHypergraph deserialize_graph(std::string_view text);

void save_graph(const KnowledgeHypergraph& graph, const std::filesystem::path& path);
KnowledgeHypergraph load_graph(const std::filesystem::path& path);

void save_graph(const KnowledgeHypergraph& graph, std::ostream& out);
KnowledgeHypergraph load_graph(std::istream& in);

}  // namespace hkg
