#include "hyperkg/model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hyperkg/error.hpp"

namespace hkg {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> sorted_members(const Hyperedge& e) {
    std::vector<std::string> m = e.members;
    std::sort(m.begin(), m.end());
    return m;
}

std::string join_violations(const std::vector<std::string>& v) {
    std::string out = "hypergraph validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

std::string canonicalize_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char c : name) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string fold_key(std::string_view name) {
    std::string out = canonicalize_name(name);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::binary: return "binary";
        case Tier::qualified_binary: return "qualified_binary";
        case Tier::nary: return "nary";
    }
    return "nary";
}

std::optional<Tier> parse_tier(std::string_view label) {
    if (label == "binary") return Tier::binary;
    if (label == "qualified_binary") return Tier::qualified_binary;
    if (label == "nary") return Tier::nary;
    return std::nullopt;
}

bool tier_admits(Tier tier, std::size_t member_count) {
    switch (tier) {
        case Tier::binary: return member_count == 2;
        case Tier::qualified_binary: return member_count >= 3;
        case Tier::nary: return member_count >= 2;
    }
    return false;
}

bool Hyperedge::same_fact(const Hyperedge& other) const {
    return relation == other.relation && member_set() == other.member_set();
}

bool operator==(const Hyperedge& a, const Hyperedge& b) {
    return a.same_fact(b) && a.tier == b.tier && a.provenance == b.provenance;
}

const Entity* KnowledgeHypergraph::find_entity(std::string_view name) const {
    auto it = entities_.find(canonicalize_name(name));
    return it == entities_.end() ? nullptr : &it->second;
}

const std::string& KnowledgeHypergraph::upsert_entity(Entity entity) {
    entity.name = canonicalize_name(entity.name);
    entity.aliases.erase(entity.name);
    std::string key = entity.name;
    auto [it, inserted] = entities_.insert_or_assign(std::move(key), std::move(entity));
    return it->first;
}

std::pair<std::size_t, bool> KnowledgeHypergraph::add_edge(Hyperedge edge) {
    std::vector<std::string> members;
    members.reserve(edge.members.size());
    for (const auto& m : edge.members) members.push_back(canonicalize_name(m));
    edge.members = std::move(members);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (edges_[i].same_fact(edge)) {
            edges_[i].provenance.insert(edge.provenance.begin(), edge.provenance.end());
            return {i, false};
        }
    }
    edges_.push_back(std::move(edge));
    return {edges_.size() - 1, true};
}

bool operator==(const KnowledgeHypergraph& a, const KnowledgeHypergraph& b) {
    if (a.source_id_ != b.source_id_ || a.entities_ != b.entities_ ||
        a.edges_.size() != b.edges_.size())
        return false;
    auto oa = canonical_edge_order(a.edges_);
    auto ob = canonical_edge_order(b.edges_);
    for (std::size_t i = 0; i < oa.size(); ++i) {
        const auto& ea = a.edges_[oa[i]];
        const auto& eb = b.edges_[ob[i]];
        if (!(ea == eb) || ea.members != eb.members) return false;
    }
    return true;
}

std::vector<std::string> validate_hypergraph(const KnowledgeHypergraph& graph) {
    std::vector<std::string> out;
    for (const auto& [key, entity] : graph.entities()) {
        if (canonicalize_name(entity.name).empty()) {
            out.push_back("entity with empty name");
            continue;
        }
        if (key != entity.name)
            out.push_back("entity '" + entity.name + "' stored under key '" + key + "'");
        if (entity.aliases.count(entity.name))
            out.push_back("entity '" + entity.name + "' lists its own name as an alias");
    }
    const auto& edges = graph.hyperedges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const std::string label = "hyperedge #" + std::to_string(i) + " '" + e.relation + "'";
        if (canonicalize_name(e.relation).empty()) out.push_back(label + ": empty relation text");
        auto distinct = e.member_set();
        if (distinct.size() != e.members.size())
            out.push_back(label + ": duplicate members");
        if (distinct.size() < 2)
            out.push_back(label + ": needs at least 2 distinct members, has " +
                          std::to_string(distinct.size()));
        else if (!tier_admits(e.tier, e.members.size()))
            out.push_back(label + ": tier " + std::string(to_string(e.tier)) +
                          " does not admit " + std::to_string(e.members.size()) + " members");
        for (const auto& m : e.members) {
            if (!graph.entities().count(m))
                out.push_back(label + ": dangling member '" + m + "'");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (edges[j].same_fact(e)) {
                out.push_back(label + ": duplicates hyperedge #" + std::to_string(j));
                break;
            }
        }
    }
    return out;
}

void require_valid(const KnowledgeHypergraph& graph) {
    auto violations = validate_hypergraph(graph);
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<std::size_t> canonical_edge_order(const std::vector<Hyperedge>& edges) {
    std::vector<std::vector<std::string>> keys;
    keys.reserve(edges.size());
    for (const auto& e : edges) keys.push_back(sorted_members(e));
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (edges[a].relation != edges[b].relation) return edges[a].relation < edges[b].relation;
        return keys[a] < keys[b];
    });
    return order;
}

nlohmann::ordered_json to_json(const KnowledgeHypergraph& graph) {
    nlohmann::ordered_json j;
    j["source_id"] = graph.source_id();
    auto entities = nlohmann::ordered_json::array();
    for (const auto& [name, e] : graph.entities()) {
        nlohmann::ordered_json je;
        je["name"] = e.name;
        je["type"] = e.entity_type;
        je["description"] = e.description;
        je["aliases"] = e.aliases;
        entities.push_back(std::move(je));
    }
    j["entities"] = std::move(entities);
    auto edges = nlohmann::ordered_json::array();
    for (std::size_t idx : canonical_edge_order(graph.hyperedges())) {
        const auto& e = graph.hyperedges()[idx];
        nlohmann::ordered_json je;
        je["relation"] = e.relation;
        je["members"] = e.members;
        je["tier"] = to_string(e.tier);
        je["provenance"] = e.provenance;
        edges.push_back(std::move(je));
    }
    j["hyperedges"] = std::move(edges);
    return j;
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                    const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing key \"" + key + "\"");
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto& v = require_field(obj, key, where);
    if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<std::string> require_string_array(const nlohmann::json& obj, const char* key,
                                              const std::string& where) {
    const auto& v = require_field(obj, key, where);
    if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            throw ParseError(where + "." + key + "[" + std::to_string(i) + "]: expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

}  // namespace

KnowledgeHypergraph graph_from_json(const nlohmann::json& j) {
    KnowledgeHypergraph g(require_string(j, "source_id", "graph"));
    const auto& entities = require_field(j, "entities", "graph");
    if (!entities.is_array()) throw ParseError("graph.entities: expected an array");
    for (std::size_t i = 0; i < entities.size(); ++i) {
        const std::string where = "entities[" + std::to_string(i) + "]";
        Entity e;
        e.name = require_string(entities[i], "name", where);
        e.entity_type = require_string(entities[i], "type", where);
        e.description = require_string(entities[i], "description", where);
        auto aliases = require_string_array(entities[i], "aliases", where);
        e.aliases = {aliases.begin(), aliases.end()};
        if (g.find_entity(e.name))
            throw ValidationError({where + ": duplicate entity '" + e.name + "'"});
        g.upsert_entity(std::move(e));
    }
    const auto& edges = require_field(j, "hyperedges", "graph");
    if (!edges.is_array()) throw ParseError("graph.hyperedges: expected an array");
    std::vector<std::string> dup_violations;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "hyperedges[" + std::to_string(i) + "]";
        Hyperedge e;
        e.relation = require_string(edges[i], "relation", where);
        e.members = require_string_array(edges[i], "members", where);
        auto tier_label = require_string(edges[i], "tier", where);
        auto tier = parse_tier(tier_label);
        if (!tier) throw ParseError(where + ".tier: unknown tier '" + tier_label + "'");
        e.tier = *tier;
        auto prov = require_string_array(edges[i], "provenance", where);
        e.provenance = {prov.begin(), prov.end()};
        if (!g.add_edge(std::move(e)).second)
            dup_violations.push_back(where + ": duplicate hyperedge");
    }
    auto violations = validate_hypergraph(g);
    violations.insert(violations.end(), dup_violations.begin(), dup_violations.end());
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return g;
}

std::string serialize_graph(const KnowledgeHypergraph& graph) {
    require_valid(graph);
    return to_json(graph).dump(2) + "\n";
}

KnowledgeHypergraph deserialize_graph(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        std::size_t line = 1 + static_cast<std::size_t>(std::count(
                                   text.begin(),
                                   text.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(err.byte, text.size())),
                                   '\n'));
        throw ParseError("graph JSON parse error at line " + std::to_string(line) + ": " +
                         err.what());
    }
    return graph_from_json(j);
}

void save_graph(const KnowledgeHypergraph& graph, std::ostream& out) {
    out << serialize_graph(graph);
}

KnowledgeHypergraph load_graph(std::istream& in) {
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_graph(ss.str());
}

void save_graph(const KnowledgeHypergraph& graph, const std::filesystem::path& path) {
    std::string text = serialize_graph(graph);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
}

KnowledgeHypergraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return load_graph(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace hkg

namespace hkg {

RawGraph lift_to_raw(const KnowledgeHypergraph& graph) {
    RawGraph raw;
    raw.source_id = graph.source_id();
    for (const auto& [name, e] : graph.entities()) raw.mentions.push_back({e, {}});
    raw.edges = graph.hyperedges();
    return raw;
}

}  // namespace hkg
