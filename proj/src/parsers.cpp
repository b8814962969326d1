#include "hyperkg/parsers.hpp"

#include <algorithm>
#include <regex>

#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

namespace {

nlohmann::json parse_payload(std::string_view raw, const char* what) {
    auto payload = text::first_json_value(raw);
    if (!payload) throw ParseError(std::string("no JSON value found in ") + what + " response",
                                   std::string(raw));
    return nlohmann::json::parse(*payload);
}

std::string optional_string(const nlohmann::json& obj, const char* key, std::string_view raw,
                            const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(where + "." + key + " is not a string", std::string(raw));
    return text::trim(it->get<std::string>());
}

bool is_state_false(std::string_view raw) {
    static const std::regex sentinel(R"(^\{+\s*"?state"?\s*:\s*"?false"?\s*\}+$)",
                                     std::regex::icase);
    auto t = text::trim(raw);
    if (t.starts_with("```")) {
        auto first_nl = t.find('\n');
        auto last_fence = t.rfind("```");
        if (first_nl != std::string::npos && last_fence > first_nl)
            t = text::trim(std::string_view(t).substr(first_nl + 1, last_fence - first_nl - 1));
    }
    return std::regex_match(t, sentinel);
}

const nlohmann::json* find_any(const nlohmann::json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys)
        if (auto it = obj.find(k); it != obj.end()) return &*it;
    return nullptr;
}

}  // namespace

EntityParse parse_entities(std::string_view raw) {
    if (is_state_false(raw)) return EmptyContent{};
    nlohmann::json j;
    try {
        j = parse_payload(raw, "entity");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("entity response: ") + e.what(), std::string(raw));
    }
    if (j.is_object() && j.contains("State") && !j.contains("nodes")) {
        const auto& s = j["State"];
        if ((s.is_boolean() && !s.get<bool>()) ||
            (s.is_string() && text::to_lower(s.get<std::string>()) == "false"))
            return EmptyContent{};
    }
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
        throw ParseError("entity response lacks a \"nodes\" array", std::string(raw));
    std::vector<Entity> out;
    const auto& nodes = j["nodes"];
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string where = "nodes[" + std::to_string(i) + "]";
        if (!nodes[i].is_object()) throw ParseError(where + " is not an object", std::string(raw));
        Entity e;
        e.name = canonicalize_name(optional_string(nodes[i], "name", raw, where));
        if (e.name.empty()) throw ParseError(where + " has an empty name", std::string(raw));
        e.entity_type = optional_string(nodes[i], "type", raw, where);
        e.description = optional_string(nodes[i], "description", raw, where);
        out.push_back(std::move(e));
    }
    return out;
}

std::string render_entities_json(const std::vector<Entity>& entities) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& e : entities)
        nodes.push_back({{"name", e.name}, {"type", e.entity_type}, {"description", e.description}});
    return nlohmann::ordered_json{{"nodes", nodes}}.dump();
}

std::vector<RelationCandidate> parse_relations(std::string_view raw) {
    nlohmann::json j;
    try {
        j = parse_payload(raw, "relation");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("relation response: ") + e.what(), std::string(raw));
    }
    const nlohmann::json* list = nullptr;
    if (j.is_array()) list = &j;
    else if (j.is_object()) list = find_any(j, {"relations", "hyperedges"});
    if (!list || !list->is_array())
        throw ParseError("relation response lacks a \"relations\" array", std::string(raw));
    std::vector<RelationCandidate> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& item = (*list)[i];
        const std::string where = "relations[" + std::to_string(i) + "]";
        if (!item.is_object()) throw ParseError(where + " is not an object", std::string(raw));
        RelationCandidate r;
        r.description = optional_string(item, "description", raw, where);
        r.type = optional_string(item, "type", raw, where);
        const auto* nodes = find_any(item, {"nodes", "entities"});
        if (!nodes || !nodes->is_array())
            throw ParseError(where + " lacks a \"nodes\" array", std::string(raw));
        for (const auto& n : *nodes) {
            if (!n.is_string()) throw ParseError(where + ".nodes holds a non-string", std::string(raw));
            r.nodes.push_back(text::trim(n.get<std::string>()));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string render_relations_json(const std::vector<RelationCandidate>& relations) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& r : relations)
        list.push_back({{"description", r.description}, {"nodes", r.nodes}, {"type", r.type}});
    return nlohmann::ordered_json{{"relations", list}}.dump();
}

std::string_view to_string(InsightOrigin origin) {
    return origin == InsightOrigin::unstable ? "unstable" : "missed";
}

std::size_t insight_word_budget(InsightOrigin origin) {
    return origin == InsightOrigin::unstable ? 50 : 32;
}

namespace {

struct BlockFields {
    std::optional<std::string> skill, trigger, action;
};

BlockFields parse_block_fields(std::string_view body) {
    BlockFields f;
    std::optional<std::string>* current = nullptr;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        auto line = text::trim(body.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                              : nl - pos));
        pos = nl == std::string_view::npos ? body.size() + 1 : nl + 1;
        std::string stripped = line;
        while (!stripped.empty() && (stripped.front() == '-' || stripped.front() == '*'))
            stripped = text::trim(std::string_view(stripped).substr(1));
        auto colon = stripped.find(':');
        std::optional<std::string>* target = nullptr;
        if (colon != std::string::npos) {
            std::string key = text::to_lower(text::trim(std::string_view(stripped).substr(0, colon)));
            key.erase(std::remove(key.begin(), key.end(), '*'), key.end());
            if (key == "skill") target = &f.skill;
            else if (key == "trigger") target = &f.trigger;
            else if (key == "action") target = &f.action;
        }
        if (target) {
            *target = text::trim(std::string_view(stripped).substr(colon + 1));
            current = target;
        } else if (current && !line.empty()) {
            **current += (*current)->empty() ? line : " " + line;
        }
    }
    return f;
}

}  // namespace

InsightParse parse_insights(std::string_view raw, InsightOrigin origin) {
    const std::string lower = text::to_lower(raw);
    const std::string open = "<insight>", close = "</insight>";
    InsightParse result;
    std::vector<std::string> rejections;
    std::size_t blocks = 0;
    for (std::size_t pos = lower.find(open); pos != std::string::npos;
         pos = lower.find(open, pos + 1)) {
        ++blocks;
        const std::size_t body_begin = pos + open.size();
        const std::size_t end = lower.find(close, body_begin);
        const std::string label = "Insight block " + std::to_string(blocks);
        if (end == std::string::npos) {
            rejections.push_back(label + ": missing </Insight>");
            break;
        }
        auto f = parse_block_fields(raw.substr(body_begin, end - body_begin));
        if (!f.trigger || f.trigger->empty() || !f.action || f.action->empty()) {
            rejections.push_back(label + ": missing TRIGGER or ACTION");
            continue;
        }
        if (f.skill && !f.skill->empty() &&
            text::to_lower(*f.skill) != text::to_lower(kRelationDiscovery)) {
            rejections.push_back(label + ": SKILL must be RELATION DISCOVERY, got '" + *f.skill + "'");
            continue;
        }
        const std::size_t words = text::word_count(*f.trigger) + text::word_count(*f.action);
        if (words > insight_word_budget(origin)) {
            rejections.push_back(label + ": " + std::to_string(words) + " words exceeds the " +
                                 std::to_string(insight_word_budget(origin)) + "-word budget for " +
                                 std::string(to_string(origin)) + " insights");
            continue;
        }
        InsightProposal p;
        p.trigger = *f.trigger;
        p.action = *f.action;
        p.origin = origin;
        result.proposals.push_back(std::move(p));
    }
    if (result.proposals.empty()) {
        std::string msg = blocks == 0 ? "no <Insight> block found" : "no well-formed <Insight> block";
        for (const auto& r : rejections) msg += "; " + r;
        throw ParseError(msg, std::string(raw));
    }
    for (auto& r : rejections) {
        spdlog::warn("{}", r);
        result.warnings.push_back(std::move(r));
    }
    return result;
}

std::string render_insight(const InsightProposal& p) {
    return "<Insight>\nSKILL: " + p.skill_kind + "\nTRIGGER: " + p.trigger + "\nACTION: " +
           p.action + "\n</Insight>";
}

std::string_view to_string(LibraryOpKind kind) {
    switch (kind) {
        case LibraryOpKind::add: return "ADD";
        case LibraryOpKind::merge: return "MERGE";
        case LibraryOpKind::skip: return "SKIP";
        case LibraryOpKind::del: return "DELETE";
    }
    return "SKIP";
}

LibraryOp LibraryOp::add(std::string trigger, std::string action) {
    LibraryOp op;
    op.kind = LibraryOpKind::add;
    op.trigger = std::move(trigger);
    op.action = std::move(action);
    return op;
}

LibraryOp LibraryOp::merge(std::string trigger, std::string action, std::vector<std::string> ids) {
    LibraryOp op = add(std::move(trigger), std::move(action));
    op.kind = LibraryOpKind::merge;
    op.merge_with_ids = std::move(ids);
    return op;
}

LibraryOp LibraryOp::skip(std::string reason) {
    LibraryOp op;
    op.kind = LibraryOpKind::skip;
    op.reason = std::move(reason);
    return op;
}

LibraryOp LibraryOp::remove(std::string target_id, std::string reason) {
    LibraryOp op;
    op.kind = LibraryOpKind::del;
    op.target_id = std::move(target_id);
    op.reason = std::move(reason);
    return op;
}

std::vector<LibraryOp> parse_library_ops(std::string_view raw) {
    nlohmann::json j;
    try {
        j = parse_payload(raw, "skill-update");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("skill-update response: ") + e.what(), std::string(raw));
    }
    if (!j.is_array()) throw ParseError("skill-update response is not a JSON array", std::string(raw));

    std::vector<LibraryOp> ops;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& item = j[i];
        const std::string where = "operations[" + std::to_string(i) + "]";
        if (!item.is_object()) throw ParseError(where + " is not an object", std::string(raw));
        const auto* label_node = find_any(item, {"operation", "op"});
        if (!label_node || !label_node->is_string())
            throw ParseError(where + " lacks an \"operation\" label", std::string(raw));
        const std::string label = label_node->get<std::string>();
        std::string upper = label;
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });

        auto required = [&](std::initializer_list<const char*> keys) {
            const auto* node = find_any(item, keys);
            if (!node || !node->is_string() || text::trim(node->get<std::string>()).empty())
                throw ParseError(where + " (" + upper + ") requires \"" + *keys.begin() + "\"",
                                 std::string(raw));
            return text::trim(node->get<std::string>());
        };
        auto reason = [&] { return optional_string(item, "reason", raw, where); };

        if (upper == "ADD") {
            ops.push_back(LibraryOp::add(required({"trigger"}), required({"action"})));
        } else if (upper == "MERGE") {
            const auto* ids = find_any(item, {"merge with ids", "merge_with_ids", "merge_ids"});
            if (!ids || !ids->is_array() || ids->empty())
                throw ParseError(where + " (MERGE) requires a non-empty \"merge with ids\" list",
                                 std::string(raw));
            std::vector<std::string> id_list;
            for (const auto& id : *ids) {
                if (!id.is_string()) throw ParseError(where + " merge ids must be strings", std::string(raw));
                id_list.push_back(text::trim(id.get<std::string>()));
            }
            ops.push_back(LibraryOp::merge(required({"trigger"}), required({"action"}),
                                           std::move(id_list)));
        } else if (upper == "SKIP" || upper == "KEEP") {
            ops.push_back(LibraryOp::skip(reason()));
        } else if (upper == "DELETE") {
            ops.push_back(LibraryOp::remove(required({"target id", "target_id", "id"}), reason()));
        } else if (upper == "MODIFY") {
            auto target = required({"target id", "target_id", "id"});
            auto trigger = required({"trigger"});
            auto action = required({"action"});
            ops.push_back(LibraryOp::remove(target, "modified"));
            ops.push_back(LibraryOp::add(trigger, action));
        } else {
            throw ParseError(where + ": unknown operation '" + label + "'", std::string(raw));
        }
    }
    return ops;
}

nlohmann::ordered_json to_json(const LibraryOp& op) {
    nlohmann::ordered_json j;
    j["operation"] = to_string(op.kind);
    switch (op.kind) {
        case LibraryOpKind::add:
            j["trigger"] = op.trigger;
            j["action"] = op.action;
            break;
        case LibraryOpKind::merge:
            j["trigger"] = op.trigger;
            j["action"] = op.action;
            j["merge with ids"] = op.merge_with_ids;
            break;
        case LibraryOpKind::skip: j["reason"] = op.reason; break;
        case LibraryOpKind::del:
            j["target id"] = op.target_id;
            j["reason"] = op.reason;
            break;
    }
    return j;
}

int parse_verdict(std::string_view raw) {
    std::string t = text::trim(raw);
    t.erase(std::remove_if(t.begin(), t.end(), [](char c) { return c == '`' || c == '"' || c == '\''; }),
            t.end());
    auto tokens = text::split_whitespace(t);
    if (!tokens.empty()) {
        std::string first = tokens.front();
        while (!first.empty() && (first.back() == '.' || first.back() == ',')) first.pop_back();
        if (first == "1") return 1;
        if (first == "0") return 0;
    }
    throw ParseError("judge verdict is not a bare 1 or 0", std::string(raw));
}

}  // namespace hkg
