#include "hyperkg/skill_library.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

namespace {

// Numeric suffix of "E<n>", or -1.
long id_number(std::string_view id) {
    if (id.size() < 2 || id.front() != 'E') return -1;
    long n = 0;
    for (char c : id.substr(1)) {
        if (c < '0' || c > '9') return -1;
        n = n * 10 + (c - '0');
    }
    return n;
}

bool id_less(const std::string& a, const std::string& b) {
    long na = id_number(a), nb = id_number(b);
    if (na != nb) return na < nb;
    return a < b;
}

}  // namespace

const Skill* SkillLibrary::find(std::string_view id) const {
    for (const auto& s : skills_)
        if (s.id == id) return &s;
    return nullptr;
}

SkillLibrary apply_ops_detail(const SkillLibrary& library, const std::vector<LibraryOp>& ops,
                              bool advance) {
    SkillLibrary next = library;
    const int stamp = library.round_ + 1;
    auto erase_id = [&](const std::string& id, std::string_view op) {
        auto it = std::find_if(next.skills_.begin(), next.skills_.end(),
                               [&](const Skill& s) { return s.id == id; });
        if (it == next.skills_.end())
            throw OpApplicationError(std::string(op) + " references unknown skill id '" + id + "'");
        next.skills_.erase(it);
    };
    auto append = [&](const LibraryOp& op, std::vector<std::string> lineage) {
        if (text::trim(op.trigger).empty() || text::trim(op.action).empty())
            throw OpApplicationError(std::string(to_string(op.kind)) +
                                     " requires non-empty trigger and action");
        Skill s{"E" + std::to_string(next.next_number_++), op.trigger, op.action, stamp,
                std::move(lineage)};
        next.skills_.push_back(std::move(s));
    };

    for (const auto& op : ops) {
        switch (op.kind) {
            case LibraryOpKind::add: append(op, {}); break;
            case LibraryOpKind::merge: {
                if (op.merge_with_ids.empty())
                    throw OpApplicationError("MERGE requires at least one id");
                std::vector<std::string> lineage;
                for (const auto& id : op.merge_with_ids) {
                    if (std::find(lineage.begin(), lineage.end(), id) != lineage.end()) continue;
                    erase_id(id, "MERGE");
                    lineage.push_back(id);
                }
                append(op, std::move(lineage));
                break;
            }
            case LibraryOpKind::del: erase_id(op.target_id, "DELETE"); break;
            case LibraryOpKind::skip: break;
        }
    }
    if (advance) ++next.round_;
    return next;
}

SkillLibrary apply_library_ops(const SkillLibrary& library, const std::vector<LibraryOp>& ops) {
    return apply_ops_detail(library, ops, true);
}

SkillLibrary apply_library_ops_within_round(const SkillLibrary& library,
                                            const std::vector<LibraryOp>& ops) {
    return apply_ops_detail(library, ops, false);
}

SkillLibrary advance_round(const SkillLibrary& library) {
    return apply_ops_detail(library, {}, true);
}

std::vector<Skill> select_skills(const SkillLibrary& library, std::string_view context,
                                 std::size_t k, Gateway& gateway) {
    if (k == 0) throw InvalidInput("select_skills requires k >= 1");
    const auto& skills = library.skills();
    if (skills.size() <= k) return skills;

    std::vector<double> scores(skills.size(), 0.0);
    try {
        std::vector<std::string> texts{std::string(context)};
        for (const auto& s : skills) texts.push_back(s.trigger);
        auto vectors = gateway.embed(texts);
        for (std::size_t i = 0; i < skills.size(); ++i)
            scores[i] = cosine(vectors[i + 1], vectors[0]);
    } catch (const FixtureMissError&) {
        throw;
    } catch (const Error& e) {
        spdlog::warn("skill retrieval fell back to id order: {}", e.what());
        return {skills.begin(), skills.begin() + static_cast<std::ptrdiff_t>(k)};
    }
    std::vector<std::size_t> order(skills.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<Skill> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(skills[order[i]]);
    return out;
}

std::string render_skill_block(const std::vector<Skill>& skills) {
    if (skills.empty()) return "(no experiences yet)";
    std::string out;
    for (std::size_t i = 0; i < skills.size(); ++i) {
        if (i) out += "\n\n";
        out += "S" + std::to_string(i + 1) + ":\n";
        out += "  Trigger: " + skills[i].trigger + "\n";
        out += "  Action: " + skills[i].action;
    }
    return out;
}

std::string render_experience_pool(const SkillLibrary& library) {
    if (library.empty()) return "(empty pool)";
    std::string out;
    for (const auto& s : library.skills()) {
        nlohmann::ordered_json j{{"trigger", s.trigger}, {"action", s.action}};
        out += "[" + s.id + "] " + j.dump() + "\n";
    }
    out.pop_back();
    return out;
}

nlohmann::ordered_json to_json(const SkillLibrary& library) {
    std::vector<const Skill*> sorted;
    for (const auto& s : library.skills()) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(),
              [](const Skill* a, const Skill* b) { return id_less(a->id, b->id); });
    nlohmann::ordered_json skills = nlohmann::ordered_json::array();
    for (const Skill* s : sorted) {
        skills.push_back({{"id", s->id},
                          {"trigger", s->trigger},
                          {"action", s->action},
                          {"created_round", s->created_round},
                          {"lineage", s->lineage}});
    }
    return {{"round", library.round()},
            {"next_id", library.next_id()},
            {"skills", std::move(skills)}};
}

SkillLibrary library_from_json(const nlohmann::json& j) {
    SkillLibrary lib;
    try {
        lib.round_ = j.at("round").get<int>();
        if (lib.round_ < 0) throw ParseError("library round must be >= 0");
        long max_number = -1;
        for (const auto& item : j.at("skills")) {
            Skill s;
            s.id = item.at("id").get<std::string>();
            s.trigger = item.at("trigger").get<std::string>();
            s.action = item.at("action").get<std::string>();
            s.created_round = item.at("created_round").get<int>();
            s.lineage = item.at("lineage").get<std::vector<std::string>>();
            if (id_number(s.id) < 0) throw ParseError("skill id '" + s.id + "' is not of the form E<n>");
            if (lib.find(s.id)) throw ParseError("duplicate skill id '" + s.id + "'");
            if (text::trim(s.trigger).empty() || text::trim(s.action).empty())
                throw ParseError("skill '" + s.id + "' has empty trigger or action");
            max_number = std::max(max_number, id_number(s.id));
            for (const auto& l : s.lineage) max_number = std::max(max_number, id_number(l));
            lib.skills_.push_back(std::move(s));
        }
        std::sort(lib.skills_.begin(), lib.skills_.end(),
                  [](const Skill& a, const Skill& b) { return id_less(a.id, b.id); });
        lib.next_number_ = max_number + 1;
        // Ids of deleted skills survive only in the stored counter.
        if (auto it = j.find("next_id"); it != j.end()) {
            const long stored = id_number(it->get<std::string>());
            if (stored < 0) throw ParseError("library next_id is not of the form E<n>");
            lib.next_number_ = std::max(lib.next_number_, stored);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("skill library: ") + e.what());
    }
    return lib;
}

std::string serialize_library(const SkillLibrary& library) {
    return to_json(library).dump(2) + "\n";
}

SkillLibrary deserialize_library(std::string_view text) {
    try {
        return library_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("skill library: ") + e.what());
    }
}

SkillLibrary load_library(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_library(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_library_atomic(const SkillLibrary& library, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << serialize_library(library);
        out.flush();
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

LibraryDiff diff_libraries(const SkillLibrary& before, const SkillLibrary& after) {
    LibraryDiff d;
    for (const auto& s : before.skills()) {
        const Skill* other = after.find(s.id);
        if (!other) d.removed.push_back(s);
        else if (!(*other == s)) d.changed.emplace_back(s, *other);
    }
    for (const auto& s : after.skills())
        if (!before.find(s.id)) d.added.push_back(s);
    return d;
}

}  // namespace hkg
