#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hyperkg/parsers.hpp"

namespace hkg {

class Gateway;

struct Skill {
    std::string id;  // "E<n>", assigned in insertion order
    std::string trigger;
    std::string action;
    int created_round = 0;
    std::vector<std::string> lineage;  // ids merged into this skill

    friend bool operator==(const Skill&, const Skill&) = default;
};

// Global skill library. Starts empty; grows and shrinks only through apply_library_ops.
class SkillLibrary {
public:
    SkillLibrary() = default;

    const std::vector<Skill>& skills() const noexcept { return skills_; }
    int round() const noexcept { return round_; }
    std::size_t size() const noexcept { return skills_.size(); }
    bool empty() const noexcept { return skills_.empty(); }

    const Skill* find(std::string_view id) const;

    // Next id ADD/MERGE will assign.
    std::string next_id() const { return "E" + std::to_string(next_number_); }

    friend bool operator==(const SkillLibrary& a, const SkillLibrary& b) {
        return a.round_ == b.round_ && a.next_number_ == b.next_number_ && a.skills_ == b.skills_;
    }

    friend SkillLibrary library_from_json(const nlohmann::json& j);
    friend SkillLibrary apply_ops_detail(const SkillLibrary&, const std::vector<LibraryOp>&, bool);

private:
    std::vector<Skill> skills_;
    int round_ = 0;
    long next_number_ = 0;
};

// Applies ops in order, all-or-nothing, and advances the round counter once.
// Throws OpApplicationError naming the first unknown id.
SkillLibrary apply_library_ops(const SkillLibrary& library, const std::vector<LibraryOp>& ops);

// Same as apply_library_ops but leaves the round counter alone; new skills are stamped with
// round() + 1. Used when several updates belong to one learning round.
SkillLibrary apply_library_ops_within_round(const SkillLibrary& library,
                                            const std::vector<LibraryOp>& ops);

SkillLibrary advance_round(const SkillLibrary& library);

// All skills in id order when size <= k; else the k skills whose trigger is most similar to
// `context`, best first, ties by id order. Falls back to the first k on embedding failure.
std::vector<Skill> select_skills(const SkillLibrary& library, std::string_view context,
                                 std::size_t k, Gateway& gateway);

// Numbered S1..Sn Trigger/Action block for prompt injection.
std::string render_skill_block(const std::vector<Skill>& skills);

// E-id keyed listing used as the controller's "Current Experience Pool".
std::string render_experience_pool(const SkillLibrary& library);

nlohmann::ordered_json to_json(const SkillLibrary& library);
SkillLibrary library_from_json(const nlohmann::json& j);

std::string serialize_library(const SkillLibrary& library);
SkillLibrary deserialize_library(std::string_view text);

// Missing file loads as the empty library.
SkillLibrary load_library(const std::filesystem::path& path);
// Writes a temp file next to `path` and renames it into place.
void save_library_atomic(const SkillLibrary& library, const std::filesystem::path& path);

struct LibraryDiff {
    std::vector<Skill> added;
    std::vector<Skill> removed;
    std::vector<std::pair<Skill, Skill>> changed;
};

LibraryDiff diff_libraries(const SkillLibrary& before, const SkillLibrary& after);

}  // namespace hkg
