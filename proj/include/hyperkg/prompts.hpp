#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace hkg {

enum class PromptKind {
    entity_extraction,
    relation_extraction,
    skill_update,
    unstable_reflection,
    missed_reflection,
    fact_verification,
    description_fusion,
};

inline constexpr std::size_t kPromptKindCount = 7;

// File name (without directory) a template is loaded from, e.g. "entity_extraction.txt".
std::string_view template_file_name(PromptKind kind);

// Prompt templates with named placeholders like {text} or {known nodes}.
// "{{" and "}}" render as literal braces.
class PromptTemplates {
public:
    // Templates compiled into the library.
    static const PromptTemplates& builtin();

    // Replaces every template for which `dir` holds a file of the expected name.
    void load_overrides(const std::filesystem::path& dir);

    const std::string& get(PromptKind kind) const { return templates_[index(kind)]; }
    void set(PromptKind kind, std::string text) { templates_[index(kind)] = std::move(text); }

    std::string render(PromptKind kind, const std::map<std::string, std::string>& values) const;

private:
    static std::size_t index(PromptKind kind) { return static_cast<std::size_t>(kind); }
    std::array<std::string, kPromptKindCount> templates_;
};

// Throws InvalidInput on a placeholder missing from `values` or an unmatched brace.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace hkg
