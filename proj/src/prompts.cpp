#include "hyperkg/prompts.hpp"

#include <fstream>
#include <sstream>

#include "hyperkg/error.hpp"

namespace hkg {

namespace {

// Generated at configure time from prompts/*.txt, in PromptKind order.
constexpr const char* kBuiltinTemplates[kPromptKindCount] = {
#include "prompt_templates.inc"
};

constexpr std::string_view kFileNames[kPromptKindCount] = {
    "entity_extraction.txt", "relation_extraction.txt", "skill_update.txt",
    "unstable_reflection.txt", "missed_reflection.txt", "fact_verification.txt",
    "description_fusion.txt",
};

}  // namespace

std::string_view template_file_name(PromptKind kind) {
    return kFileNames[static_cast<std::size_t>(kind)];
}

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates instance = [] {
        PromptTemplates t;
        for (std::size_t i = 0; i < kPromptKindCount; ++i) t.templates_[i] = kBuiltinTemplates[i];
        return t;
    }();
    return instance;
}

void PromptTemplates::load_overrides(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw InvalidInput("prompt directory '" + dir.string() + "' does not exist");
    for (std::size_t i = 0; i < kPromptKindCount; ++i) {
        auto path = dir / kFileNames[i];
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        templates_[i] = ss.str();
    }
}

std::string PromptTemplates::render(PromptKind kind,
                                    const std::map<std::string, std::string>& values) const {
    return fill_template(get(kind), values);
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            auto close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos)
                throw InvalidInput("unterminated placeholder in prompt template");
            std::string key(tmpl.substr(i + 1, close - i - 1));
            auto it = values.find(key);
            if (it == values.end())
                throw InvalidInput("prompt template placeholder {" + key + "} has no value");
            out += it->second;
            i = close;
        } else if (c == '}') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') ++i;
            out.push_back('}');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace hkg
