#include "hyperkg/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hyperkg/error.hpp"
#include "hyperkg/text.hpp"

namespace hkg {

double cosine(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) throw InvalidInput("cosine of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
    double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 2);
    ms = std::min(ms, static_cast<double>(max_backoff.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

void GatewayConfig::validate() const {
    if (temperature < 0) throw InvalidInput("gateway.temperature must be >= 0");
    if (max_parallel < 1 || max_parallel > 1024)
        throw InvalidInput("gateway.max_parallel must be in [1, 1024]");
    if (retry.max_attempts < 1) throw InvalidInput("gateway.retry.max_attempts must be >= 1");
    if (retry.multiplier < 1.0) throw InvalidInput("gateway.retry.multiplier must be >= 1");
}

Embedding hashing_embedding(std::string_view text, std::size_t dimension) {
    Embedding v(dimension, 0.0);
    if (dimension == 0) return v;
    auto fnv = [](std::string_view s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    };
    std::string token;
    bool any = false;
    auto flush = [&] {
        if (token.empty()) return;
        std::uint64_t h = fnv(token);
        v[h % dimension] += (h >> 63) ? -1.0 : 1.0;
        any = true;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) token.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    bool nonzero = false;
    for (double x : v) nonzero = nonzero || x != 0.0;
    if (!any || !nonzero) v[fnv(text) % dimension] = 1.0;
    return v;
}

// ---------------------------------------------------------------- scripted

std::string ScriptedProvider::key_for(std::string_view prompt, int sample_index) {
    return text::sha256_hex(prompt) + ":" + std::to_string(sample_index);
}

std::string ScriptedProvider::wildcard_key_for(std::string_view prompt) {
    return text::sha256_hex(prompt) + ":*";
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_directory(
    const std::filesystem::path& dir) {
    auto provider = std::make_unique<ScriptedProvider>();
    auto read_json = [&](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error("cannot open fixture file " + p.string());
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
    };
    if (!std::filesystem::is_directory(dir))
        throw InvalidInput("fixtures directory '" + dir.string() + "' does not exist");
    if (auto p = dir / "completions.json"; std::filesystem::exists(p)) {
        const auto j = read_json(p);
        for (const auto& [key, value] : j.items()) {
            if (!value.is_string()) throw ParseError(p.string() + ": value for " + key + " is not a string");
            provider->completions_[key] = value.get<std::string>();
        }
    }
    if (auto p = dir / "embeddings.json"; std::filesystem::exists(p)) {
        const auto j = read_json(p);
        for (const auto& [key, value] : j.items()) {
            if (!value.is_array()) throw ParseError(p.string() + ": value for '" + key + "' is not an array");
            provider->embeddings_[key] = value.get<Embedding>();
        }
    }
    if (auto p = dir / "options.json"; std::filesystem::exists(p)) {
        auto opts = read_json(p);
        provider->hashing_dimension_ = opts.value("hashing_fallback_dimension", std::size_t{0});
    }
    return provider;
}

void ScriptedProvider::save(const std::filesystem::path& dir) const {
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir);
    auto write = [&](const std::filesystem::path& p, const nlohmann::json& j) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << j.dump(2) << "\n";
    };
    write(dir / "completions.json", nlohmann::json(completions_));
    write(dir / "embeddings.json", nlohmann::json(embeddings_));
    if (hashing_dimension_ > 0)
        write(dir / "options.json", {{"hashing_fallback_dimension", hashing_dimension_}});
}

void ScriptedProvider::add_completion(std::string_view prompt, int sample_index,
                                      std::string response) {
    add_completion_key(key_for(prompt, sample_index), std::move(response));
}

void ScriptedProvider::add_completion_any_index(std::string_view prompt, std::string response) {
    add_completion_key(wildcard_key_for(prompt), std::move(response));
}

void ScriptedProvider::add_completion_key(std::string key, std::string response) {
    std::lock_guard lock(mutex_);
    completions_[std::move(key)] = std::move(response);
}

void ScriptedProvider::add_embedding(std::string text, Embedding vector) {
    std::lock_guard lock(mutex_);
    embeddings_[std::move(text)] = std::move(vector);
}

std::size_t ScriptedProvider::completion_count() const {
    std::lock_guard lock(mutex_);
    return completions_.size();
}

std::string ScriptedProvider::complete(const CompletionRequest& request) {
    const std::string hash = text::sha256_hex(request.prompt);
    const std::string key = hash + ":" + std::to_string(request.sample_index);
    std::lock_guard lock(mutex_);
    if (auto it = completions_.find(key); it != completions_.end()) return it->second;
    if (auto it = completions_.find(hash + ":*"); it != completions_.end()) return it->second;
    throw FixtureMissError(key);
}

std::vector<Embedding> ScriptedProvider::embed(const std::vector<std::string>& texts,
                                               const std::string&) {
    std::lock_guard lock(mutex_);
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (auto it = embeddings_.find(t); it != embeddings_.end()) out.push_back(it->second);
        else if (hashing_dimension_ > 0) out.push_back(hashing_embedding(t, hashing_dimension_));
        else throw FixtureMissError("embedding:" + t);
    }
    return out;
}

// ---------------------------------------------------------------- recording

std::string RecordingProvider::complete(const CompletionRequest& request) {
    std::string response = inner_->complete(request);
    recorded_.add_completion(request.prompt, request.sample_index, response);
    return response;
}

std::vector<Embedding> RecordingProvider::embed(const std::vector<std::string>& texts,
                                                const std::string& model_id) {
    auto vectors = inner_->embed(texts, model_id);
    for (std::size_t i = 0; i < texts.size() && i < vectors.size(); ++i)
        recorded_.add_embedding(texts[i], vectors[i]);
    return vectors;
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Provider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_parallel, 1, 1024))) {
    config_.validate();
    if (!provider_) throw InvalidInput("gateway requires a provider");
}

template <class Fn>
auto Gateway::with_retry(Fn&& fn) -> decltype(fn()) {
    for (int attempt = 1;; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(config_.retry.delay_before(attempt));
        slots_.acquire();
        ++requests_;
        try {
            auto result = fn();
            slots_.release();
            return result;
        } catch (const GatewayError& e) {
            slots_.release();
            if (!e.retryable() || attempt >= config_.retry.max_attempts) throw;
            spdlog::warn("gateway request failed (attempt {}/{}): {}", attempt,
                         config_.retry.max_attempts, e.what());
        } catch (...) {
            slots_.release();
            throw;
        }
    }
}

std::string Gateway::complete(std::string_view prompt, int sample_index,
                              std::optional<double> temperature) {
    if (prompt.empty()) throw InvalidInput("completion prompt must not be empty");
    CompletionRequest req{std::string(prompt), sample_index,
                          temperature.value_or(config_.temperature), config_.model_id};
    return with_retry([&] { return provider_->complete(req); });
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw InvalidInput("embed requires at least one text");
    for (const auto& t : texts)
        if (t.empty()) throw InvalidInput("embed texts must be non-empty");

    const std::string prefix = config_.embedding_model_id + '\x1f';
    std::vector<Embedding> out(texts.size());
    std::vector<std::string> missing;
    {
        std::lock_guard lock(cache_mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (auto it = cache_.find(prefix + texts[i]); it != cache_.end()) out[i] = it->second;
            else if (std::find(missing.begin(), missing.end(), texts[i]) == missing.end())
                missing.push_back(texts[i]);
        }
    }
    if (!missing.empty()) {
        auto vectors = with_retry(
            [&] { return provider_->embed(missing, config_.embedding_model_id); });
        if (vectors.size() != missing.size())
            throw GatewayError("embedding provider returned " + std::to_string(vectors.size()) +
                               " vectors for " + std::to_string(missing.size()) + " texts");
        std::lock_guard lock(cache_mutex_);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            auto& v = vectors[i];
            double norm = 0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (v.empty() || norm == 0 || !std::isfinite(norm))
                throw GatewayError("embedding for '" + missing[i] + "' has zero or invalid norm");
            for (double& x : v) x /= norm;
            cache_[prefix + missing[i]] = std::move(v);
        }
        for (std::size_t i = 0; i < texts.size(); ++i)
            if (out[i].empty()) out[i] = cache_.at(prefix + texts[i]);
    }
    for (const auto& v : out)
        if (v.size() != out.front().size())
            throw GatewayError("embedding dimensions differ within one request");
    return out;
}

Embedding Gateway::embed_one(const std::string& text) { return embed({text}).front(); }

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config) {
    config.validate();
    std::unique_ptr<Provider> provider;
    if (config.provider == ProviderKind::scripted) {
        if (config.fixtures_dir.empty())
            throw InvalidInput("scripted provider requires a fixtures directory");
        provider = ScriptedProvider::from_directory(config.fixtures_dir);
    } else {
        provider = make_live_provider(config);
    }
    return std::make_unique<Gateway>(config, std::move(provider));
}

}  // namespace hkg
