#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hkg {

using Embedding = std::vector<double>;

// Cosine similarity; 0 when either vector has zero norm. Sizes must match.
double cosine(const Embedding& a, const Embedding& b);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};

    std::chrono::milliseconds delay_before(int attempt) const;  // attempt >= 2
};

enum class ProviderKind { live, scripted };

struct GatewayConfig {
    ProviderKind provider = ProviderKind::scripted;
    std::string model_id = "gpt-4o-mini";
    double temperature = 0.0;
    std::size_t max_parallel = 4;
    RetryPolicy retry;
    std::string embedding_model_id = "all-MiniLM-L6-v2";

    // Live provider only. OpenAI-compatible base URL, e.g. https://api.openai.com/v1
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "HYPERKG_API_KEY";
    int timeout_seconds = 120;

    // Scripted provider only.
    std::filesystem::path fixtures_dir;

    void validate() const;
};

struct CompletionRequest {
    std::string prompt;
    int sample_index = 0;
    double temperature = 0.0;
    std::string model_id;
};

// Backend for chat completion and text embedding.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) = 0;
};

// Feature-hashed bag of lower-cased alphanumeric tokens. Deterministic; not normalized.
Embedding hashing_embedding(std::string_view text, std::size_t dimension);

// Offline provider backed by fixtures. Completions are keyed "<sha256(prompt)>:<sample_index>";
// a "<sha256(prompt)>:*" entry answers any sample index without an exact entry.
class ScriptedProvider : public Provider {
public:
    static std::string key_for(std::string_view prompt, int sample_index);
    static std::string wildcard_key_for(std::string_view prompt);

    // Reads completions.json, embeddings.json and optional options.json from `dir`.
    static std::unique_ptr<ScriptedProvider> from_directory(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    void add_completion(std::string_view prompt, int sample_index, std::string response);
    void add_completion_any_index(std::string_view prompt, std::string response);
    void add_completion_key(std::string key, std::string response);
    void add_embedding(std::string text, Embedding vector);

    // Texts without an embedding fixture get hashing_embedding(text, dimension). 0 disables.
    void set_hashing_fallback(std::size_t dimension) { hashing_dimension_ = dimension; }

    std::string complete(const CompletionRequest& request) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string& model_id) override;

    std::size_t completion_count() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> completions_;
    std::map<std::string, Embedding> embeddings_;
    std::size_t hashing_dimension_ = 0;
};

// Forwards to an inner provider and records every exchange as scripted fixtures.
class RecordingProvider : public Provider {
public:
    explicit RecordingProvider(std::unique_ptr<Provider> inner) : inner_(std::move(inner)) {}

    std::string complete(const CompletionRequest& request) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string& model_id) override;

    const ScriptedProvider& recorded() const { return recorded_; }

private:
    std::unique_ptr<Provider> inner_;
    ScriptedProvider recorded_;
};

// OpenAI-compatible HTTP backend (chat/completions and embeddings).
std::unique_ptr<Provider> make_live_provider(const GatewayConfig& config);

// Bounded-concurrency, retrying, caching front door used by every pipeline stage.
class Gateway {
public:
    Gateway(GatewayConfig config, std::unique_ptr<Provider> provider);

    // `temperature` overrides config().temperature for this call (rollouts sample hotter).
    std::string complete(std::string_view prompt, int sample_index = 0,
                         std::optional<double> temperature = std::nullopt);

    // Unit-normalized vectors, one per text, cached by (embedding_model_id, text).
    std::vector<Embedding> embed(const std::vector<std::string>& texts);
    Embedding embed_one(const std::string& text);

    const GatewayConfig& config() const noexcept { return config_; }
    std::size_t request_count() const noexcept { return requests_.load(); }
    std::size_t max_parallel() const noexcept { return config_.max_parallel; }

private:
    template <class Fn>
    auto with_retry(Fn&& fn) -> decltype(fn());

    GatewayConfig config_;
    std::unique_ptr<Provider> provider_;
    std::counting_semaphore<1024> slots_;
    std::atomic<std::size_t> requests_{0};
    std::mutex cache_mutex_;
    std::unordered_map<std::string, Embedding> cache_;
};

// Builds the provider named by config.provider.
std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace hkg
