#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"

namespace hkg {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidInput("base_url needs a scheme: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_begin), prefix};
}

class LiveProvider : public Provider {
public:
    explicit LiveProvider(const GatewayConfig& config)
        : endpoint_(split_url(config.base_url)),
          api_key_env_(config.api_key_env),
          timeout_seconds_(config.timeout_seconds) {}

    std::string complete(const CompletionRequest& request) override {
        nlohmann::json body = {
            {"model", request.model_id},
            {"temperature", request.temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        };
        auto reply = post("/chat/completions", body);
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(std::string("unexpected chat completion payload: ") + e.what());
        }
    }

    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string& model_id) override {
        nlohmann::json body = {{"model", model_id}, {"input", texts}};
        auto reply = post("/embeddings", body);
        std::vector<Embedding> out(texts.size());
        try {
            for (const auto& item : reply.at("data")) {
                auto index = item.at("index").get<std::size_t>();
                if (index >= out.size()) throw GatewayError("embedding index out of range");
                out[index] = item.at("embedding").get<Embedding>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(std::string("unexpected embedding payload: ") + e.what());
        }
        return out;
    }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        const char* key = std::getenv(api_key_env_.c_str());
        if (!key || !*key)
            throw GatewayError("environment variable " + api_key_env_ + " is not set");
        httplib::Client client(endpoint_.origin);
        client.set_connection_timeout(timeout_seconds_);
        client.set_read_timeout(timeout_seconds_);
        client.set_bearer_token_auth(key);
        auto res = client.Post(endpoint_.path_prefix + path, body.dump(), "application/json");
        if (!res)
            throw GatewayError("transport error: " + httplib::to_string(res.error()), true);
        if (res->status == 429 || res->status >= 500)
            throw GatewayError("HTTP " + std::to_string(res->status) + " from " + path, true);
        if (res->status != 200)
            throw GatewayError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                               res->body.substr(0, 512));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(std::string("invalid JSON from provider: ") + e.what());
        }
    }

    Endpoint endpoint_;
    std::string api_key_env_;
    int timeout_seconds_;
};

}  // namespace

std::unique_ptr<Provider> make_live_provider(const GatewayConfig& config) {
    return std::make_unique<LiveProvider>(config);
}

}  // namespace hkg
