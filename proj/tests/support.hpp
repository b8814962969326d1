#pragma once

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hyperkg/error.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/model.hpp"

namespace hkg::testing {

// Provider driven by plain functions; unset functions throw FixtureMissError.
class FunctionProvider : public Provider {
public:
    using CompleteFn = std::function<std::string(const CompletionRequest&)>;
    using EmbedFn = std::function<Embedding(const std::string&)>;

    FunctionProvider(CompleteFn complete, EmbedFn embed)
        : complete_(std::move(complete)), embed_(std::move(embed)) {}

    std::string complete(const CompletionRequest& request) override {
        if (!complete_) throw FixtureMissError(request.prompt.substr(0, 40));
        return complete_(request);
    }
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string&) override {
        std::vector<Embedding> out;
        for (const auto& t : texts) {
            if (!embed_) throw FixtureMissError("embedding:" + t);
            out.push_back(embed_(t));
        }
        return out;
    }

private:
    CompleteFn complete_;
    EmbedFn embed_;
};

inline GatewayConfig fast_config(std::size_t parallel = 4) {
    GatewayConfig c;
    c.max_parallel = parallel;
    c.retry.initial_backoff = std::chrono::milliseconds(1);
    c.retry.max_backoff = std::chrono::milliseconds(2);
    return c;
}

inline std::unique_ptr<Gateway> function_gateway(FunctionProvider::CompleteFn complete,
                                                 FunctionProvider::EmbedFn embed,
                                                 std::size_t parallel = 4) {
    return std::make_unique<Gateway>(
        fast_config(parallel),
        std::make_unique<FunctionProvider>(std::move(complete), std::move(embed)));
}

// Scripted gateway over an in-memory provider; the returned pointer stays owned by the gateway.
inline std::pair<std::unique_ptr<Gateway>, ScriptedProvider*> scripted_gateway(
    std::size_t hashing_dim = 0, std::size_t parallel = 4) {
    auto provider = std::make_unique<ScriptedProvider>();
    provider->set_hashing_fallback(hashing_dim);
    auto* raw = provider.get();
    return {std::make_unique<Gateway>(fast_config(parallel), std::move(provider)), raw};
}

// Unit vector at angle `cos_to_axis` from e0, in the plane of e0 and e_axis.
inline Embedding tilted(double cos_to_e0, std::size_t axis, std::size_t dim) {
    Embedding v(dim, 0.0);
    v[0] = cos_to_e0;
    v[axis] = std::sqrt(std::max(0.0, 1.0 - cos_to_e0 * cos_to_e0));
    return v;
}

inline Embedding one_hot(std::size_t i, std::size_t dim) {
    Embedding v(dim, 0.0);
    v[i] = 1.0;
    return v;
}

inline Entity entity(std::string name, std::string type = "Thing", std::string description = "") {
    return Entity{std::move(name), std::move(type), std::move(description), {}};
}

inline Hyperedge edge(std::string relation, std::vector<std::string> members,
                      std::set<std::string> provenance = {"c0"}) {
    Hyperedge e;
    e.relation = std::move(relation);
    e.tier = members.size() == 2 ? Tier::binary : Tier::nary;
    e.members = std::move(members);
    e.provenance = std::move(provenance);
    return e;
}

}  // namespace hkg::testing
