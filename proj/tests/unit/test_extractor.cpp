#include <doctest.h>

#include <mutex>

#include "hyperkg/error.hpp"
#include "hyperkg/extractor.hpp"
#include "hyperkg/gateway.hpp"
#include "support.hpp"

using namespace hkg;
using namespace hkg::testing;

namespace {

bool is_pass(const std::string& prompt, Tier tier) {
    return prompt.find("Current pass: " + std::string(to_string(tier)) + "\n") != std::string::npos;
}

bool is_entity_prompt(const std::string& prompt) {
    return prompt.find("named entity recognition") != std::string::npos;
}

Chunk chunk(std::string text, std::string id = "c0") {
    return Chunk{std::move(id), text, 0, text.size()};
}

ExtractionConfig single_tier(Tier t) {
    ExtractionConfig c;
    c.tiers = {t};
    return c;
}

}  // namespace

TEST_CASE("entity extraction") {
    SUBCASE("case-study entities") {
        auto gw = function_gateway(
            [](const CompletionRequest& r) -> std::string {
                REQUIRE(r.prompt.find("Spacewar! was developed in 1962 at MIT.") != std::string::npos);
                return R"({"nodes":[
                    {"name":"Spacewar!","type":"video game","description":"early computer game"},
                    {"name":"1962","type":"date","description":"year"},
                    {"name":"Massachusetts Institute of Technology","type":"organization","description":"university"}]})";
            },
            nullptr);
        auto mentions = extract_entities(chunk("Spacewar! was developed in 1962 at MIT."), *gw, {});
        std::set<std::string> names;
        for (const auto& m : mentions) {
            names.insert(m.entity.name);
            CHECK(m.chunk_id == "c0");
        }
        CHECK(names == std::set<std::string>{"Spacewar!", "1962", "Massachusetts Institute of Technology"});
    }
    SUBCASE("noise chunk returns nothing") {
        auto gw = function_gateway([](const CompletionRequest&) { return std::string("{State: False}"); }, nullptr);
        CHECK(extract_entities(chunk("@@@ ### !!!"), *gw, {}).empty());
    }
    SUBCASE("duplicate names collapse, first description kept") {
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"nodes":[
                    {"name":"Pong","type":"game","description":"first"},
                    {"name":"Atari","type":"company","description":"maker"},
                    {"name":" Pong ","type":"game","description":"second"}]})");
            },
            nullptr);
        auto mentions = extract_entities(chunk("Pong by Atari."), *gw, {});
        std::set<std::string> distinct;
        for (const auto& m : mentions) distinct.insert(m.entity.name);
        CHECK(mentions.size() == distinct.size());
        CHECK(mentions[0].entity.description == "first");
    }
    SUBCASE("sampling index and temperature are forwarded") {
        int seen_index = -1;
        double seen_temp = -1;
        auto gw = function_gateway(
            [&](const CompletionRequest& r) {
                seen_index = r.sample_index;
                seen_temp = r.temperature;
                return std::string("{State: False}");
            },
            nullptr);
        extract_entities(chunk("x"), *gw, {}, Sampling{3, 0.8});
        CHECK(seen_index == 3);
        CHECK(seen_temp == 0.8);
    }
}

TEST_CASE("tiered hyperedge extraction") {
    SUBCASE("binary edge over known nodes") {
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"relations":[{"description":"runs on","nodes":["pong","atari 2600"],"type":"binary"}]})");
            },
            nullptr);
        auto out = extract_hyperedges_tiered(chunk("pong on the atari 2600"),
                                             {entity("pong"), entity("atari 2600")}, {}, *gw,
                                             single_tier(Tier::binary));
        REQUIRE(out.edges.size() == 1);
        CHECK(out.edges[0].member_set() == std::set<std::string>{"pong", "atari 2600"});
        CHECK(out.edges[0].tier == Tier::binary);
        CHECK(out.edges[0].provenance == std::set<std::string>{"c0"});
        REQUIRE(out.traces.size() == 1);
        CHECK(out.traces[0].tier == Tier::binary);
    }
    SUBCASE("unknown members are filtered and short edges dropped") {
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"relations":[
                    {"description":"competes with","nodes":["pong","Nintendo"],"type":"binary"},
                    {"description":"sold with","nodes":["pong","Nintendo","atari 2600"],"type":"nary"}]})");
            },
            nullptr);
        auto out = extract_hyperedges_tiered(chunk("t"), {entity("pong"), entity("atari 2600")}, {},
                                             *gw, single_tier(Tier::nary));
        REQUIRE(out.edges.size() == 1);
        CHECK(out.edges[0].members == std::vector<std::string>{"pong", "atari 2600"});
        CHECK(out.warnings.size() == 1);
    }
    SUBCASE("six-member n-ary edge") {
        const std::vector<std::string> names{"1990s", "3d graphic", "cd-rom", "doom", "quake", "final fantasy vii"};
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"relations":[{"description":"shaped 1990s gaming","nodes":
                    ["1990s","3d graphic","cd-rom","doom","quake","final fantasy vii"],"type":"nary"}]})");
            },
            nullptr);
        std::vector<Entity> known;
        for (const auto& n : names) known.push_back(entity(n));
        auto out = extract_hyperedges_tiered(chunk("t"), known, {}, *gw, single_tier(Tier::nary));
        REQUIRE(out.edges.size() == 1);
        CHECK(out.edges[0].members.size() == 6);
        CHECK(out.edges[0].tier == Tier::nary);
    }
    SUBCASE("passes run coarse to fine and see earlier edges") {
        std::vector<std::string> prompts;
        std::mutex m;
        auto gw = function_gateway(
            [&](const CompletionRequest& r) -> std::string {
                std::lock_guard lock(m);
                prompts.push_back(r.prompt);
                if (is_pass(r.prompt, Tier::binary))
                    return R"({"relations":[{"description":"married","nodes":["Marie","Pierre"]}]})";
                if (is_pass(r.prompt, Tier::qualified_binary))
                    return R"({"relations":[{"description":"married in","nodes":["Marie","Pierre","1895"]}]})";
                return R"({"relations":[]})";
            },
            nullptr);
        auto out = extract_hyperedges_tiered(chunk("Marie married Pierre in 1895."),
                                             {entity("Marie"), entity("Pierre"), entity("1895")}, {},
                                             *gw, ExtractionConfig{});
        REQUIRE(prompts.size() == 3);
        CHECK(is_pass(prompts[0], Tier::binary));
        CHECK(prompts[0].find("(none)") != std::string::npos);
        CHECK(prompts[1].find("- {Marie; Pierre} -> married") != std::string::npos);
        REQUIRE(out.edges.size() == 2);
        CHECK(out.edges[1].tier == Tier::qualified_binary);
    }
    SUBCASE("tier fallback when the count does not fit the pass") {
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"relations":[{"description":"r","nodes":["A","B","C"]}]})");
            },
            nullptr);
        auto out = extract_hyperedges_tiered(chunk("t"), {entity("A"), entity("B"), entity("C")}, {},
                                             *gw, single_tier(Tier::binary));
        CHECK(out.edges[0].tier == Tier::nary);
    }
    SUBCASE("every tier unparseable") {
        auto gw = function_gateway([](const CompletionRequest&) { return std::string("no json"); }, nullptr);
        CHECK_THROWS_AS(extract_hyperedges_tiered(chunk("t"), {entity("A"), entity("B")}, {}, *gw,
                                                  ExtractionConfig{}),
                        ExtractionError);
    }
    SUBCASE("case-folded node names resolve") {
        auto gw = function_gateway(
            [](const CompletionRequest&) {
                return std::string(R"({"relations":[{"description":"r","nodes":["PONG","atari  2600"]}]})");
            },
            nullptr);
        auto out = extract_hyperedges_tiered(chunk("t"), {entity("Pong"), entity("Atari 2600")}, {}, *gw,
                                             single_tier(Tier::binary));
        CHECK(out.edges[0].members == std::vector<std::string>{"Pong", "Atari 2600"});
    }
}

TEST_CASE("relation prompt rendering") {
    auto lib = apply_library_ops(SkillLibrary{}, {LibraryOp::add("attribution frame", "bind source")});
    auto with = render_relation_prompt(Tier::nary, "T", {entity("A"), entity("B")}, lib.skills(), true, {});
    CHECK(with.find("attribution frame") != std::string::npos);
    CHECK(with.find("Known nodes: A; B") != std::string::npos);
    CHECK(with.find("\"type\":\"nary\"") != std::string::npos);
    auto without = render_relation_prompt(Tier::nary, "T", {entity("A"), entity("B")}, lib.skills(), false, {});
    CHECK(without.find("attribution frame") == std::string::npos);
    CHECK(without.find("(no experiences yet)") != std::string::npos);
}

TEST_CASE("document extraction") {
    auto responder = [](const CompletionRequest& r) -> std::string {
        if (is_entity_prompt(r.prompt)) {
            if (r.prompt.find("Pong") == std::string::npos) return "{State: False}";
            return R"({"nodes":[{"name":"Pong","type":"game","description":"arcade game"},
                               {"name":"Atari","type":"company","description":"maker"}]})";
        }
        if (is_pass(r.prompt, Tier::binary))
            return R"({"relations":[{"description":"made by","nodes":["Pong","Atari"]}]})";
        return R"({"relations":[]})";
    };

    SUBCASE("single chunk equals that chunk's extraction") {
        auto gw = function_gateway(responder, nullptr);
        auto doc = extract_document("Pong was made by Atari.", "d", SkillLibrary{}, *gw, {}, {});
        CHECK(doc.raw.source_id == "d");
        CHECK(doc.raw.mentions.size() == 2);
        REQUIRE(doc.raw.edges.size() == 1);
        CHECK(doc.raw.edges[0].relation == "made by");
        CHECK(doc.raw.traces.size() == 3);
    }
    SUBCASE("overlapping chunks keep separate mentions") {
        auto gw = function_gateway(responder, nullptr);
        ChunkingConfig cc;
        cc.target_size = 40;
        cc.overlap = 10;
        const std::string text = "Pong was made by Atari in California. Pong became a hit game.";
        auto chunks = chunk_document(text, cc);
        REQUIRE(chunks.size() == 2);
        auto doc = extract_document(text, "d", SkillLibrary{}, *gw, cc, {});
        std::size_t pong = 0;
        for (const auto& m : doc.raw.mentions) pong += m.entity.name == "Pong";
        CHECK(pong == 2);
        CHECK(doc.raw.mentions[0].chunk_id == "c0");
        CHECK(doc.raw.mentions.back().chunk_id == "c1");
    }
    SUBCASE("fixture misses propagate") {
        auto [gw, p] = scripted_gateway();
        CHECK_THROWS_AS(extract_document("Pong.", "d", SkillLibrary{}, *gw, {}, {}), FixtureMissError);
    }
    SUBCASE("one failing chunk is skipped with a warning") {
        auto gw = function_gateway(
            [&](const CompletionRequest& r) -> std::string {
                if (is_entity_prompt(r.prompt) && r.prompt.find("broken") != std::string::npos)
                    return "garbage";
                return responder(r);
            },
            nullptr);
        ChunkingConfig cc;
        cc.target_size = 40;
        cc.overlap = 5;
        const std::string text = "Pong was made by Atari long ago.\n\nThen broken text came after it.";
        auto doc = extract_document(text, "d", SkillLibrary{}, *gw, cc, {});
        CHECK(doc.raw.mentions.size() == 2);
        CHECK_FALSE(doc.warnings.empty());
    }
    SUBCASE("skills are injected into relation prompts") {
        bool saw_skill = false;
        std::mutex m;
        auto gw = function_gateway(
            [&](const CompletionRequest& r) {
                if (!is_entity_prompt(r.prompt) && r.prompt.find("S1:") != std::string::npos) {
                    std::lock_guard lock(m);
                    saw_skill = true;
                }
                return responder(r);
            },
            nullptr);
        auto lib = apply_library_ops(SkillLibrary{}, {LibraryOp::add("maker cue", "bind maker")});
        extract_document("Pong was made by Atari.", "d", lib, *gw, {}, {});
        CHECK(saw_skill);
    }
}
