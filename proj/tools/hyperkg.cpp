// hyperkg: extract, learn, eval, factcheck and library commands.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hyperkg/config.hpp"
#include "hyperkg/error.hpp"
#include "hyperkg/evaluator.hpp"
#include "hyperkg/extractor.hpp"
#include "hyperkg/gateway.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/prompts.hpp"
#include "hyperkg/skill_library.hpp"
#include "hyperkg/text.hpp"
#include "hyperkg/trainer.hpp"

namespace fs = std::filesystem;
using namespace hkg;

namespace {

struct Options {
    std::string config_path;
    std::string provider;
    std::string fixtures_dir;
    std::string output_dir;
    std::string record_dir;
    std::string prompts_dir;
    bool verbose = false;

    std::string doc;
    std::string skills;
    std::string manifest;
    int rounds = 1;
    std::string pred_dir;
    std::string gold_dir;
    std::vector<double> thresholds{kDefaultThresholds.begin(), kDefaultThresholds.end()};
    std::string facts;
    std::string graph;
    std::size_t top_n = 5;
    std::size_t hops = 2;
    std::string library_a;
    std::string library_b;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

RunConfig resolve_config(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.provider == "scripted") c.gateway.provider = ProviderKind::scripted;
    if (o.provider == "live") c.gateway.provider = ProviderKind::live;
    if (!o.fixtures_dir.empty()) c.paths.fixtures_dir = o.fixtures_dir;
    if (!o.output_dir.empty()) c.paths.output_dir = o.output_dir;
    if (!o.prompts_dir.empty()) c.prompts_dir = o.prompts_dir;
    if (!o.skills.empty()) c.paths.skill_library = o.skills;
    c.gateway.fixtures_dir = c.paths.fixtures_dir;
    c.validate();
    return c;
}

// Owns the gateway and, with --record, the recorder whose fixtures are saved on exit.
struct Session {
    RunConfig config;
    PromptTemplates prompts = PromptTemplates::builtin();
    std::unique_ptr<Gateway> gateway;
    RecordingProvider* recorder = nullptr;
    fs::path record_dir;

    explicit Session(const Options& o) : config(resolve_config(o)) {
        if (!config.prompts_dir.empty()) prompts.load_overrides(config.prompts_dir);
        if (!o.record_dir.empty()) {
            if (config.gateway.provider != ProviderKind::live)
                throw InvalidInput("--record requires the live provider");
            auto rec = std::make_unique<RecordingProvider>(make_live_provider(config.gateway));
            recorder = rec.get();
            record_dir = o.record_dir;
            gateway = std::make_unique<Gateway>(config.gateway, std::move(rec));
        } else {
            gateway = make_gateway(config.gateway);
        }
    }

    ~Session() {
        if (!recorder) return;
        try {
            recorder->recorded().save(record_dir);
            spdlog::info("recorded fixtures to {}", record_dir.string());
        } catch (const std::exception& e) {
            spdlog::error("saving recorded fixtures failed: {}", e.what());
        }
    }
};

int cmd_extract(const Options& o) {
    Session s(o);
    const fs::path doc_path(o.doc);
    const auto document = read_file(doc_path);
    const auto library =
        o.skills.empty() ? SkillLibrary{} : load_library(s.config.paths.skill_library);
    const auto id = doc_path.stem().string();
    auto result = run_pipeline(document, id, library, *s.gateway, s.config.pipeline(), {}, s.prompts);
    const auto out = s.config.paths.output_dir / (id + ".json");
    write_file(out, serialize_graph(result.graph));
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_learn(const Options& o) {
    Session s(o);
    const auto examples = load_training_examples(load_manifest(o.manifest));
    const fs::path lib_path = s.config.paths.skill_library;
    auto library = load_library(lib_path);
    for (int r = 0; r < o.rounds; ++r) {
        auto result = run_learning_round(examples, library, *s.gateway, s.config.rollout,
                                         s.config.pipeline(), s.prompts);
        library = std::move(result.library);
        save_library_atomic(library, lib_path);
        const auto report_path =
            s.config.paths.output_dir / ("round_" + std::to_string(library.round()) + ".json");
        write_file(report_path, result.report.dump(2) + "\n");
        const auto& t = result.report["totals"];
        std::cout << "round " << library.round() << ": library " << library.size()
                  << " skills, stable " << t["stable"] << ", unstable " << t["unstable"]
                  << ", missed " << t["missed"] << "\n";
    }
    return 0;
}

int cmd_eval(const Options& o) {
    Session s(o);
    std::vector<fs::path> gold_files;
    for (const auto& entry : fs::directory_iterator(o.gold_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            gold_files.push_back(entry.path());
    std::sort(gold_files.begin(), gold_files.end());
    if (gold_files.empty()) throw InvalidInput("no gold graphs (*.json) in " + o.gold_dir);

    std::vector<NamedGraphPair> pairs;
    for (const auto& gold_path : gold_files) {
        NamedGraphPair pair;
        pair.name = gold_path.stem().string();
        pair.gold = load_graph(gold_path);
        const auto pred_path = fs::path(o.pred_dir) / gold_path.filename();
        if (fs::exists(pred_path)) {
            pair.pred = load_graph(pred_path);
        } else {
            spdlog::warn("no prediction for {}; scoring it as an empty graph", pair.name);
            pair.pred = KnowledgeHypergraph(pair.name);
        }
        pairs.push_back(std::move(pair));
    }
    auto evaluation = evaluate_corpus(pairs, *s.gateway, o.thresholds);
    const auto& dir = s.config.paths.output_dir;
    write_file(dir / "eval_report.json", evaluation.report.dump(2) + "\n");
    write_file(dir / "pr_curve.csv", pr_curve_csv(evaluation.curve));
    for (const auto& p : evaluation.curve)
        std::cout << "tau=" << p.threshold << " P=" << p.precision << " R=" << p.recall
                  << " F1=" << p.f1 << "\n";
    return 0;
}

int cmd_factcheck(const Options& o) {
    Session s(o);
    std::vector<std::string> facts;
    std::istringstream lines(read_file(o.facts));
    for (std::string line; std::getline(lines, line);) {
        auto fact = text::trim(line);
        if (!fact.empty()) facts.push_back(fact);
    }
    if (facts.empty()) throw InvalidInput("facts file " + o.facts + " holds no facts");
    const auto graph = load_graph(o.graph);
    auto report = check_facts(facts, graph, *s.gateway, o.top_n, o.hops, s.prompts);
    write_file(s.config.paths.output_dir / "factcheck_report.json", report.to_json().dump(2) + "\n");
    std::cout << "accuracy " << report.accuracy << " (" << facts.size() << " facts)\n";
    return 0;
}

void print_skill(const Skill& s, std::string_view prefix = "") {
    std::cout << prefix << s.id << " (round " << s.created_round << ")\n"
              << "  TRIGGER: " << s.trigger << "\n"
              << "  ACTION: " << s.action << "\n";
    if (!s.lineage.empty()) std::cout << "  merged from: " << text::join(s.lineage, ", ") << "\n";
}

int cmd_library_show(const Options& o) {
    const auto library = load_library(o.library_a);
    std::cout << "round " << library.round() << ", " << library.size() << " skills\n";
    for (const auto& s : library.skills()) print_skill(s);
    return 0;
}

int cmd_library_diff(const Options& o) {
    const auto diff = diff_libraries(load_library(o.library_a), load_library(o.library_b));
    for (const auto& s : diff.removed) print_skill(s, "- ");
    for (const auto& s : diff.added) print_skill(s, "+ ");
    for (const auto& [before, after] : diff.changed) {
        print_skill(before, "~ ");
        print_skill(after, "  -> ");
    }
    std::cout << diff.added.size() << " added, " << diff.removed.size() << " removed, "
              << diff.changed.size() << " changed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge hypergraph extraction with a learned skill library"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--provider", o.provider, "Model backend")
        ->check(CLI::IsMember({"scripted", "live"}));
    app.add_option("--fixtures", o.fixtures_dir, "Fixture directory for the scripted provider");
    app.add_option("--output-dir", o.output_dir, "Directory all results are written under");
    app.add_option("--record", o.record_dir, "Record live exchanges as fixtures into this directory");
    app.add_option("--prompts-dir", o.prompts_dir, "Directory of prompt template overrides");
    app.add_flag("-v,--verbose", o.verbose, "Debug logging");

    int (*handler)(const Options&) = nullptr;

    auto* extract = app.add_subcommand("extract", "Extract a hypergraph from one document");
    extract->add_option("doc", o.doc, "Document (UTF-8 text)")->required()->check(CLI::ExistingFile);
    extract->add_option("--skills", o.skills, "Skill library to inject");
    extract->callback([&] { handler = cmd_extract; });

    auto* learn = app.add_subcommand("learn", "Run learning rounds over a training manifest");
    learn->add_option("manifest", o.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
    learn->add_option("--skills", o.skills, "Skill library file to update")->required();
    learn->add_option("--rounds", o.rounds, "Number of rounds")->check(CLI::PositiveNumber);
    learn->callback([&] { handler = cmd_learn; });

    auto* eval = app.add_subcommand("eval", "Score predicted graphs against gold graphs");
    eval->add_option("pred_dir", o.pred_dir, "Predicted graphs")->required()->check(CLI::ExistingDirectory);
    eval->add_option("gold_dir", o.gold_dir, "Gold graphs")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--thresholds", o.thresholds, "Similarity thresholds, ascending")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    eval->callback([&] { handler = cmd_eval; });

    auto* factcheck = app.add_subcommand("factcheck", "Judge which facts a graph supports");
    factcheck->add_option("facts", o.facts, "One fact per line")->required()->check(CLI::ExistingFile);
    factcheck->add_option("graph", o.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
    factcheck->add_option("--top-n", o.top_n, "Seed entities per fact")->check(CLI::PositiveNumber);
    factcheck->add_option("--hops", o.hops, "Incidence hops from the seeds");
    factcheck->callback([&] { handler = cmd_factcheck; });

    auto* library = app.add_subcommand("library", "Inspect skill libraries");
    library->require_subcommand(1);
    auto* show = library->add_subcommand("show", "Print a library");
    show->add_option("library", o.library_a)->required();
    show->callback([&] { handler = cmd_library_show; });
    auto* diff = library->add_subcommand("diff", "Compare two libraries");
    diff->add_option("before", o.library_a)->required();
    diff->add_option("after", o.library_b)->required();
    diff->callback([&] { handler = cmd_library_diff; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("hyperkg"));
    spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::warn);
    try {
        return handler(o);
    } catch (const FixtureMissError& e) {
        std::cerr << "error: fixture miss: " << e.key() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
