// faqmap CLI: index | annotate | evaluate | serve.
//
// Exit codes: 0 ok, 2 usage/validation, 3 empty result, 4 backend unavailable.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "faqmap/config.hpp"
#include "faqmap/evalkit.hpp"
#include "faqmap/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace faqmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitBackend = 4;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool no_cache = false;
    std::optional<bool> parallel;
    std::string backend_mode;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Run config JSON")->required();
    cmd->add_option("--seed", flags.seed, "Override the config seed");
    cmd->add_flag("--no-cache", flags.no_cache, "Bypass the result cache");
    auto* par = cmd->add_flag("--parallel", "Run agents concurrently");
    auto* seq = cmd->add_flag("--sequential", "Run agents one at a time");
    par->excludes(seq);
    cmd->add_option("--backend", flags.backend_mode, "live|replay|scripted override");
    cmd->parse_complete_callback([par, seq, &flags] {
        if (par->count()) flags.parallel = true;
        if (seq->count()) flags.parallel = false;
    });
}

config::RunConfig load_with_overrides(const CommonFlags& flags) {
    config::RunConfig cfg = config::load_run_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.no_cache) cfg.cache_enabled = false;
    if (flags.parallel) cfg.parallel = *flags.parallel;
    if (!flags.backend_mode.empty())
        cfg.backend_mode = config::backend_mode_from_string(flags.backend_mode);
    return cfg;
}

std::size_t word_count(const std::string& text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

void print_stat(const std::string& label, double value) {
    std::cout << label;
    for (std::size_t i = label.size(); i < 42; ++i) std::cout << ' ';
    char buf[32];
    if (value == static_cast<double>(static_cast<long long>(value)))
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
    else
        std::snprintf(buf, sizeof(buf), "%.1f", value);
    std::cout << buf << "\n";
}

int cmd_index(const CommonFlags& flags) {
    config::RunConfig cfg = load_with_overrides(flags);
    if (cfg.index_dir.empty()) throw ConfigError("index_dir is required for indexing");
    fs::create_directories(cfg.index_dir);

    model::FaqCorpus corpus = model::load_corpus(cfg.corpus_path);
    auto gw = std::make_shared<gateway::Gateway>(config::make_backend(cfg), cfg.backend);

    auto index_q = retrieval::EmbeddingIndex::build(corpus, false, *gw);
    index_q.save(config::index_path_questions(cfg));
    auto index_qa = retrieval::EmbeddingIndex::build(corpus, true, *gw);
    index_qa.save(config::index_path_with_answers(cfg));
    std::cout << "Wrote " << config::index_path_questions(cfg) << " and "
              << config::index_path_with_answers(cfg) << " (dimension "
              << index_q.dimension() << ")\n\n";

    double q_words = 0.0, a_words = 0.0;
    for (const model::FaqEntry& e : corpus.entries()) {
        q_words += static_cast<double>(word_count(e.question));
        a_words += static_cast<double>(word_count(e.answer));
    }
    const double n = static_cast<double>(corpus.size());
    std::cout << "Corpus statistics\n";
    print_stat("Number of FAQs", n);
    print_stat("Average FAQ Question Length (words)", q_words / n);
    print_stat("Average FAQ Answer Length (words)", a_words / n);

    if (cfg.dataset && cfg.dataset->format == "bank" && !cfg.dataset->labels.empty()) {
        auto [_, labeled] =
            evalkit::load_bank_format(cfg.corpus_path, cfg.dataset->labels);
        if (!labeled.empty()) {
            double u_words = 0.0;
            for (const evalkit::LabeledUtterance& item : labeled)
                u_words += static_cast<double>(word_count(item.utterance));
            print_stat("Number of Utterances", static_cast<double>(labeled.size()));
            print_stat("Average User Utterance Length (words)",
                       u_words / static_cast<double>(labeled.size()));
        }
    }
    return kExitOk;
}

int cmd_annotate(const CommonFlags& flags, const std::string& utterance,
                 const std::string& audit_path) {
    config::RunConfig cfg = load_with_overrides(flags);
    config::Runtime rt = config::build_runtime(cfg);
    pipeline::Pipeline pipe(rt.corpus, rt.pipeline_cfg, rt.gw, rt.index_q.get(),
                            rt.index_qa.get(), rt.cache);

    pipeline::AnnotationResult result = pipe.annotate(utterance);
    json out = pipeline::verdict_to_json(result.verdict, rt.corpus);
    std::cout << out.dump(2) << "\n";

    if (!audit_path.empty()) {
        json audit{{"utterance", utterance},
                   {"cache_hit", result.cache_hit},
                   {"result", pipeline::result_to_json(result)},
                   {"verdict", out}};
        std::ofstream file(audit_path);
        if (!file) throw ConfigError("cannot write audit log: " + audit_path);
        file << audit.dump(2) << "\n";
    }
    return kExitOk;
}

void apply_ablation(config::RunConfig& cfg, const std::string& name) {
    auto drop = [&](std::initializer_list<std::string> names) {
        std::erase_if(cfg.agent_names, [&](const std::string& agent) {
            for (const std::string& n : names)
                if (n == agent) return true;
            return false;
        });
    };
    if (name == "no-judge") {
        cfg.use_judge = false;
    } else if (name == "shared-fewshots") {
        cfg.few_shot_policy = "shared";
    } else if (name == "without-answer-agents") {
        drop({"direct_ans", "embed_ans"});
    } else if (name == "without-plain-agents") {
        drop({"direct", "embed"});
    } else {
        throw ConfigError("unknown ablation: " + name);
    }
    if (cfg.agent_names.empty())
        throw ConfigError("ablation removed every agent from the roster");
}

int cmd_evaluate(const CommonFlags& flags, const std::vector<std::string>& ablations) {
    config::RunConfig cfg = load_with_overrides(flags);
    for (const std::string& name : ablations) apply_ablation(cfg, name);
    if (!cfg.dataset) throw ConfigError("evaluate requires a dataset block");

    model::FaqCorpus corpus;
    std::vector<evalkit::LabeledUtterance> labeled;
    const std::string& format = cfg.dataset->format;
    if (format == "bank") {
        const std::string corpus_path =
            cfg.dataset->corpus.empty() ? cfg.corpus_path : cfg.dataset->corpus;
        std::tie(corpus, labeled) =
            evalkit::load_bank_format(corpus_path, cfg.dataset->labels);
        cfg.corpus_path = corpus_path;
    } else if (format == "lcqmc") {
        std::tie(corpus, labeled) =
            evalkit::adapt_lcqmc(evalkit::load_pairs_tsv(cfg.dataset->pairs));
    } else if (format == "fiqa") {
        auto files = evalkit::load_fiqa_jsonl(
            cfg.dataset->questions, cfg.dataset->answers, cfg.dataset->links,
            cfg.dataset->variations.empty()
                ? std::nullopt
                : std::make_optional(cfg.dataset->variations));
        std::tie(corpus, labeled) =
            evalkit::adapt_fiqa(files.questions, files.answers, files.links,
                                files.variations, {});
    } else {
        throw ConfigError("unknown dataset format: " + format);
    }

    // Utterances beyond the evaluation slice double as the few-shot pool for
    // adapted datasets; bank datasets use the configured training file.
    std::vector<evalkit::LabeledUtterance> eval_set = labeled;
    std::vector<prompting::FewShot> training;
    if (format == "bank") {
        training = config::load_training_pairs(cfg, corpus);
    } else if (cfg.dataset_limit > 0 && labeled.size() > cfg.dataset_limit) {
        for (std::size_t i = cfg.dataset_limit; i < labeled.size(); ++i) {
            const model::FaqEntry* entry = corpus.by_id(labeled[i].gold_ids.front());
            if (entry)
                training.push_back(
                    prompting::FewShot{labeled[i].utterance, entry->question});
        }
    }
    if (cfg.dataset_limit > 0 && eval_set.size() > cfg.dataset_limit)
        eval_set.resize(cfg.dataset_limit);

    auto backend = config::make_backend(cfg);
    auto gw = std::make_shared<gateway::Gateway>(backend, cfg.backend);
    pipeline::PipelineConfig pcfg;
    try {
        pcfg = config::make_pipeline_config(cfg, training);
    } catch (const InsufficientTrainingError& e) {
        if (format == "bank") throw;  // explicit training files stay strict
        std::cerr << "note: few-shot pool too small, running without examples ("
                  << e.what() << ")\n";
        pcfg = config::make_pipeline_config(cfg, {});
    }

    std::shared_ptr<retrieval::EmbeddingIndex> index_q, index_qa;
    bool needs_q = true, needs_qa = false;  // the Q index also serves the baseline
    for (const agents::AgentSpec& spec : pcfg.agents)
        if (spec.use_embeddings && spec.use_answers) needs_qa = true;
    if (needs_q)
        index_q = std::make_shared<retrieval::EmbeddingIndex>(
            retrieval::EmbeddingIndex::build(corpus, false, *gw));
    if (needs_qa)
        index_qa = std::make_shared<retrieval::EmbeddingIndex>(
            retrieval::EmbeddingIndex::build(corpus, true, *gw));

    std::shared_ptr<pipeline::ResultCache> cache;
    if (!cfg.cache_path.empty())
        cache = std::make_shared<pipeline::ResultCache>(cfg.cache_path);
    pipeline::Pipeline pipe(corpus, pcfg, gw, index_q.get(), index_qa.get(), cache);

    evalkit::EvalRunOptions opts;
    opts.workers = cfg.eval_workers;
    opts.graded = cfg.graded_gains;
    evalkit::EvalRunOutput output = evalkit::evaluate_run(pipe, eval_set, opts);

    const std::string table = evalkit::render_report_table(output);
    std::cout << table;
    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        std::ofstream txt(fs::path(cfg.output_dir) / "report.txt");
        txt << table;
        std::ofstream js(fs::path(cfg.output_dir) / "report.json");
        js << evalkit::report_to_json(output).dump(2) << "\n";
        std::cout << "Reports written to " << cfg.output_dir << "\n";
    }
    return kExitOk;
}

int cmd_serve(const CommonFlags& flags, int port, int max_concurrency) {
    config::RunConfig cfg = load_with_overrides(flags);
    config::Runtime rt = config::build_runtime(cfg);
    pipeline::Pipeline pipe(rt.corpus, rt.pipeline_cfg, rt.gw, rt.index_q.get(),
                            rt.index_qa.get(), rt.cache);
    auto server = service::make_server(pipe, max_concurrency);
    std::cout << "Serving on port " << port << " (corpus size " << rt.corpus.size()
              << ")\n";
    if (!server->listen("0.0.0.0", port))
        throw ConfigError("cannot bind port " + std::to_string(port));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent FAQ annotation pipeline"};
    app.require_subcommand(1);

    CommonFlags index_flags, annotate_flags, evaluate_flags, serve_flags;

    auto* index = app.add_subcommand("index", "Build and persist embedding indexes");
    add_common(index, index_flags);

    auto* annotate = app.add_subcommand("annotate", "Annotate one utterance");
    add_common(annotate, annotate_flags);
    std::string utterance, audit_path;
    annotate->add_option("utterance", utterance, "User utterance")->required();
    annotate->add_option("--audit", audit_path, "Write an audit JSON file");

    auto* evaluate = app.add_subcommand("evaluate", "Run the benchmark harness");
    add_common(evaluate, evaluate_flags);
    std::vector<std::string> ablations;
    evaluate->add_option("--ablation", ablations,
                         "no-judge|shared-fewshots|without-answer-agents|"
                         "without-plain-agents");

    auto* serve = app.add_subcommand("serve", "Start the annotation service");
    add_common(serve, serve_flags);
    int port = 8080, max_concurrency = 8;
    serve->add_option("--port", port, "Listen port");
    serve->add_option("--max-concurrency", max_concurrency, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (index->parsed()) return cmd_index(index_flags);
        if (annotate->parsed()) return cmd_annotate(annotate_flags, utterance, audit_path);
        if (evaluate->parsed()) return cmd_evaluate(evaluate_flags, ablations);
        if (serve->parsed()) return cmd_serve(serve_flags, port, max_concurrency);
        return kExitUsage;
    } catch (const NoCandidatesError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEmpty;
    } catch (const BackendUnavailableError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const MissingReplayEntryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const TransientError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
