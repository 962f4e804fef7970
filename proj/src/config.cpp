#include "faqmap/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "faqmap/evalkit.hpp"
#include "faqmap/log.hpp"

namespace faqmap::config {

using nlohmann::json;
namespace fs = std::filesystem;

BackendMode backend_mode_from_string(const std::string& s) {
    if (s == "live") return BackendMode::live;
    if (s == "replay") return BackendMode::replay;
    if (s == "scripted") return BackendMode::scripted;
    throw ConfigError("unknown backend mode: " + s);
}

namespace {

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

std::string str_or(const json& j, const char* key, const std::string& fallback) {
    return j.contains(key) ? j.at(key).get<std::string>() : fallback;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("config is not a JSON object: " + path);

    RunConfig cfg;
    cfg.corpus_path = str_or(j, "corpus_path", "");

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        DatasetSpec spec;
        spec.format = str_or(d, "format", "bank");
        spec.corpus = str_or(d, "corpus", "");
        spec.labels = str_or(d, "labels", "");
        spec.pairs = str_or(d, "pairs", "");
        spec.questions = str_or(d, "questions", "");
        spec.answers = str_or(d, "answers", "");
        spec.links = str_or(d, "links", "");
        spec.variations = str_or(d, "variations", "");
        cfg.dataset = std::move(spec);
    }

    if (j.contains("backend")) {
        const json& b = j.at("backend");
        cfg.backend.endpoint_url = str_or(b, "endpoint_url", cfg.backend.endpoint_url);
        cfg.backend.api_key_env_name =
            str_or(b, "api_key_env", cfg.backend.api_key_env_name);
        cfg.backend.chat_model_name =
            str_or(b, "chat_model", cfg.backend.chat_model_name);
        cfg.backend.embed_model_name =
            str_or(b, "embed_model", cfg.backend.embed_model_name);
        cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
        cfg.backend.timeout =
            gateway::Millis{b.value("timeout_ms", cfg.backend.timeout.count())};
        cfg.backend_mode = backend_mode_from_string(str_or(b, "mode", "scripted"));
        cfg.replay_path = str_or(b, "replay_path", "");
        cfg.record = b.value("record", false);
        cfg.script_path = str_or(b, "script_path", "");
    }

    if (j.contains("pipeline")) {
        const json& p = j.at("pipeline");
        if (p.contains("agents"))
            cfg.agent_names = p.at("agents").get<std::vector<std::string>>();
        cfg.candidate_pool_size = p.value("candidate_pool_size", cfg.candidate_pool_size);
        cfg.judge_samples = p.value("judge_samples", cfg.judge_samples);
        cfg.use_judge = p.value("use_judge", cfg.use_judge);
        cfg.parallel = p.value("parallel", cfg.parallel);
        cfg.cache_enabled = p.value("cache_enabled", cfg.cache_enabled);
        cfg.top_k_out = p.value("top_k_out", cfg.top_k_out);
        cfg.plan_queries = p.value("plan_queries", cfg.plan_queries);
        cfg.expand_query_for_embedding =
            p.value("expand_query_for_embedding", cfg.expand_query_for_embedding);
        cfg.fallback_all_agents_mean =
            p.value("fallback_all_agents_mean", cfg.fallback_all_agents_mean);
        cfg.prompt_budget_chars = p.value("prompt_budget_chars", cfg.prompt_budget_chars);
    }

    if (j.contains("few_shots")) {
        const json& f = j.at("few_shots");
        cfg.few_shot_policy = str_or(f, "policy", cfg.few_shot_policy);
        cfg.training_path = str_or(f, "training_path", "");
        cfg.few_shots_per_agent = f.value("per_agent", cfg.few_shots_per_agent);
    }

    if (cfg.dataset) cfg.dataset_limit = j.at("dataset").value("limit", std::size_t{0});
    cfg.cache_path = str_or(j, "cache_path", "");
    cfg.index_dir = str_or(j, "index_dir", "");
    cfg.output_dir = str_or(j, "output_dir", "");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.eval_workers = j.value("eval_workers", cfg.eval_workers);
    cfg.graded_gains = j.value("graded_gains", cfg.graded_gains);

    if (cfg.judge_samples < 1) throw ConfigError("judge_samples must be >= 1");
    if (cfg.top_k_out < 1) throw ConfigError("top_k_out must be >= 1");
    if (cfg.backend.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (cfg.backend.timeout.count() <= 0) throw ConfigError("timeout_ms must be > 0");

    require_exists(cfg.corpus_path, "corpus_path");
    require_exists(cfg.script_path, "script_path");
    require_exists(cfg.training_path, "training_path");
    if (cfg.backend_mode == BackendMode::replay && !cfg.record)
        require_exists(cfg.replay_path, "replay_path");
    if (cfg.dataset) {
        for (const std::string* p :
             {&cfg.dataset->corpus, &cfg.dataset->labels, &cfg.dataset->pairs,
              &cfg.dataset->questions, &cfg.dataset->answers, &cfg.dataset->links,
              &cfg.dataset->variations})
            require_exists(*p, "dataset path");
    }
    return cfg;
}

std::shared_ptr<gateway::ScriptedBackend> load_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("script file is not a JSON object: " + path);

    auto backend = std::make_shared<gateway::ScriptedBackend>();
    backend->set_embed_dimension(j.value("embed_dimension", std::size_t{8}));
    for (const json& r : j.value("chat_rules", json::array())) {
        gateway::ScriptedBackend::ChatRule rule;
        rule.needle = r.at("needle").get<std::string>();
        if (r.contains("responses"))
            rule.responses = r.at("responses").get<std::vector<std::string>>();
        else if (r.contains("response"))
            rule.responses = {r.at("response").get<std::string>()};
        rule.fail_first = r.value("fail_first", std::size_t{0});
        rule.permanent_fail = r.value("permanent_fail", false);
        rule.delay = gateway::Millis{r.value("delay_ms", 0)};
        backend->add_chat_rule(std::move(rule));
    }
    if (j.contains("embed_vectors"))
        for (const auto& [text, vec] : j.at("embed_vectors").items())
            backend->set_embed_vector(text, vec.get<gateway::Embedding>());
    return backend;
}

std::shared_ptr<gateway::ChatBackend> make_backend(const RunConfig& cfg) {
    switch (cfg.backend_mode) {
        case BackendMode::scripted: {
            if (cfg.script_path.empty())
                throw ConfigError("scripted backend requires backend.script_path");
            return load_script_file(cfg.script_path);
        }
        case BackendMode::replay: {
            if (cfg.record) {
                auto store = std::make_shared<gateway::ReplayStore>();
                if (fs::exists(cfg.replay_path))
                    *store = gateway::ReplayStore::load(cfg.replay_path);
                return std::make_shared<gateway::RecordingBackend>(
                    std::make_shared<gateway::HttpBackend>(), store, cfg.replay_path);
            }
            auto store = std::make_shared<gateway::ReplayStore>(
                gateway::ReplayStore::load(cfg.replay_path));
            return std::make_shared<gateway::ReplayBackend>(store);
        }
        case BackendMode::live: return std::make_shared<gateway::HttpBackend>();
    }
    throw ConfigError("unreachable backend mode");
}

std::string index_path_questions(const RunConfig& cfg) {
    return (fs::path(cfg.index_dir) / "faq_embeddings_q.bin").string();
}

std::string index_path_with_answers(const RunConfig& cfg) {
    return (fs::path(cfg.index_dir) / "faq_embeddings_qa.bin").string();
}

namespace {

agents::FewShotPolicy policy_from_string(const std::string& s) {
    if (s == "disjoint") return agents::FewShotPolicy::disjoint;
    if (s == "independent") return agents::FewShotPolicy::independent;
    if (s == "shared") return agents::FewShotPolicy::shared;
    throw ConfigError("unknown few-shot policy: " + s);
}

}  // namespace

std::vector<prompting::FewShot> load_training_pairs(const RunConfig& cfg,
                                                    const model::FaqCorpus& corpus) {
    if (cfg.training_path.empty()) return {};
    auto [_, labeled] = evalkit::load_bank_format(cfg.corpus_path, cfg.training_path);
    std::vector<prompting::FewShot> pairs;
    pairs.reserve(labeled.size());
    for (const evalkit::LabeledUtterance& item : labeled) {
        const model::FaqEntry* entry = corpus.by_id(item.gold_ids.front());
        if (entry) pairs.push_back(prompting::FewShot{item.utterance, entry->question});
    }
    return pairs;
}

pipeline::PipelineConfig make_pipeline_config(
    const RunConfig& cfg, const std::vector<prompting::FewShot>& training) {
    pipeline::PipelineConfig pcfg;
    auto roster = agents::standard_agents(cfg.candidate_pool_size);
    for (const std::string& name : cfg.agent_names) {
        bool found = false;
        for (const agents::AgentSpec& spec : roster)
            if (spec.name == name) {
                pcfg.agents.push_back(spec);
                found = true;
            }
        if (!found) throw ConfigError("unknown agent name: " + name);
    }
    pcfg.judge_samples = cfg.judge_samples;
    pcfg.use_judge = cfg.use_judge;
    pcfg.parallel = cfg.parallel;
    pcfg.cache_enabled = cfg.cache_enabled;
    pcfg.top_k_out = cfg.top_k_out;
    pcfg.plan_queries = cfg.plan_queries;
    pcfg.expand_query_for_embedding = cfg.expand_query_for_embedding;
    pcfg.fallback_mean = cfg.fallback_all_agents_mean
                             ? judge::FallbackMean::over_all_agents
                             : judge::FallbackMean::over_proposing_agents;
    pcfg.prompts.budget_chars = cfg.prompt_budget_chars;

    if (!training.empty()) {
        const auto policy = policy_from_string(cfg.few_shot_policy);
        auto plan = agents::select_few_shots(training, pcfg.agents.size(),
                                             cfg.few_shots_per_agent, cfg.seed, policy);
        agents::assign_few_shots(pcfg.agents, plan);
        // The judge gets its own independently sampled examples.
        auto judge_plan =
            agents::select_few_shots(training, 1, cfg.few_shots_per_agent,
                                     cfg.seed + 1, agents::FewShotPolicy::independent);
        pcfg.judge_few_shots = judge_plan.sets.front();
    }
    return pcfg;
}

Runtime build_runtime(const RunConfig& cfg, bool need_indexes) {
    Runtime rt;
    if (cfg.corpus_path.empty()) throw ConfigError("corpus_path is required");
    rt.corpus = model::load_corpus(cfg.corpus_path);

    auto backend = make_backend(cfg);
    if (cfg.backend_mode == BackendMode::scripted)
        rt.scripted = std::dynamic_pointer_cast<gateway::ScriptedBackend>(backend);
    rt.gw = std::make_shared<gateway::Gateway>(backend, cfg.backend);

    pipeline::PipelineConfig pcfg =
        make_pipeline_config(cfg, load_training_pairs(cfg, rt.corpus));

    bool needs_q = false, needs_qa = false;
    for (const agents::AgentSpec& spec : pcfg.agents) {
        if (!spec.use_embeddings) continue;
        (spec.use_answers ? needs_qa : needs_q) = true;
    }
    if (need_indexes && (needs_q || needs_qa)) {
        auto load_or_build = [&](bool with_answers) {
            const std::string path = with_answers ? index_path_with_answers(cfg)
                                                  : index_path_questions(cfg);
            if (!cfg.index_dir.empty() && fs::exists(path))
                return std::make_shared<retrieval::EmbeddingIndex>(
                    retrieval::EmbeddingIndex::load(path));
            log::info(std::string("building embedding index in memory (") +
                      (with_answers ? "with" : "without") + " answers)");
            return std::make_shared<retrieval::EmbeddingIndex>(
                retrieval::EmbeddingIndex::build(rt.corpus, with_answers, *rt.gw));
        };
        if (needs_q) rt.index_q = load_or_build(false);
        if (needs_qa) rt.index_qa = load_or_build(true);
    }

    if (!cfg.cache_path.empty())
        rt.cache = std::make_shared<pipeline::ResultCache>(cfg.cache_path);

    rt.pipeline_cfg = std::move(pcfg);
    return rt;
}

}  // namespace faqmap::config
