#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "faqmap/gateway.hpp"
#include "faqmap/orchestrator.hpp"

namespace faqmap::config {

enum class BackendMode { live, replay, scripted };

BackendMode backend_mode_from_string(const std::string& s);

struct DatasetSpec {
    std::string format;  // bank | lcqmc | fiqa
    std::string corpus;
    std::string labels;
    std::string pairs;
    std::string questions;
    std::string answers;
    std::string links;
    std::string variations;
};

/// Single JSON config document. Environment variables override secrets only
/// (the API key is always read from the env var named in the backend block).
struct RunConfig {
    std::string corpus_path;
    std::optional<DatasetSpec> dataset;
    std::size_t dataset_limit = 0;  // evaluate at most this many utterances (0: all)

    gateway::BackendConfig backend;
    BackendMode backend_mode = BackendMode::scripted;
    std::string replay_path;
    bool record = false;
    std::string script_path;

    std::vector<std::string> agent_names = {"direct", "embed", "direct_ans",
                                            "embed_ans"};
    std::size_t candidate_pool_size = 20;
    std::size_t judge_samples = 1;
    bool use_judge = true;
    bool parallel = true;
    bool cache_enabled = true;
    std::size_t top_k_out = 5;
    bool plan_queries = true;
    bool expand_query_for_embedding = true;
    bool fallback_all_agents_mean = false;
    std::size_t prompt_budget_chars = 100000;

    std::string few_shot_policy = "disjoint";
    std::string training_path;
    std::size_t few_shots_per_agent = 5;

    std::string cache_path;
    std::string index_dir;
    std::string output_dir;
    std::uint64_t seed = 42;
    std::size_t eval_workers = 1;
    bool graded_gains = false;
};

/// Parses and validates; every referenced input path must exist.
RunConfig load_run_config(const std::string& path);

/// Scripted-backend script file: {"embed_dimension", "chat_rules":
/// [{"needle", "responses"|"response", "fail_first", "permanent_fail",
/// "delay_ms"}], "embed_vectors": {text: [floats]}}.
std::shared_ptr<gateway::ScriptedBackend> load_script_file(const std::string& path);

std::shared_ptr<gateway::ChatBackend> make_backend(const RunConfig& cfg);

/// Everything a command needs to run the pipeline.
struct Runtime {
    model::FaqCorpus corpus;
    std::shared_ptr<gateway::Gateway> gw;
    std::shared_ptr<gateway::ScriptedBackend> scripted;  // set in scripted mode
    std::shared_ptr<retrieval::EmbeddingIndex> index_q;
    std::shared_ptr<retrieval::EmbeddingIndex> index_qa;
    pipeline::PipelineConfig pipeline_cfg;
    std::shared_ptr<pipeline::ResultCache> cache;
};

/// Loads corpus, backend, few-shot plan, and pipeline config. Embedding
/// indexes are loaded from index_dir when present, otherwise built through
/// the gateway (only when an embedding agent is on the roster).
Runtime build_runtime(const RunConfig& cfg, bool need_indexes = true);

/// Pipeline config from the run config plus an explicit few-shot pool
/// (empty pool: agents run without examples).
pipeline::PipelineConfig make_pipeline_config(
    const RunConfig& cfg, const std::vector<prompting::FewShot>& training);

/// (utterance, gold title) pairs from training_path resolved against the
/// corpus; empty when no training file is configured.
std::vector<prompting::FewShot> load_training_pairs(const RunConfig& cfg,
                                                    const model::FaqCorpus& corpus);

/// Index file names inside index_dir.
std::string index_path_questions(const RunConfig& cfg);
std::string index_path_with_answers(const RunConfig& cfg);

}  // namespace faqmap::config
