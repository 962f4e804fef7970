#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faqmap/agents.hpp"
#include "faqmap/gateway.hpp"
#include "faqmap/judge.hpp"
#include "faqmap/model.hpp"
#include "faqmap/retrieval.hpp"

namespace faqmap::pipeline {

struct PipelineConfig {
    std::vector<agents::AgentSpec> agents;
    std::size_t judge_samples = 1;
    bool use_judge = true;
    bool parallel = true;
    bool cache_enabled = true;
    std::size_t top_k_out = 5;
    bool plan_queries = true;
    bool expand_query_for_embedding = true;
    judge::FallbackMean fallback_mean = judge::FallbackMean::over_proposing_agents;
    std::vector<prompting::FewShot> judge_few_shots;
    prompting::PromptOptions prompts;
};

struct AnnotationResult {
    judge::JudgeVerdict verdict;
    std::map<std::string, double> stage_latency_ms;  // per agent + "planner"/"judge"
    double total_latency_ms = 0.0;
    bool cache_hit = false;
    judge::AgentPredictions agent_preds;  // retained for audit

    friend bool operator==(const AnnotationResult&, const AnnotationResult&) = default;
};

/// One candidate per faq_id keeping the maximum score; reasoning and agent
/// tag come from that maximal instance (ties keep the first-listed one).
/// Output sorted by the model tie rule.
std::vector<model::Candidate> dedup_max_score(
    const std::vector<model::Candidate>& all_candidates);

nlohmann::json result_to_json(const AnnotationResult& result);
AnnotationResult result_from_json(const nlohmann::json& j);

/// Verdict in the agents' output JSON shape, each item extended with
/// {"faq_id", "mode"}.
nlohmann::json verdict_to_json(const judge::JudgeVerdict& verdict,
                               const model::FaqCorpus& corpus);

/// Normalized-utterance -> serialized result map, optionally persisted as
/// JSON-lines {normalized_utterance, result}. Any persistence failure
/// degrades the cache to a no-op for the rest of the run.
class ResultCache {
  public:
    ResultCache() = default;
    explicit ResultCache(std::string path, bool load_existing = true);

    std::optional<AnnotationResult> lookup(const std::string& normalized);
    void store(const std::string& normalized, const AnnotationResult& result);
    bool degraded() const;
    std::size_t size() const;

  private:
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
    std::string path_;
    bool degraded_ = false;
};

/// End-to-end annotation: optional query planning, concurrent agent fan-out,
/// max-score dedup, judge (or fallback) reranking, top-k truncation, caching.
class Pipeline {
  public:
    Pipeline(const model::FaqCorpus& corpus, PipelineConfig cfg,
             std::shared_ptr<gateway::Gateway> gw,
             const retrieval::EmbeddingIndex* index_questions = nullptr,
             const retrieval::EmbeddingIndex* index_with_answers = nullptr,
             std::shared_ptr<ResultCache> cache = nullptr);

    /// Algorithm core; no caching. Throws NoCandidatesError when every agent
    /// fails or returns nothing.
    AnnotationResult map_utterance(const model::UserQuery& query);

    /// normalize -> cache lookup -> map_utterance -> store.
    AnnotationResult annotate(const std::string& raw_utterance);

    const model::FaqCorpus& corpus() const { return corpus_; }
    const PipelineConfig& config() const { return cfg_; }
    gateway::Gateway& gateway() { return *gw_; }
    const retrieval::EmbeddingIndex* index_questions() const { return index_q_; }
    const retrieval::EmbeddingIndex* index_with_answers() const { return index_qa_; }

  private:
    const model::FaqCorpus& corpus_;
    PipelineConfig cfg_;
    std::shared_ptr<gateway::Gateway> gw_;
    const retrieval::EmbeddingIndex* index_q_;
    const retrieval::EmbeddingIndex* index_qa_;
    std::shared_ptr<ResultCache> cache_;
};

}  // namespace faqmap::pipeline
