#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "faqmap/model.hpp"
#include "faqmap/orchestrator.hpp"

namespace faqmap::evalkit {

/// One evaluation item: utterance plus its gold FAQ ids. The gold list is
/// rank-ordered; graded-gain NDCG uses that order, everything else treats
/// it as a set.
struct LabeledUtterance {
    std::string utterance;
    std::vector<std::string> gold_ids;
};

/// A finished ranking paired with its gold ids.
struct Run {
    std::vector<std::string> ranked_ids;
    std::vector<std::string> gold_ids;
};

Run make_run(const model::RankedList& ranking, std::vector<std::string> gold_ids);

// ---- metrics ------------------------------------------------------------------

/// Fraction of runs with any gold id in the first k positions.
double top_k_accuracy(const std::vector<Run>& runs, std::size_t k);

/// Mean over runs of 1/rank of the first gold id (0 when absent).
double mrr(const std::vector<Run>& runs);

/// DCG@k / IDCG@k with gain_i / log2(i+1) discounts. Binary gains by
/// default; graded gains assign |gold| - position to each gold id in its
/// listed order. Runs with empty gold contribute 0.
double ndcg_at_k(const std::vector<Run>& runs, std::size_t k, bool graded = false);

struct EvalReport {
    double top1 = 0.0, top3 = 0.0, top5 = 0.0;
    double mrr = 0.0;
    double ndcg3 = 0.0, ndcg5 = 0.0;
    std::size_t n = 0;
    double latency_mean_ms = 0.0;
    double latency_p95_ms = 0.0;
};

EvalReport report_from_runs(const std::vector<Run>& runs,
                            const std::vector<double>& latencies_ms,
                            bool graded = false);

// ---- dataset adapters -----------------------------------------------------------

struct QuestionPairRow {
    std::string q1;
    std::string q2;
    int label = 0;  // 1: same intent, 0: different
};

/// Question-pair corpus (tab-separated q1, q2, label) recast as FAQ
/// annotation: distinct q2 texts become the FAQ pool, label-1 q1 texts
/// become labeled utterances, label-0 pairs contribute distractors only.
std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> adapt_lcqmc(
    const std::vector<QuestionPairRow>& rows);

std::vector<QuestionPairRow> load_pairs_tsv(const std::string& path);

struct FiqaQuestion {
    std::string id;
    std::string text;
};
struct FiqaAnswer {
    std::string id;
    std::string text;
};
struct FiqaLink {
    std::string question_id;
    std::string answer_id;
};
struct FiqaVariation {
    std::string utterance;
    std::string question_id;
};

struct FiqaParaphraseOptions {
    gateway::Gateway* gw = nullptr;  // enables paraphrase generation
    std::size_t sample = 0;          // 0: all questions
    std::uint64_t seed = 42;
};

/// QA corpus recast as FAQ annotation: each question becomes an FAQ whose
/// answer is its first linked answer; utterances come from the provided
/// variations, or from one generated paraphrase per sampled question when a
/// gateway is supplied. Throws DanglingLinkError on broken references.
std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> adapt_fiqa(
    const std::vector<FiqaQuestion>& questions, const std::vector<FiqaAnswer>& answers,
    const std::vector<FiqaLink>& links,
    const std::optional<std::vector<FiqaVariation>>& variations,
    const FiqaParaphraseOptions& paraphrase = {});

struct FiqaFiles {
    std::vector<FiqaQuestion> questions;
    std::vector<FiqaAnswer> answers;
    std::vector<FiqaLink> links;
    std::optional<std::vector<FiqaVariation>> variations;
};

FiqaFiles load_fiqa_jsonl(const std::string& questions_path,
                          const std::string& answers_path,
                          const std::string& links_path,
                          const std::optional<std::string>& variations_path);

/// Native format: corpus JSON-lines plus a labels file of
/// {"utterance", "gold_ids"} JSON-lines.
std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> load_bank_format(
    const std::string& corpus_path, const std::string& labels_path);

// ---- benchmark runner -------------------------------------------------------------

struct MethodReport {
    std::string method;
    EvalReport report;
};

struct EvalRunOutput {
    MethodReport pipeline;
    std::vector<MethodReport> baselines;
    std::size_t errors = 0;  // utterances the pipeline failed on
};

struct EvalRunOptions {
    std::size_t workers = 1;
    bool graded = false;
    bool run_baselines = true;
    std::size_t baseline_k = 5;
};

/// Runs the pipeline over every labeled utterance and computes all metrics,
/// alongside BM25 and embedding-only baseline rows. Per-utterance pipeline
/// failures count as errors; throws only when every utterance fails.
EvalRunOutput evaluate_run(pipeline::Pipeline& pipe,
                           const std::vector<LabeledUtterance>& labeled,
                           const EvalRunOptions& opts = {});

std::string render_report_table(const EvalRunOutput& output);
nlohmann::json report_to_json(const EvalRunOutput& output);

}  // namespace faqmap::evalkit
