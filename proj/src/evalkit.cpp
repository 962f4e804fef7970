#include "faqmap/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "faqmap/log.hpp"
#include "faqmap/prompting.hpp"
#include "faqmap/retrieval.hpp"

namespace faqmap::evalkit {

using nlohmann::json;

Run make_run(const model::RankedList& ranking, std::vector<std::string> gold_ids) {
    Run run;
    run.ranked_ids.reserve(ranking.size());
    for (const model::Candidate& c : ranking.items()) run.ranked_ids.push_back(c.faq_id);
    run.gold_ids = std::move(gold_ids);
    return run;
}

// ---- metrics ------------------------------------------------------------------

double top_k_accuracy(const std::vector<Run>& runs, std::size_t k) {
    if (runs.empty()) throw EmptyRunsError();
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    double hits = 0.0;
    for (const Run& run : runs) {
        const std::unordered_set<std::string> gold(run.gold_ids.begin(),
                                                   run.gold_ids.end());
        const std::size_t limit = std::min(k, run.ranked_ids.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (gold.count(run.ranked_ids[i])) {
                hits += 1.0;
                break;
            }
        }
    }
    return hits / static_cast<double>(runs.size());
}

double mrr(const std::vector<Run>& runs) {
    if (runs.empty()) throw EmptyRunsError();
    double sum = 0.0;
    for (const Run& run : runs) {
        const std::unordered_set<std::string> gold(run.gold_ids.begin(),
                                                   run.gold_ids.end());
        for (std::size_t i = 0; i < run.ranked_ids.size(); ++i) {
            if (gold.count(run.ranked_ids[i])) {
                sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return sum / static_cast<double>(runs.size());
}

double ndcg_at_k(const std::vector<Run>& runs, std::size_t k, bool graded) {
    if (runs.empty()) throw EmptyRunsError();
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    double sum = 0.0;
    for (const Run& run : runs) {
        if (run.gold_ids.empty()) continue;  // contributes 0
        std::unordered_map<std::string, double> gain;
        const double n_gold = static_cast<double>(run.gold_ids.size());
        for (std::size_t i = 0; i < run.gold_ids.size(); ++i)
            gain[run.gold_ids[i]] = graded ? n_gold - static_cast<double>(i) : 1.0;

        double dcg = 0.0;
        const std::size_t limit = std::min(k, run.ranked_ids.size());
        for (std::size_t i = 0; i < limit; ++i) {
            auto it = gain.find(run.ranked_ids[i]);
            if (it != gain.end())
                dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
        }

        std::vector<double> ideal;
        ideal.reserve(gain.size());
        for (const auto& [_, g] : gain) ideal.push_back(g);
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
            idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);

        if (idcg > 0.0) sum += dcg / idcg;
    }
    return sum / static_cast<double>(runs.size());
}

EvalReport report_from_runs(const std::vector<Run>& runs,
                            const std::vector<double>& latencies_ms, bool graded) {
    EvalReport report;
    report.n = runs.size();
    report.top1 = top_k_accuracy(runs, 1);
    report.top3 = top_k_accuracy(runs, 3);
    report.top5 = top_k_accuracy(runs, 5);
    report.mrr = mrr(runs);
    report.ndcg3 = ndcg_at_k(runs, 3, graded);
    report.ndcg5 = ndcg_at_k(runs, 5, graded);
    if (!latencies_ms.empty()) {
        double total = 0.0;
        for (double v : latencies_ms) total += v;
        report.latency_mean_ms = total / static_cast<double>(latencies_ms.size());
        std::vector<double> sorted = latencies_ms;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(sorted.size())));
        report.latency_p95_ms = sorted[rank == 0 ? 0 : rank - 1];
    }
    return report;
}

// ---- LCQMC adapter -----------------------------------------------------------------

std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> adapt_lcqmc(
    const std::vector<QuestionPairRow>& rows) {
    if (rows.empty()) throw EmptyInputError();
    std::vector<model::FaqEntry> entries;
    std::unordered_map<std::string, std::string> id_of_q2;
    std::vector<LabeledUtterance> labeled;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const QuestionPairRow& row = rows[i];
        if (row.label != 0 && row.label != 1)
            throw ParseError(i + 1, "label must be 0 or 1");
        auto it = id_of_q2.find(row.q2);
        if (it == id_of_q2.end()) {
            const std::string id = "faq-" + gateway::sha256_hex(row.q2).substr(0, 16);
            it = id_of_q2.emplace(row.q2, id).first;
            entries.push_back(model::FaqEntry{id, row.q2, "", std::nullopt});
        }
        if (row.label == 1) labeled.push_back(LabeledUtterance{row.q1, {it->second}});
    }
    return {model::validate_faq_set(std::move(entries)), std::move(labeled)};
}

std::vector<QuestionPairRow> load_pairs_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pair file: " + path);
    std::vector<QuestionPairRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos
                                                : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw ParseError(lineno, "expected q1<TAB>q2<TAB>label");
        QuestionPairRow row;
        row.q1 = line.substr(0, t1);
        row.q2 = line.substr(t1 + 1, t2 - t1 - 1);
        try {
            row.label = std::stoi(line.substr(t2 + 1));
        } catch (...) {
            throw ParseError(lineno, "label is not an integer");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- FiQA adapter ------------------------------------------------------------------

std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> adapt_fiqa(
    const std::vector<FiqaQuestion>& questions, const std::vector<FiqaAnswer>& answers,
    const std::vector<FiqaLink>& links,
    const std::optional<std::vector<FiqaVariation>>& variations,
    const FiqaParaphraseOptions& paraphrase) {
    if (questions.empty()) throw EmptyInputError();

    std::unordered_map<std::string, const FiqaAnswer*> answer_by_id;
    for (const FiqaAnswer& a : answers) answer_by_id.emplace(a.id, &a);
    std::unordered_map<std::string, const FiqaQuestion*> question_by_id;
    for (const FiqaQuestion& q : questions) question_by_id.emplace(q.id, &q);

    std::unordered_map<std::string, std::string> first_answer;  // question -> text
    for (const FiqaLink& link : links) {
        if (!question_by_id.count(link.question_id))
            throw DanglingLinkError(link.question_id);
        auto ans = answer_by_id.find(link.answer_id);
        if (ans == answer_by_id.end()) throw DanglingLinkError(link.answer_id);
        first_answer.emplace(link.question_id, ans->second->text);
    }

    std::vector<model::FaqEntry> entries;
    entries.reserve(questions.size());
    for (const FiqaQuestion& q : questions) {
        auto it = first_answer.find(q.id);
        entries.push_back(model::FaqEntry{
            q.id, q.text, it == first_answer.end() ? "" : it->second, std::nullopt});
    }
    model::FaqCorpus corpus = model::validate_faq_set(std::move(entries));

    std::vector<LabeledUtterance> labeled;
    if (variations) {
        for (const FiqaVariation& v : *variations) {
            if (!question_by_id.count(v.question_id))
                throw DanglingLinkError(v.question_id);
            labeled.push_back(LabeledUtterance{v.utterance, {v.question_id}});
        }
    } else if (paraphrase.gw) {
        // One generated paraphrase per sampled question, recorded through the
        // gateway's replay layer for reproducibility.
        std::vector<std::size_t> idx(questions.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 rng{paraphrase.seed};
        const std::size_t take = paraphrase.sample == 0
                                     ? questions.size()
                                     : std::min(paraphrase.sample, questions.size());
        for (std::size_t i = 0; i < take && i + 1 < idx.size(); ++i)
            std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
        for (std::size_t i = 0; i < take; ++i) {
            const FiqaQuestion& q = questions[idx[i]];
            gateway::ChatRequest req;
            req.system =
                "You rewrite questions as informal user utterances while keeping "
                "the same intent.";
            req.user = "Rewrite the question below as a short user utterance with the "
                       "same intent. Return a JSON object {\"utterance\": \"...\"}.\n"
                       "Question: \"" +
                       q.text + "\"";
            req.temperature = 0.7;
            try {
                json j = json::parse(prompting::extract_json(paraphrase.gw->chat_complete(req)));
                labeled.push_back(LabeledUtterance{
                    j.at("utterance").get<std::string>(), {q.id}});
            } catch (const std::exception& e) {
                log::warn("paraphrase generation failed for " + q.id + ": " + e.what());
            }
        }
    } else {
        log::warn("no variations and no gateway: FiQA adaptation yields 0 utterances");
    }
    return {std::move(corpus), std::move(labeled)};
}

namespace {

json parse_jsonl_line(const std::string& line, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(lineno, "expected a JSON object");
    return j;
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn fn) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        fn(parse_jsonl_line(line, lineno), lineno);
    }
}

}  // namespace

FiqaFiles load_fiqa_jsonl(const std::string& questions_path,
                          const std::string& answers_path,
                          const std::string& links_path,
                          const std::optional<std::string>& variations_path) {
    FiqaFiles files;
    for_each_jsonl(questions_path, [&](const json& j, std::size_t) {
        files.questions.push_back(FiqaQuestion{j.at("id").get<std::string>(),
                                               j.at("text").get<std::string>()});
    });
    for_each_jsonl(answers_path, [&](const json& j, std::size_t) {
        files.answers.push_back(
            FiqaAnswer{j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    });
    for_each_jsonl(links_path, [&](const json& j, std::size_t) {
        files.links.push_back(FiqaLink{j.at("question_id").get<std::string>(),
                                       j.at("answer_id").get<std::string>()});
    });
    if (variations_path) {
        files.variations.emplace();
        for_each_jsonl(*variations_path, [&](const json& j, std::size_t) {
            files.variations->push_back(
                FiqaVariation{j.at("utterance").get<std::string>(),
                              j.at("question_id").get<std::string>()});
        });
    }
    return files;
}

std::pair<model::FaqCorpus, std::vector<LabeledUtterance>> load_bank_format(
    const std::string& corpus_path, const std::string& labels_path) {
    model::FaqCorpus corpus = model::load_corpus(corpus_path);
    std::vector<LabeledUtterance> labeled;
    for_each_jsonl(labels_path, [&](const json& j, std::size_t lineno) {
        if (!j.contains("utterance") || !j.contains("gold_ids"))
            throw ParseError(lineno, "expected {\"utterance\",\"gold_ids\"}");
        LabeledUtterance item;
        item.utterance = j.at("utterance").get<std::string>();
        for (const json& id : j.at("gold_ids")) {
            const std::string gold = id.get<std::string>();
            if (!corpus.by_id(gold))
                throw ParseError(lineno, "gold id not in corpus: " + gold);
            item.gold_ids.push_back(gold);
        }
        if (item.gold_ids.empty())
            throw ParseError(lineno, "gold_ids must be nonempty");
        labeled.push_back(std::move(item));
    });
    return {std::move(corpus), std::move(labeled)};
}

// ---- benchmark runner ----------------------------------------------------------------

namespace {

std::vector<std::string> hits_to_ids(const std::vector<retrieval::Hit>& hits) {
    std::vector<std::string> ids;
    ids.reserve(hits.size());
    for (const retrieval::Hit& h : hits) ids.push_back(h.faq_id);
    return ids;
}

MethodReport baseline_bm25(pipeline::Pipeline& pipe,
                           const std::vector<LabeledUtterance>& labeled,
                           const EvalRunOptions& opts) {
    const auto index = retrieval::Bm25Index::build(pipe.corpus(), false);
    std::vector<Run> runs;
    std::vector<double> latencies;
    for (const LabeledUtterance& item : labeled) {
        const auto start = std::chrono::steady_clock::now();
        const auto query = model::normalize_utterance(item.utterance);
        Run run;
        run.ranked_ids = hits_to_ids(index.top_k(query, opts.baseline_k));
        run.gold_ids = item.gold_ids;
        runs.push_back(std::move(run));
        latencies.push_back(std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count());
    }
    return {"BM25", report_from_runs(runs, latencies, opts.graded)};
}

std::optional<MethodReport> baseline_embedding(
    pipeline::Pipeline& pipe, const std::vector<LabeledUtterance>& labeled,
    const EvalRunOptions& opts, bool with_answers) {
    const retrieval::EmbeddingIndex* index =
        with_answers ? pipe.index_with_answers() : pipe.index_questions();
    if (!index) return std::nullopt;
    std::vector<Run> runs;
    std::vector<double> latencies;
    for (const LabeledUtterance& item : labeled) {
        const auto start = std::chrono::steady_clock::now();
        const auto query = model::normalize_utterance(item.utterance);
        const auto vec = pipe.gateway().embed_batch({query.normalized}).front();
        Run run;
        run.ranked_ids = hits_to_ids(index->top_k(vec, opts.baseline_k));
        run.gold_ids = item.gold_ids;
        runs.push_back(std::move(run));
        latencies.push_back(std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count());
    }
    return MethodReport{with_answers ? "Embedding-Only (Q+A)" : "Embedding-Only (Q)",
                        report_from_runs(runs, latencies, opts.graded)};
}

}  // namespace

EvalRunOutput evaluate_run(pipeline::Pipeline& pipe,
                           const std::vector<LabeledUtterance>& labeled,
                           const EvalRunOptions& opts) {
    if (labeled.empty()) throw EmptyRunsError();

    struct Slot {
        std::optional<Run> run;
        double latency = 0.0;
    };
    std::vector<Slot> slots(labeled.size());

    auto process = [&](std::size_t i) {
        try {
            pipeline::AnnotationResult result = pipe.annotate(labeled[i].utterance);
            slots[i].run = make_run(result.verdict.ranked, labeled[i].gold_ids);
            slots[i].latency = result.total_latency_ms;
        } catch (const std::exception& e) {
            log::warn("utterance " + std::to_string(i) + " failed: " + e.what());
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, opts.workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < labeled.size(); ++i) process(i);
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t w = 0; w < workers; ++w)
            futures.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < labeled.size(); i += workers) process(i);
            }));
        for (auto& f : futures) f.get();
    }

    std::vector<Run> runs;
    std::vector<double> latencies;
    std::size_t errors = 0;
    for (Slot& slot : slots) {
        if (slot.run) {
            runs.push_back(std::move(*slot.run));
            latencies.push_back(slot.latency);
        } else {
            ++errors;
        }
    }
    if (runs.empty()) throw Error("every utterance failed during evaluation");

    EvalRunOutput output;
    output.pipeline = {"Multi-Agent Pipeline", report_from_runs(runs, latencies, opts.graded)};
    output.errors = errors;
    if (opts.run_baselines) {
        output.baselines.push_back(baseline_bm25(pipe, labeled, opts));
        if (auto row = baseline_embedding(pipe, labeled, opts, false))
            output.baselines.push_back(std::move(*row));
        if (auto row = baseline_embedding(pipe, labeled, opts, true))
            output.baselines.push_back(std::move(*row));
    }
    return output;
}

namespace {

std::string fmt_metric(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

void append_row(std::ostringstream& out, const MethodReport& row) {
    out << row.method;
    for (std::size_t i = row.method.size(); i < 28; ++i) out << ' ';
    const EvalReport& r = row.report;
    out << fmt_metric(r.top1) << "     " << fmt_metric(r.top3) << "     "
        << fmt_metric(r.top5) << "     " << fmt_metric(r.mrr) << "    "
        << fmt_metric(r.ndcg3) << "    " << fmt_metric(r.ndcg5) << "\n";
}

json report_json(const MethodReport& row) {
    const EvalReport& r = row.report;
    return json{{"method", row.method}, {"top1", r.top1}, {"top3", r.top3},
                {"top5", r.top5},       {"mrr", r.mrr},   {"ndcg3", r.ndcg3},
                {"ndcg5", r.ndcg5},     {"n", r.n}};
}

json timing_json(const MethodReport& row) {
    return json{{"latency_mean_ms", row.report.latency_mean_ms},
                {"latency_p95_ms", row.report.latency_p95_ms}};
}

}  // namespace

std::string render_report_table(const EvalRunOutput& output) {
    std::ostringstream out;
    out << "Method                      Top-1     Top-3     Top-5     MRR      "
           "NDCG@3   NDCG@5\n";
    out << "-------------------------------------------------------------------"
           "-------------\n";
    for (const MethodReport& row : output.baselines) append_row(out, row);
    append_row(out, output.pipeline);
    out << "\nn=" << output.pipeline.report.n << "  errors=" << output.errors
        << "  latency mean=" << fmt_metric(output.pipeline.report.latency_mean_ms)
        << "ms  p95=" << fmt_metric(output.pipeline.report.latency_p95_ms) << "ms\n";
    return out.str();
}

json report_to_json(const EvalRunOutput& output) {
    // "timing" is the only wall-clock (non-deterministic) part of the report;
    // everything else is reproducible given the same seed and replay store.
    json rows = json::array();
    json timing = json::object();
    for (const MethodReport& row : output.baselines) {
        rows.push_back(report_json(row));
        timing[row.method] = timing_json(row);
    }
    rows.push_back(report_json(output.pipeline));
    timing[output.pipeline.method] = timing_json(output.pipeline);
    return json{{"rows", rows}, {"errors", output.errors}, {"timing", timing}};
}

}  // namespace faqmap::evalkit
