#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "faqmap/config.hpp"
#include "faqmap/evalkit.hpp"
#include "support.hpp"

using namespace faqmap;
using evalkit::LabeledUtterance;
using evalkit::Run;

namespace {

Run run_of(std::vector<std::string> ranked, std::vector<std::string> gold) {
    return Run{std::move(ranked), std::move(gold)};
}

}  // namespace

TEST_CASE("top_k_accuracy matches its definition") {
    std::vector<Run> runs{run_of({"g", "b", "c"}, {"g"})};
    CHECK(evalkit::top_k_accuracy(runs, 1) == doctest::Approx(1.0));

    std::vector<Run> deep{run_of({"a", "b", "c", "g", "e"}, {"g"})};
    CHECK(evalkit::top_k_accuracy(deep, 3) == doctest::Approx(0.0));
    CHECK(evalkit::top_k_accuracy(deep, 5) == doctest::Approx(1.0));

    CHECK_THROWS_AS(evalkit::top_k_accuracy({}, 3), EmptyRunsError);
    CHECK_THROWS_AS(evalkit::top_k_accuracy(runs, 0), std::invalid_argument);
}

TEST_CASE("mrr counts the first gold hit only") {
    CHECK(evalkit::mrr({run_of({"g", "x"}, {"g"})}) == doctest::Approx(1.0));
    CHECK(evalkit::mrr({run_of({"a", "b", "g"}, {"g"})}) == doctest::Approx(1.0 / 3));
    std::vector<Run> batch{run_of({"g", "x"}, {"g"}),
                           run_of({"a", "g"}, {"g"}),
                           run_of({"a", "b"}, {"g"})};
    CHECK(evalkit::mrr(batch) == doctest::Approx(0.5));
    CHECK_THROWS_AS(evalkit::mrr({}), EmptyRunsError);
}

TEST_CASE("ndcg reproduces the worked values") {
    // frozen from direct evaluation of the DCG formula
    CHECK(evalkit::ndcg_at_k({run_of({"g", "b", "c"}, {"g"})}, 3) ==
          doctest::Approx(1.0));
    CHECK(evalkit::ndcg_at_k({run_of({"a", "g", "c"}, {"g"})}, 3) ==
          doctest::Approx(0.6309297535714575).epsilon(1e-9));
    CHECK(evalkit::ndcg_at_k({run_of({"g1", "b", "g2"}, {"g1", "g2"})}, 3) ==
          doctest::Approx(0.9197207891481876).epsilon(1e-9));
    CHECK_THROWS_AS(evalkit::ndcg_at_k({}, 3), EmptyRunsError);
}

TEST_CASE("graded gains reward the listed gold order") {
    // gold [g1, g2]: gains 2 and 1. Ranking [g2, g1]:
    // DCG = 1 + 2/log2(3); IDCG = 2 + 1/log2(3).
    const double expected =
        (1.0 + 2.0 / std::log2(3.0)) / (2.0 + 1.0 / std::log2(3.0));
    CHECK(evalkit::ndcg_at_k({run_of({"g2", "g1"}, {"g1", "g2"})}, 3, true) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(evalkit::ndcg_at_k({run_of({"g1", "g2"}, {"g1", "g2"})}, 3, true) ==
          doctest::Approx(1.0));
}

TEST_CASE("ndcg is 1 whenever the ranking starts with the ideal gold ordering") {
    std::mt19937_64 rng{29};
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n_gold = 1 + testsupport::draw(rng, 4);
        std::vector<std::string> gold;
        for (std::size_t g = 0; g < n_gold; ++g)
            gold.push_back("g" + std::to_string(trial) + "-" + std::to_string(g));
        std::vector<std::string> ranked = gold;  // ideal ordering as a prefix
        for (std::size_t r = 0; r < testsupport::draw(rng, 4); ++r)
            ranked.push_back("filler" + std::to_string(r));
        for (bool graded : {false, true}) {
            CHECK(evalkit::ndcg_at_k({run_of(ranked, gold)}, 3, graded) ==
                  doctest::Approx(1.0).epsilon(1e-12));
            CHECK(evalkit::ndcg_at_k({run_of(ranked, gold)}, 5, graded) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("runs with empty gold contribute zero") {
    std::vector<Run> runs{run_of({"a"}, {}), run_of({"g"}, {"g"})};
    CHECK(evalkit::ndcg_at_k(runs, 3) == doctest::Approx(0.5));
}

TEST_CASE("metric monotonicity and range over random instances") {
    std::mt19937_64 rng{17};
    std::vector<Run> runs;
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> ranked;
        for (std::size_t r = 0; r < 1 + testsupport::draw(rng, 10); ++r)
            ranked.push_back("c" + std::to_string(testsupport::draw(rng, 12)));
        std::vector<std::string> gold;
        for (std::size_t g = 0; g < 1 + testsupport::draw(rng, 3); ++g)
            gold.push_back("c" + std::to_string(testsupport::draw(rng, 12)));
        runs.push_back(run_of(ranked, gold));
    }
    const double t1 = evalkit::top_k_accuracy(runs, 1);
    const double t3 = evalkit::top_k_accuracy(runs, 3);
    const double t5 = evalkit::top_k_accuracy(runs, 5);
    CHECK(t1 <= t3);
    CHECK(t3 <= t5);
    for (double v : {t1, t3, t5, evalkit::mrr(runs), evalkit::ndcg_at_k(runs, 3),
                     evalkit::ndcg_at_k(runs, 5)}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("metrics are invariant under bijective id relabeling") {
    std::mt19937_64 rng{19};
    std::vector<Run> runs, relabeled;
    auto rename = [](const std::string& id) { return "zz-" + id + "-renamed"; };
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> ranked, gold;
        for (std::size_t r = 0; r < 1 + testsupport::draw(rng, 8); ++r)
            ranked.push_back("c" + std::to_string(testsupport::draw(rng, 10)));
        for (std::size_t g = 0; g < 1 + testsupport::draw(rng, 3); ++g)
            gold.push_back("c" + std::to_string(testsupport::draw(rng, 10)));
        runs.push_back(run_of(ranked, gold));
        std::vector<std::string> ranked2, gold2;
        for (const auto& id : ranked) ranked2.push_back(rename(id));
        for (const auto& id : gold) gold2.push_back(rename(id));
        relabeled.push_back(run_of(ranked2, gold2));
    }
    for (std::size_t k : {1, 3, 5}) {
        CHECK(evalkit::top_k_accuracy(runs, k) ==
              doctest::Approx(evalkit::top_k_accuracy(relabeled, k)));
        CHECK(evalkit::ndcg_at_k(runs, k) ==
              doctest::Approx(evalkit::ndcg_at_k(relabeled, k)));
    }
    CHECK(evalkit::mrr(runs) == doctest::Approx(evalkit::mrr(relabeled)));
}

TEST_CASE("adapt_lcqmc: minimal rows") {
    auto [corpus1, labeled1] = evalkit::adapt_lcqmc(
        {{"how to cook rice", "best way to cook rice", 1}});
    CHECK(corpus1.size() == 1);
    REQUIRE(labeled1.size() == 1);
    CHECK(labeled1[0].utterance == "how to cook rice");
    CHECK(corpus1.by_id(labeled1[0].gold_ids[0]) != nullptr);

    auto [corpus2, labeled2] =
        evalkit::adapt_lcqmc({{"q1 text", "distractor only", 0}});
    CHECK(corpus2.size() == 1);
    CHECK(labeled2.empty());

    auto [corpus3, labeled3] = evalkit::adapt_lcqmc(
        {{"first", "shared faq text", 1}, {"second", "shared faq text", 1}});
    CHECK(corpus3.size() == 1);
    CHECK(labeled3.size() == 2);
    CHECK(labeled3[0].gold_ids == labeled3[1].gold_ids);

    CHECK_THROWS_AS(evalkit::adapt_lcqmc({}), EmptyInputError);
    CHECK_THROWS_AS(evalkit::adapt_lcqmc({{"a", "b", 2}}), ParseError);
}

TEST_CASE("adapt_lcqmc on the 20-pair fixture yields the predicted counts") {
    auto rows = evalkit::load_pairs_tsv(testsupport::fixture_path("lcqmc_20.tsv"));
    REQUIRE(rows.size() == 20);
    auto [corpus, labeled] = evalkit::adapt_lcqmc(rows);
    CHECK(corpus.size() == 15);
    CHECK(labeled.size() == 11);
}

TEST_CASE("adapt_fiqa builds FAQs from first linked answers") {
    auto files = evalkit::load_fiqa_jsonl(
        testsupport::fixture_path("fiqa_questions.jsonl"),
        testsupport::fixture_path("fiqa_answers.jsonl"),
        testsupport::fixture_path("fiqa_links.jsonl"),
        testsupport::fixture_path("fiqa_variations.jsonl"));
    auto [corpus, labeled] =
        evalkit::adapt_fiqa(files.questions, files.answers, files.links,
                            files.variations, {});
    CHECK(corpus.size() == 3);
    REQUIRE(labeled.size() == 2);
    CHECK(labeled[0].gold_ids == std::vector<std::string>{"q1"});
    const auto* q2 = corpus.by_id("q2");
    REQUIRE(q2 != nullptr);
    CHECK(q2->answer.find("Interest is added to the principal") == 0);
}

TEST_CASE("adapt_fiqa raises DanglingLink on corrupted fixtures") {
    auto files = evalkit::load_fiqa_jsonl(
        testsupport::fixture_path("fiqa_questions.jsonl"),
        testsupport::fixture_path("fiqa_answers.jsonl"),
        testsupport::fixture_path("fiqa_links_corrupt.jsonl"), std::nullopt);
    CHECK_THROWS_AS(evalkit::adapt_fiqa(files.questions, files.answers, files.links,
                                        std::nullopt, {}),
                    DanglingLinkError);
    try {
        evalkit::adapt_fiqa(files.questions, files.answers, files.links, std::nullopt,
                            {});
    } catch (const DanglingLinkError& e) {
        CHECK(e.id == "a-missing");
    }
}

TEST_CASE("adapt_fiqa without variations or gateway yields no utterances") {
    auto files = evalkit::load_fiqa_jsonl(
        testsupport::fixture_path("fiqa_questions.jsonl"),
        testsupport::fixture_path("fiqa_answers.jsonl"),
        testsupport::fixture_path("fiqa_links.jsonl"), std::nullopt);
    auto [corpus, labeled] =
        evalkit::adapt_fiqa(files.questions, files.answers, files.links, std::nullopt,
                            {});
    CHECK(corpus.size() == 3);
    CHECK(labeled.empty());
}

TEST_CASE("adapt_fiqa can generate paraphrases through a scripted gateway") {
    auto files = evalkit::load_fiqa_jsonl(
        testsupport::fixture_path("fiqa_questions.jsonl"),
        testsupport::fixture_path("fiqa_answers.jsonl"),
        testsupport::fixture_path("fiqa_links.jsonl"), std::nullopt);
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    backend->add_chat_rule(
        {"Rewrite the question", {R"__({"utterance": "scripted paraphrase"})__"}});
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    gateway::Gateway gw(backend, gateway::BackendConfig{}, policy);
    evalkit::FiqaParaphraseOptions opts;
    opts.gw = &gw;
    opts.sample = 2;
    auto [corpus, labeled] = evalkit::adapt_fiqa(files.questions, files.answers,
                                                 files.links, std::nullopt, opts);
    CHECK(labeled.size() == 2);
    CHECK(labeled[0].utterance == "scripted paraphrase");
}

TEST_CASE("load_bank_format validates gold ids") {
    auto [corpus, labeled] =
        evalkit::load_bank_format(testsupport::fixture_path("corpus_bank.jsonl"),
                                  testsupport::fixture_path("labels_bank.jsonl"));
    CHECK(corpus.size() == 8);
    REQUIRE(labeled.size() == 3);
    CHECK(labeled[0].utterance == "lost deb");
    CHECK(labeled[0].gold_ids ==
          std::vector<std::string>{"faq-lock-card", "faq-replace-card"});

    const std::string bad =
        (std::filesystem::temp_directory_path() / "faqmap_bad_labels.jsonl").string();
    {
        std::ofstream out(bad);
        out << R"({"utterance": "x", "gold_ids": ["no-such-id"]})" << "\n";
    }
    CHECK_THROWS_AS(evalkit::load_bank_format(
                        testsupport::fixture_path("corpus_bank.jsonl"), bad),
                    ParseError);
    try {
        evalkit::load_bank_format(testsupport::fixture_path("corpus_bank.jsonl"), bad);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("no-such-id") != std::string::npos);
    }
    std::filesystem::remove(bad);

    const std::string empty =
        (std::filesystem::temp_directory_path() / "faqmap_empty_labels.jsonl").string();
    {
        std::ofstream out(empty);
    }
    auto [c2, l2] = evalkit::load_bank_format(
        testsupport::fixture_path("corpus_bank.jsonl"), empty);
    CHECK(c2.size() == 8);
    CHECK(l2.empty());
    std::filesystem::remove(empty);
}

TEST_CASE("evaluate_run reproduces hand-computed metrics on scripted fixtures") {
    // Every utterance gets the same scripted verdict:
    // [lock 98, replace 92, preview 80, fees 45, password 30].
    // Golds: {lock, replace} -> rank 1; {business} -> absent; {preview} -> rank 3.
    auto backend = config::load_script_file(testsupport::fixture_path("script_bank.json"));
    gateway::BackendConfig bcfg;
    bcfg.max_retries = 0;
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    auto gw = std::make_shared<gateway::Gateway>(backend, bcfg, policy);

    auto [corpus, labeled] =
        evalkit::load_bank_format(testsupport::fixture_path("corpus_bank.jsonl"),
                                  testsupport::fixture_path("labels_bank.jsonl"));
    auto index_q = retrieval::EmbeddingIndex::build(corpus, false, *gw);
    auto index_qa = retrieval::EmbeddingIndex::build(corpus, true, *gw);

    pipeline::PipelineConfig pcfg;
    pcfg.agents = agents::standard_agents(5);
    pcfg.plan_queries = true;  // the script provides a planner rule
    pcfg.cache_enabled = false;
    pipeline::Pipeline pipe(corpus, pcfg, gw, &index_q, &index_qa);

    evalkit::EvalRunOptions opts;
    auto output = evalkit::evaluate_run(pipe, labeled, opts);

    const auto& report = output.pipeline.report;
    CHECK(output.errors == 0);
    CHECK(report.n == 3);
    CHECK(report.top1 == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(report.top3 == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(report.top5 == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(report.mrr == doctest::Approx(4.0 / 9).epsilon(1e-12));
    CHECK(report.ndcg3 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.ndcg5 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report.top1 <= report.top5);
    CHECK(report.latency_mean_ms >= 0.0);

    REQUIRE(output.baselines.size() == 3);  // BM25 + two embedding configurations
    CHECK(output.baselines[0].method == "BM25");

    const std::string table = evalkit::render_report_table(output);
    CHECK(table.find("Top-1") != std::string::npos);
    CHECK(table.find("NDCG@5") != std::string::npos);
    CHECK(table.find("BM25") != std::string::npos);

    auto j = evalkit::report_to_json(output);
    REQUIRE(j.contains("rows"));
    for (const char* key : {"top1", "top3", "top5", "mrr", "ndcg3", "ndcg5"})
        CHECK(j.at("rows").at(0).contains(key));

    CHECK_THROWS_AS(evalkit::evaluate_run(pipe, {}, opts), EmptyRunsError);
}

TEST_CASE("evaluate_run counts per-utterance failures, fails only when all do") {
    auto corpus = testsupport::bank_corpus();
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    // rules keyed on one specific utterance; every other utterance fails
    backend->add_chat_rule(
        {"User Utterance: \"lost deb\"",
         {testsupport::ranker_json({{"Lock and unlock your credit and debit cards", 95}})}});
    backend->add_chat_rule(
        {"reranking candidate FAQs",
         {testsupport::judge_json({{"Lock and unlock your credit and debit cards", 98}})}});
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    auto gw = std::make_shared<gateway::Gateway>(backend, gateway::BackendConfig{},
                                                 policy);
    pipeline::PipelineConfig pcfg;
    pcfg.agents = {agents::standard_agents()[0]};
    pcfg.plan_queries = false;
    pcfg.cache_enabled = false;
    pipeline::Pipeline pipe(corpus, pcfg, gw);

    std::vector<LabeledUtterance> labeled{
        {"lost deb", {"faq-lock-card"}},
        {"sba", {"faq-business-accounts"}},
        {"how much money do i have", {"faq-account-preview"}}};
    evalkit::EvalRunOptions opts;
    opts.run_baselines = false;
    auto output = evalkit::evaluate_run(pipe, labeled, opts);
    CHECK(output.errors == 2);
    CHECK(output.pipeline.report.n == 1);
    CHECK(output.pipeline.report.top1 == doctest::Approx(1.0));

    std::vector<LabeledUtterance> all_fail{
        {"sba", {"faq-business-accounts"}},
        {"how much money do i have", {"faq-account-preview"}}};
    CHECK_THROWS_AS(evalkit::evaluate_run(pipe, all_fail, opts), Error);
}

TEST_CASE("evaluate_run with workers matches the sequential result") {
    auto backend = config::load_script_file(testsupport::fixture_path("script_bank.json"));
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    auto gw = std::make_shared<gateway::Gateway>(backend, gateway::BackendConfig{},
                                                 policy);
    auto [corpus, labeled] =
        evalkit::load_bank_format(testsupport::fixture_path("corpus_bank.jsonl"),
                                  testsupport::fixture_path("labels_bank.jsonl"));
    pipeline::PipelineConfig pcfg;
    pcfg.agents = {agents::standard_agents()[0], agents::standard_agents()[2]};
    pcfg.cache_enabled = false;
    pipeline::Pipeline pipe(corpus, pcfg, gw);

    evalkit::EvalRunOptions sequential;
    sequential.run_baselines = false;
    auto a = evalkit::evaluate_run(pipe, labeled, sequential);
    evalkit::EvalRunOptions threaded = sequential;
    threaded.workers = 3;
    auto b = evalkit::evaluate_run(pipe, labeled, threaded);
    CHECK(a.pipeline.report.top1 == doctest::Approx(b.pipeline.report.top1));
    CHECK(a.pipeline.report.mrr == doctest::Approx(b.pipeline.report.mrr));
}
