// Python bindings for the annotation pipeline: corpus validation, retrieval,
// metrics, few-shot planning, and a scripted/replay-driven Pipeline class.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "faqmap/config.hpp"
#include "faqmap/evalkit.hpp"
#include "faqmap/orchestrator.hpp"

namespace py = pybind11;
using namespace faqmap;

namespace {

model::FaqCorpus corpus_from_records(
    const std::vector<std::map<std::string, std::string>>& records) {
    std::vector<model::FaqEntry> entries;
    entries.reserve(records.size());
    for (const auto& record : records) {
        model::FaqEntry e;
        if (auto it = record.find("id"); it != record.end()) e.id = it->second;
        if (auto it = record.find("question"); it != record.end())
            e.question = it->second;
        if (auto it = record.find("answer"); it != record.end()) e.answer = it->second;
        if (auto it = record.find("category"); it != record.end())
            e.category = it->second;
        entries.push_back(std::move(e));
    }
    return model::validate_faq_set(std::move(entries));
}

evalkit::Run run_from_pair(const std::pair<std::vector<std::string>,
                                           std::vector<std::string>>& pair) {
    return evalkit::Run{pair.first, pair.second};
}

std::vector<evalkit::Run> runs_from_pairs(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>&
        pairs) {
    std::vector<evalkit::Run> runs;
    runs.reserve(pairs.size());
    for (const auto& pair : pairs) runs.push_back(run_from_pair(pair));
    return runs;
}

py::dict verdict_dict(const pipeline::AnnotationResult& result,
                      const model::FaqCorpus& corpus) {
    py::module json = py::module::import("json");
    py::dict out =
        json.attr("loads")(pipeline::verdict_to_json(result.verdict, corpus).dump());
    out["cache_hit"] = result.cache_hit;
    out["total_latency_ms"] = result.total_latency_ms;
    return out;
}

/// Owns every piece the C++ pipeline borrows.
class PyPipeline {
  public:
    PyPipeline(const std::string& corpus_path, const std::string& script_path,
               py::kwargs kwargs) {
        config::RunConfig cfg;
        cfg.corpus_path = corpus_path;
        cfg.script_path = script_path;
        cfg.backend_mode = config::BackendMode::scripted;
        if (kwargs.contains("agents"))
            cfg.agent_names = kwargs["agents"].cast<std::vector<std::string>>();
        if (kwargs.contains("candidate_pool_size"))
            cfg.candidate_pool_size = kwargs["candidate_pool_size"].cast<std::size_t>();
        if (kwargs.contains("judge_samples"))
            cfg.judge_samples = kwargs["judge_samples"].cast<std::size_t>();
        if (kwargs.contains("use_judge"))
            cfg.use_judge = kwargs["use_judge"].cast<bool>();
        if (kwargs.contains("parallel"))
            cfg.parallel = kwargs["parallel"].cast<bool>();
        if (kwargs.contains("plan_queries"))
            cfg.plan_queries = kwargs["plan_queries"].cast<bool>();
        if (kwargs.contains("cache_enabled"))
            cfg.cache_enabled = kwargs["cache_enabled"].cast<bool>();
        if (kwargs.contains("seed")) cfg.seed = kwargs["seed"].cast<std::uint64_t>();
        if (kwargs.contains("training_path"))
            cfg.training_path = kwargs["training_path"].cast<std::string>();
        runtime_ = config::build_runtime(cfg);
        pipe_ = std::make_unique<pipeline::Pipeline>(
            runtime_.corpus, runtime_.pipeline_cfg, runtime_.gw,
            runtime_.index_q.get(), runtime_.index_qa.get(), runtime_.cache);
    }

    py::dict annotate(const std::string& utterance) {
        pipeline::AnnotationResult result;
        {
            py::gil_scoped_release release;
            result = pipe_->annotate(utterance);
        }
        return verdict_dict(result, runtime_.corpus);
    }

    std::size_t corpus_size() const { return runtime_.corpus.size(); }
    std::size_t backend_calls() const {
        return runtime_.scripted ? runtime_.scripted->total_calls() : 0;
    }

  private:
    config::Runtime runtime_;
    std::unique_ptr<pipeline::Pipeline> pipe_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-agent FAQ annotation pipeline (C++ core)";

    py::register_exception<Error>(m, "FaqmapError");

    py::class_<model::FaqCorpus>(m, "FaqCorpus")
        .def(py::init(&corpus_from_records), py::arg("records"))
        .def_static("load", &model::load_corpus, py::arg("path"))
        .def("__len__", &model::FaqCorpus::size)
        .def("question_of",
             [](const model::FaqCorpus& corpus, const std::string& id) {
                 const model::FaqEntry* e = corpus.by_id(id);
                 if (!e) throw py::key_error(id);
                 return e->question;
             })
        .def("ids", [](const model::FaqCorpus& corpus) {
            std::vector<std::string> ids;
            for (const model::FaqEntry& e : corpus.entries()) ids.push_back(e.id);
            return ids;
        });

    m.def("normalize_utterance", [](const std::string& raw) {
        return model::normalize_utterance(raw).normalized;
    });

    m.def("tokenize", &retrieval::tokenize, py::arg("text"));
    m.def("faq_embedding_text",
          [](const std::string& question, const std::string& answer,
             bool with_answers) {
              return retrieval::faq_embedding_text(
                  model::FaqEntry{"", question, answer, std::nullopt}, with_answers);
          },
          py::arg("question"), py::arg("answer"), py::arg("with_answers"));

    py::class_<retrieval::Bm25Index>(m, "Bm25Index")
        .def_static(
            "build",
            [](const model::FaqCorpus& corpus, bool with_answers) {
                return retrieval::Bm25Index::build(corpus, with_answers);
            },
            py::arg("corpus"), py::arg("with_answers") = false)
        .def("top_k",
             [](const retrieval::Bm25Index& index, const std::string& utterance,
                std::size_t k) {
                 std::vector<std::pair<std::string, double>> out;
                 for (const retrieval::Hit& hit :
                      index.top_k(model::normalize_utterance(utterance), k))
                     out.emplace_back(hit.faq_id, hit.score);
                 return out;
             },
             py::arg("utterance"), py::arg("k"));

    m.def(
        "top_k_accuracy",
        [](const std::vector<std::pair<std::vector<std::string>,
                                       std::vector<std::string>>>& runs,
           std::size_t k) { return evalkit::top_k_accuracy(runs_from_pairs(runs), k); },
        py::arg("runs"), py::arg("k"));
    m.def("mrr",
          [](const std::vector<std::pair<std::vector<std::string>,
                                         std::vector<std::string>>>& runs) {
              return evalkit::mrr(runs_from_pairs(runs));
          },
          py::arg("runs"));
    m.def(
        "ndcg_at_k",
        [](const std::vector<std::pair<std::vector<std::string>,
                                       std::vector<std::string>>>& runs,
           std::size_t k,
           bool graded) { return evalkit::ndcg_at_k(runs_from_pairs(runs), k, graded); },
        py::arg("runs"), py::arg("k"), py::arg("graded") = false);

    m.def("dedup_max_score",
          [](const std::vector<std::tuple<std::string, double, std::string>>& raw) {
              std::vector<model::Candidate> input;
              for (const auto& [id, score, agent] : raw)
                  input.push_back(model::Candidate{id, score, "", agent});
              std::vector<std::tuple<std::string, double, std::string>> out;
              for (const model::Candidate& c : pipeline::dedup_max_score(input))
                  out.emplace_back(c.faq_id, c.score, c.source_agent);
              return out;
          },
          py::arg("candidates"));

    m.def(
        "select_few_shots",
        [](const std::vector<std::pair<std::string, std::string>>& training,
           std::size_t n_agents, std::size_t per_agent, std::uint64_t seed,
           const std::string& policy) {
            std::vector<prompting::FewShot> pool;
            for (const auto& [utterance, title] : training)
                pool.push_back(prompting::FewShot{utterance, title});
            agents::FewShotPolicy p = agents::FewShotPolicy::disjoint;
            if (policy == "independent") p = agents::FewShotPolicy::independent;
            else if (policy == "shared") p = agents::FewShotPolicy::shared;
            else if (policy != "disjoint") throw py::value_error(policy);
            auto plan = agents::select_few_shots(pool, n_agents, per_agent, seed, p);
            std::vector<std::vector<std::pair<std::string, std::string>>> sets;
            for (const auto& set : plan.sets) {
                std::vector<std::pair<std::string, std::string>> converted;
                for (const prompting::FewShot& f : set)
                    converted.emplace_back(f.utterance, f.gold_title);
                sets.push_back(std::move(converted));
            }
            return sets;
        },
        py::arg("training"), py::arg("n_agents"), py::arg("per_agent"),
        py::arg("seed"), py::arg("policy") = "disjoint");

    py::class_<PyPipeline>(m, "Pipeline")
        .def(py::init<const std::string&, const std::string&, py::kwargs>(),
             py::arg("corpus_path"), py::arg("script_path"))
        .def("annotate", &PyPipeline::annotate, py::arg("utterance"))
        .def_property_readonly("corpus_size", &PyPipeline::corpus_size)
        .def_property_readonly("backend_calls", &PyPipeline::backend_calls);
}
