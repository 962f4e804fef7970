#include "faqmap/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <unordered_map>

#include "faqmap/log.hpp"

namespace faqmap::pipeline {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

json candidate_to_json(const model::Candidate& c) {
    return json{{"faq_id", c.faq_id},
                {"score", c.score},
                {"reasoning", c.reasoning},
                {"source_agent", c.source_agent}};
}

model::Candidate candidate_from_json(const json& j) {
    return model::Candidate{j.at("faq_id").get<std::string>(),
                            j.at("score").get<double>(),
                            j.value("reasoning", std::string{}),
                            j.value("source_agent", std::string{})};
}

}  // namespace

std::vector<model::Candidate> dedup_max_score(
    const std::vector<model::Candidate>& all_candidates) {
    std::unordered_map<std::string, const model::Candidate*> best;
    for (const model::Candidate& c : all_candidates) {
        auto [it, inserted] = best.emplace(c.faq_id, &c);
        if (!inserted && c.score > it->second->score) it->second = &c;
    }
    std::vector<model::Candidate> out;
    out.reserve(best.size());
    for (const auto& [_, c] : best) out.push_back(*c);
    std::sort(out.begin(), out.end(), model::ranks_before);
    return out;
}

json result_to_json(const AnnotationResult& result) {
    json items = json::array();
    for (const model::Candidate& c : result.verdict.ranked.items())
        items.push_back(candidate_to_json(c));
    json preds = json::array();
    for (const auto& [agent, candidates] : result.agent_preds) {
        json list = json::array();
        for (const model::Candidate& c : candidates) list.push_back(candidate_to_json(c));
        preds.push_back(json{{"agent", agent}, {"candidates", list}});
    }
    return json{{"verdict",
                 json{{"mode", judge::to_string(result.verdict.mode)},
                      {"k", result.verdict.ranked.k()},
                      {"items", items}}},
                {"stage_latency_ms", result.stage_latency_ms},
                {"total_latency_ms", result.total_latency_ms},
                {"agent_preds", preds}};
}

AnnotationResult result_from_json(const json& j) {
    AnnotationResult result;
    const json& verdict = j.at("verdict");
    std::vector<model::Candidate> items;
    for (const json& item : verdict.at("items")) items.push_back(candidate_from_json(item));
    result.verdict.ranked =
        model::RankedList::of(std::move(items), verdict.at("k").get<std::size_t>());
    result.verdict.mode =
        judge::verdict_mode_from_string(verdict.at("mode").get<std::string>());
    result.stage_latency_ms =
        j.value("stage_latency_ms", std::map<std::string, double>{});
    result.total_latency_ms = j.value("total_latency_ms", 0.0);
    for (const json& entry : j.value("agent_preds", json::array())) {
        std::vector<model::Candidate> candidates;
        for (const json& c : entry.at("candidates"))
            candidates.push_back(candidate_from_json(c));
        result.agent_preds.emplace_back(entry.at("agent").get<std::string>(),
                                        std::move(candidates));
    }
    return result;
}

json verdict_to_json(const judge::JudgeVerdict& verdict,
                     const model::FaqCorpus& corpus) {
    json items = json::array();
    for (const model::Candidate& c : verdict.ranked.items()) {
        const model::FaqEntry* entry = corpus.by_id(c.faq_id);
        items.push_back(json{{"faq", entry ? entry->question : c.faq_id},
                             {"relevance_score", c.score},
                             {"reasoning", c.reasoning},
                             {"faq_id", c.faq_id},
                             {"mode", judge::to_string(verdict.mode)}});
    }
    return json{{"reranked_faqs", items}};
}

// ---- ResultCache --------------------------------------------------------------

ResultCache::ResultCache(std::string path, bool load_existing) : path_(std::move(path)) {
    if (!load_existing || path_.empty()) return;
    std::ifstream in(path_);
    if (!in) return;  // nothing cached yet
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("normalized_utterance") ||
            !j.contains("result")) {
            log::warn("skipping bad cache line " + std::to_string(lineno));
            continue;
        }
        entries_[j.at("normalized_utterance").get<std::string>()] =
            j.at("result").dump();
    }
}

std::optional<AnnotationResult> ResultCache::lookup(const std::string& normalized) {
    std::lock_guard<std::mutex> lock(mu_);
    if (degraded_) return std::nullopt;
    auto it = entries_.find(normalized);
    if (it == entries_.end()) return std::nullopt;
    try {
        AnnotationResult result = result_from_json(json::parse(it->second));
        result.cache_hit = true;
        return result;
    } catch (const std::exception& e) {
        log::warn(std::string("dropping unreadable cache entry: ") + e.what());
        entries_.erase(it);
        return std::nullopt;
    }
}

void ResultCache::store(const std::string& normalized, const AnnotationResult& result) {
    std::lock_guard<std::mutex> lock(mu_);
    if (degraded_) return;
    const std::string serialized = result_to_json(result).dump();
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app);
        if (!out ||
            !(out << json{{"normalized_utterance", normalized},
                          {"result", json::parse(serialized)}}
                         .dump()
                  << "\n")) {
            log::warn("cache persistence failed, disabling cache: " + path_);
            degraded_ = true;
            entries_.clear();
            return;
        }
    }
    entries_[normalized] = serialized;
}

bool ResultCache::degraded() const {
    std::lock_guard<std::mutex> lock(mu_);
    return degraded_;
}

std::size_t ResultCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

// ---- Pipeline -------------------------------------------------------------------

Pipeline::Pipeline(const model::FaqCorpus& corpus, PipelineConfig cfg,
                   std::shared_ptr<gateway::Gateway> gw,
                   const retrieval::EmbeddingIndex* index_questions,
                   const retrieval::EmbeddingIndex* index_with_answers,
                   std::shared_ptr<ResultCache> cache)
    : corpus_(corpus),
      cfg_(std::move(cfg)),
      gw_(std::move(gw)),
      index_q_(index_questions),
      index_qa_(index_with_answers),
      cache_(std::move(cache)) {
    for (const agents::AgentSpec& spec : cfg_.agents) {
        if (!spec.use_embeddings) continue;
        const retrieval::EmbeddingIndex* index =
            spec.use_answers ? index_qa_ : index_q_;
        if (!index)
            throw ConfigError("agent " + spec.name +
                              " needs an embedding index that was not provided");
    }
    if (cfg_.cache_enabled && !cache_) cache_ = std::make_shared<ResultCache>();
}

AnnotationResult Pipeline::map_utterance(const model::UserQuery& query) {
    const auto start = Clock::now();
    AnnotationResult result;

    model::UserQuery effective = query;
    if (cfg_.plan_queries) {
        const auto t = Clock::now();
        effective = agents::plan_query(query, *gw_, cfg_.prompts);
        result.stage_latency_ms["planner"] = ms_since(t);
    }

    // Agent fan-out. A failed agent contributes an empty list; transport
    // failures are remembered so a fully dead backend is reported as such.
    struct AgentOutput {
        std::vector<model::Candidate> candidates;
        double latency_ms = 0.0;
        bool transport_failure = false;
        bool succeeded = false;
    };
    auto run_agent = [&](const agents::AgentSpec& spec) -> AgentOutput {
        const auto t = Clock::now();
        agents::RankerContext ctx;
        ctx.corpus = &corpus_;
        ctx.emb_index =
            spec.use_embeddings ? (spec.use_answers ? index_qa_ : index_q_) : nullptr;
        ctx.prompts = cfg_.prompts;
        ctx.expand_query_for_embedding = cfg_.expand_query_for_embedding;
        AgentOutput out;
        try {
            out.candidates = agents::ranker_predict(spec, effective, ctx, *gw_);
            out.succeeded = true;
        } catch (const AgentFailedError& e) {
            log::warn(e.what());
            out.transport_failure = e.transport;
        }
        out.latency_ms = ms_since(t);
        return out;
    };

    std::vector<AgentOutput> outputs(cfg_.agents.size());
    if (cfg_.parallel) {
        std::vector<std::future<AgentOutput>> futs;
        futs.reserve(cfg_.agents.size());
        for (const agents::AgentSpec& spec : cfg_.agents)
            futs.push_back(std::async(std::launch::async, run_agent, std::cref(spec)));
        for (std::size_t i = 0; i < futs.size(); ++i) outputs[i] = futs[i].get();
    } else {
        for (std::size_t i = 0; i < cfg_.agents.size(); ++i)
            outputs[i] = run_agent(cfg_.agents[i]);
    }

    std::vector<model::Candidate> all_candidates;
    bool any_success = false, any_transport_failure = false;
    for (std::size_t i = 0; i < cfg_.agents.size(); ++i) {
        result.agent_preds.emplace_back(cfg_.agents[i].name, outputs[i].candidates);
        result.stage_latency_ms[cfg_.agents[i].name] = outputs[i].latency_ms;
        all_candidates.insert(all_candidates.end(), outputs[i].candidates.begin(),
                              outputs[i].candidates.end());
        any_success = any_success || outputs[i].succeeded;
        any_transport_failure = any_transport_failure || outputs[i].transport_failure;
    }
    if (all_candidates.empty()) {
        if (!any_success && any_transport_failure)
            throw BackendUnavailableError("every agent failed to reach the backend");
        throw NoCandidatesError();
    }

    const std::vector<model::Candidate> unique = dedup_max_score(all_candidates);

    const auto judge_start = Clock::now();
    if (cfg_.use_judge) {
        try {
            result.verdict =
                judge::meta_judge(effective, unique, result.agent_preds,
                                  cfg_.judge_few_shots, corpus_, *gw_,
                                  cfg_.judge_samples, cfg_.prompts);
        } catch (const JudgeFailedError& e) {
            log::warn(std::string("falling back to average-score ranking: ") + e.what());
            result.verdict = judge::fallback_average(result.agent_preds, cfg_.fallback_mean);
        }
    } else {
        result.verdict = judge::fallback_average(result.agent_preds, cfg_.fallback_mean);
    }
    result.stage_latency_ms["judge"] = ms_since(judge_start);

    if (result.verdict.ranked.size() > cfg_.top_k_out ||
        result.verdict.ranked.k() != cfg_.top_k_out) {
        std::vector<model::Candidate> items = result.verdict.ranked.items();
        if (items.size() > cfg_.top_k_out) items.resize(cfg_.top_k_out);
        result.verdict.ranked = model::RankedList::of(std::move(items), cfg_.top_k_out);
    }

    result.total_latency_ms = ms_since(start);
    return result;
}

AnnotationResult Pipeline::annotate(const std::string& raw_utterance) {
    const model::UserQuery query = model::normalize_utterance(raw_utterance);
    if (cfg_.cache_enabled && cache_) {
        if (auto hit = cache_->lookup(query.normalized)) return *hit;
    }
    AnnotationResult result = map_utterance(query);
    if (cfg_.cache_enabled && cache_) cache_->store(query.normalized, result);
    result.cache_hit = false;
    return result;
}

}  // namespace faqmap::pipeline
