#include "faqmap/judge.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "faqmap/log.hpp"

namespace faqmap::judge {

std::string to_string(VerdictMode mode) {
    switch (mode) {
        case VerdictMode::judged: return "judged";
        case VerdictMode::meta_judged: return "meta_judged";
        case VerdictMode::fallback: return "fallback";
    }
    return "judged";
}

VerdictMode verdict_mode_from_string(const std::string& s) {
    if (s == "judged") return VerdictMode::judged;
    if (s == "meta_judged") return VerdictMode::meta_judged;
    if (s == "fallback") return VerdictMode::fallback;
    throw Error("unknown verdict mode: " + s);
}

JudgeVerdict judge_rerank(const model::UserQuery& query,
                          const std::vector<model::Candidate>& candidates,
                          const AgentPredictions& agent_preds,
                          const std::vector<prompting::FewShot>& few_shots,
                          const model::FaqCorpus& corpus, gateway::Gateway& gw,
                          const prompting::PromptOptions& opts) {
    if (candidates.empty())
        throw std::invalid_argument("judge_rerank requires candidates");
    const std::size_t target = std::min<std::size_t>(5, candidates.size());

    try {
        auto bundle =
            prompting::build_judge_prompt(query, candidates, agent_preds, few_shots,
                                          corpus, opts);
        auto response = prompting::complete_and_parse(
            gw, bundle, [&](const std::string& raw) {
                return prompting::parse_judge_response(raw, corpus, candidates.size());
            });

        std::unordered_map<std::string, const model::Candidate*> by_id;
        for (const model::Candidate& c : candidates) by_id.emplace(c.faq_id, &c);

        std::vector<model::Candidate> items;
        std::unordered_set<std::string> present;
        for (const prompting::ScoredFaqRef& ref : response.reranked_faqs) {
            auto it = by_id.find(ref.faq_id);
            if (it == by_id.end()) {
                log::warn("judge named a non-candidate FAQ, dropping: \"" +
                          ref.faq_title + "\"");
                continue;
            }
            if (!present.insert(ref.faq_id).second) continue;
            items.push_back(model::Candidate{ref.faq_id, ref.relevance_score,
                                             ref.reasoning,
                                             it->second->source_agent});
        }

        // Backfill dropped slots from candidate input scores, best first.
        if (items.size() < target) {
            std::vector<model::Candidate> pool = candidates;
            std::sort(pool.begin(), pool.end(), model::ranks_before);
            for (const model::Candidate& c : pool) {
                if (items.size() >= target) break;
                if (present.insert(c.faq_id).second) items.push_back(c);
            }
        }

        return JudgeVerdict{model::RankedList::of(std::move(items), target),
                            VerdictMode::judged};
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw JudgeFailedError(e.what());
    }
}

double rank_agreement(const model::RankedList& a, const model::RankedList& b) {
    std::unordered_map<std::string, std::size_t> pos_a, pos_b;
    for (std::size_t i = 0; i < a.items().size(); ++i)
        pos_a.emplace(a.items()[i].faq_id, i);
    for (std::size_t i = 0; i < b.items().size(); ++i)
        pos_b.emplace(b.items()[i].faq_id, i);

    std::vector<std::pair<std::size_t, std::size_t>> shared;  // (rank in a, rank in b)
    for (const auto& [id, ra] : pos_a) {
        auto it = pos_b.find(id);
        if (it != pos_b.end()) shared.emplace_back(ra, it->second);
    }
    if (shared.size() < 2) return 0.0;

    std::size_t concordant = 0, total = 0;
    for (std::size_t i = 0; i < shared.size(); ++i) {
        for (std::size_t j = i + 1; j < shared.size(); ++j) {
            ++total;
            const bool da = shared[i].first < shared[j].first;
            const bool db = shared[i].second < shared[j].second;
            if (da == db) ++concordant;
        }
    }
    return static_cast<double>(concordant) / static_cast<double>(total);
}

JudgeVerdict meta_judge(const model::UserQuery& query,
                        const std::vector<model::Candidate>& candidates,
                        const AgentPredictions& agent_preds,
                        const std::vector<prompting::FewShot>& few_shots,
                        const model::FaqCorpus& corpus, gateway::Gateway& gw,
                        std::size_t n_samples, const prompting::PromptOptions& opts) {
    if (n_samples == 0) throw std::invalid_argument("meta_judge needs n_samples >= 1");
    if (n_samples == 1)
        return judge_rerank(query, candidates, agent_preds, few_shots, corpus, gw, opts);

    std::vector<std::future<JudgeVerdict>> futures;
    futures.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        futures.push_back(std::async(std::launch::async, [&] {
            return judge_rerank(query, candidates, agent_preds, few_shots, corpus, gw,
                                opts);
        }));

    std::vector<std::optional<JudgeVerdict>> verdicts(n_samples);
    std::string last_error = "no samples";
    for (std::size_t i = 0; i < n_samples; ++i) {
        try {
            verdicts[i] = futures[i].get();
        } catch (const std::exception& e) {
            last_error = e.what();
            log::warn("judge sample " + std::to_string(i) + " failed: " + last_error);
        }
    }

    // Aggregation depends only on sample indices, never completion order.
    std::size_t best = n_samples;
    double best_score = -1.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (!verdicts[i]) continue;
        double sum = 0.0;
        std::size_t others = 0;
        for (std::size_t j = 0; j < n_samples; ++j) {
            if (j == i || !verdicts[j]) continue;
            sum += rank_agreement(verdicts[i]->ranked, verdicts[j]->ranked);
            ++others;
        }
        const double mean = others ? sum / static_cast<double>(others) : 0.0;
        if (mean > best_score) {
            best_score = mean;
            best = i;
        }
    }
    if (best == n_samples) throw JudgeFailedError("all judge samples failed: " + last_error);

    JudgeVerdict chosen = *verdicts[best];
    chosen.mode = VerdictMode::meta_judged;
    return chosen;
}

JudgeVerdict fallback_average(const AgentPredictions& agent_preds, FallbackMean mean) {
    struct Acc {
        double sum = 0.0;
        std::size_t proposals = 0;
        const model::Candidate* best = nullptr;
    };
    std::map<std::string, Acc> by_id;
    std::size_t n_agents = agent_preds.size();

    for (const auto& [agent, preds] : agent_preds) {
        std::unordered_set<std::string> seen_in_agent;
        for (const model::Candidate& c : preds) {
            if (!seen_in_agent.insert(c.faq_id).second) continue;
            Acc& acc = by_id[c.faq_id];
            acc.sum += c.score;
            acc.proposals += 1;
            if (!acc.best || c.score > acc.best->score) acc.best = &c;
        }
    }
    if (by_id.empty()) throw NoCandidatesError();

    std::vector<model::Candidate> items;
    items.reserve(by_id.size());
    for (const auto& [id, acc] : by_id) {
        const double denom = mean == FallbackMean::over_proposing_agents
                                 ? static_cast<double>(acc.proposals)
                                 : static_cast<double>(n_agents);
        items.push_back(model::Candidate{id, acc.sum / denom, acc.best->reasoning,
                                         acc.best->source_agent});
    }
    std::sort(items.begin(), items.end(), model::ranks_before);
    const std::size_t k = std::min<std::size_t>(5, items.size());
    items.resize(k);
    return JudgeVerdict{model::RankedList::of(std::move(items), k),
                        VerdictMode::fallback};
}

}  // namespace faqmap::judge
