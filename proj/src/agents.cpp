#include "faqmap/agents.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "faqmap/log.hpp"

namespace faqmap::agents {

namespace {

// Partial Fisher-Yates using raw engine outputs; std::shuffle is not
// bit-stable across standard libraries.
void shuffle_prefix(std::vector<std::size_t>& idx, std::size_t take,
                    std::mt19937_64& rng) {
    const std::size_t n = idx.size();
    for (std::size_t i = 0; i < take && i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
}

std::vector<prompting::FewShot> pick(const std::vector<prompting::FewShot>& training,
                                     const std::vector<std::size_t>& idx,
                                     std::size_t begin, std::size_t count) {
    std::vector<prompting::FewShot> out;
    out.reserve(count);
    for (std::size_t i = begin; i < begin + count; ++i)
        out.push_back(training[idx[i]]);
    return out;
}

}  // namespace

std::vector<AgentSpec> standard_agents(std::size_t pool_size) {
    return {
        AgentSpec{"direct", false, false, {}, pool_size},
        AgentSpec{"embed", true, false, {}, pool_size},
        AgentSpec{"direct_ans", false, true, {}, pool_size},
        AgentSpec{"embed_ans", true, true, {}, pool_size},
    };
}

FewShotPlan select_few_shots(const std::vector<prompting::FewShot>& training,
                             std::size_t n_agents, std::size_t per_agent,
                             std::uint64_t seed, FewShotPolicy policy) {
    const std::size_t need =
        policy == FewShotPolicy::disjoint ? n_agents * per_agent : per_agent;
    if (training.size() < need) throw InsufficientTrainingError(training.size(), need);

    std::mt19937_64 rng{seed};
    FewShotPlan plan;
    plan.seed = seed;

    std::vector<std::size_t> idx(training.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    switch (policy) {
        case FewShotPolicy::disjoint: {
            shuffle_prefix(idx, need, rng);
            for (std::size_t a = 0; a < n_agents; ++a)
                plan.sets.push_back(pick(training, idx, a * per_agent, per_agent));
            break;
        }
        case FewShotPolicy::independent: {
            for (std::size_t a = 0; a < n_agents; ++a) {
                std::vector<std::size_t> local = idx;
                shuffle_prefix(local, per_agent, rng);
                plan.sets.push_back(pick(training, local, 0, per_agent));
            }
            break;
        }
        case FewShotPolicy::shared: {
            shuffle_prefix(idx, per_agent, rng);
            auto set = pick(training, idx, 0, per_agent);
            plan.sets.assign(n_agents, set);
            break;
        }
    }
    return plan;
}

void assign_few_shots(std::vector<AgentSpec>& specs, const FewShotPlan& plan) {
    for (std::size_t i = 0; i < specs.size() && i < plan.sets.size(); ++i)
        specs[i].few_shots = plan.sets[i];
}

model::UserQuery plan_query(const model::UserQuery& query, gateway::Gateway& gw,
                            const prompting::PromptOptions& opts) {
    try {
        auto bundle = prompting::build_planner_prompt(query, opts);
        auto response = prompting::complete_and_parse(
            gw, bundle,
            [](const std::string& raw) { return prompting::parse_planner_response(raw); });
        model::UserQuery enriched = query;
        if (!response.intent.empty()) enriched.intent_analysis = response.intent;
        enriched.expansion_terms = response.expansion_terms;
        return enriched;
    } catch (const std::exception& e) {
        log::warn(std::string("query planning degraded to pass-through: ") + e.what());
        return query;
    }
}

std::string embedding_query_text(const model::UserQuery& query, bool expand) {
    std::string text = query.normalized;
    if (expand)
        for (const std::string& term : query.expansion_terms) text += " " + term;
    return text;
}

std::vector<model::Candidate> ranker_predict(const AgentSpec& spec,
                                             const model::UserQuery& query,
                                             const RankerContext& ctx,
                                             gateway::Gateway& gw) {
    if (!ctx.corpus) throw std::invalid_argument("ranker context needs a corpus");
    if (spec.use_embeddings != (ctx.emb_index != nullptr))
        throw std::invalid_argument(
            "embedding index must be present exactly for embedding agents");

    try {
        std::vector<const model::FaqEntry*> faqs;
        if (spec.use_embeddings) {
            const std::string text =
                embedding_query_text(query, ctx.expand_query_for_embedding);
            const auto query_vec = gw.embed_batch({text}).front();
            for (const retrieval::Hit& hit :
                 ctx.emb_index->top_k(query_vec, spec.candidate_pool_size)) {
                const model::FaqEntry* entry = ctx.corpus->by_id(hit.faq_id);
                if (entry) faqs.push_back(entry);
            }
        } else {
            for (const model::FaqEntry& entry : ctx.corpus->entries())
                faqs.push_back(&entry);
        }

        auto bundle = prompting::build_ranker_prompt(spec.use_answers, query, faqs,
                                                     spec.few_shots, ctx.prompts);
        auto response = prompting::complete_and_parse(
            gw, bundle, [&](const std::string& raw) {
                return prompting::parse_ranker_response(raw, *ctx.corpus);
            });

        std::vector<model::Candidate> candidates;
        candidates.reserve(response.relevant_faqs.size());
        for (const prompting::ScoredFaqRef& ref : response.relevant_faqs)
            candidates.push_back(model::Candidate{ref.faq_id, ref.relevance_score,
                                                  ref.reasoning, spec.name});
        return candidates;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const BackendUnavailableError& e) {
        throw AgentFailedError(spec.name, e.what(), true);
    } catch (const MissingReplayEntryError& e) {
        throw AgentFailedError(spec.name, e.what(), true);
    } catch (const TransientError& e) {
        throw AgentFailedError(spec.name, e.what(), true);
    } catch (const std::exception& e) {
        throw AgentFailedError(spec.name, e.what());
    }
}

}  // namespace faqmap::agents
