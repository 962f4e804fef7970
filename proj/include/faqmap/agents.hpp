#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faqmap/gateway.hpp"
#include "faqmap/model.hpp"
#include "faqmap/prompting.hpp"
#include "faqmap/retrieval.hpp"

namespace faqmap::agents {

/// One specialized ranker agent. The standard roster is the four
/// combinations of {embedding retrieval} x {answer visibility}.
struct AgentSpec {
    std::string name;
    bool use_embeddings = false;
    bool use_answers = false;
    std::vector<prompting::FewShot> few_shots;   // 5 in standard operation
    std::size_t candidate_pool_size = 20;        // embedding variants only
};

/// direct, embed, direct_ans, embed_ans.
std::vector<AgentSpec> standard_agents(std::size_t pool_size = 20);

enum class FewShotPolicy {
    disjoint,     // one global sample partitioned across agents (default)
    independent,  // per-agent sampling; overlap across agents allowed
    shared,       // every agent gets the same sample
};

struct FewShotPlan {
    std::vector<std::vector<prompting::FewShot>> sets;  // one per agent
    std::uint64_t seed = 0;
};

/// Seed-reproducible sampling without replacement. The disjoint policy
/// draws n_agents * per_agent distinct examples and partitions them, so the
/// per-agent sets never overlap.
FewShotPlan select_few_shots(const std::vector<prompting::FewShot>& training,
                             std::size_t n_agents, std::size_t per_agent,
                             std::uint64_t seed,
                             FewShotPolicy policy = FewShotPolicy::disjoint);

/// Assigns plan.sets to specs in roster order.
void assign_few_shots(std::vector<AgentSpec>& specs, const FewShotPlan& plan);

/// Query analysis + expansion. Degrades to the unchanged query on any
/// gateway or parse failure; never throws for those.
model::UserQuery plan_query(const model::UserQuery& query, gateway::Gateway& gw,
                            const prompting::PromptOptions& opts = {});

struct RankerContext {
    const model::FaqCorpus* corpus = nullptr;
    const retrieval::EmbeddingIndex* emb_index = nullptr;  // required iff use_embeddings
    prompting::PromptOptions prompts;
    bool expand_query_for_embedding = true;
};

/// Runs one ranker agent: embedding variants rank a cosine-curated pool,
/// direct variants rank the whole corpus. At most 5 candidates, unique ids,
/// tagged with the agent name. Throws AgentFailedError on any LLM or parse
/// failure (after one JSON repair pass).
std::vector<model::Candidate> ranker_predict(const AgentSpec& spec,
                                             const model::UserQuery& query,
                                             const RankerContext& ctx,
                                             gateway::Gateway& gw);

/// Query text used for agent-side embedding: normalized utterance plus
/// expansion terms joined by spaces (when enabled).
std::string embedding_query_text(const model::UserQuery& query, bool expand);

}  // namespace faqmap::agents
