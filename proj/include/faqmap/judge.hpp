#pragma once

#include <string>
#include <utility>
#include <vector>

#include "faqmap/gateway.hpp"
#include "faqmap/model.hpp"
#include "faqmap/prompting.hpp"

namespace faqmap::judge {

enum class VerdictMode { judged, meta_judged, fallback };

std::string to_string(VerdictMode mode);
VerdictMode verdict_mode_from_string(const std::string& s);

/// Final ranking with provenance. Items carry the reasoning produced by
/// whichever path built them.
struct JudgeVerdict {
    model::RankedList ranked;
    VerdictMode mode = VerdictMode::judged;

    friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

/// Per-agent candidate lists in roster order (Algorithm inputs are keyed by
/// agent name; order matters for tie attribution).
using AgentPredictions =
    std::vector<std::pair<std::string, std::vector<model::Candidate>>>;

/// One judge pass: prompt, parse (exactly min(5, |candidates|) entries),
/// drop titles outside the candidate set, backfill from candidate scores,
/// rank by judge scores. Throws JudgeFailedError on any LLM/parse failure.
JudgeVerdict judge_rerank(const model::UserQuery& query,
                          const std::vector<model::Candidate>& candidates,
                          const AgentPredictions& agent_preds,
                          const std::vector<prompting::FewShot>& few_shots,
                          const model::FaqCorpus& corpus, gateway::Gateway& gw,
                          const prompting::PromptOptions& opts = {});

/// Mean pairwise rank agreement between two rankings: the fraction of
/// concordantly ordered pairs among items present in both (0 when fewer
/// than two items are shared).
double rank_agreement(const model::RankedList& a, const model::RankedList& b);

/// Judge-as-a-judge: n_samples independent verdicts generated concurrently;
/// the one with the highest mean agreement with the rest wins, ties by
/// lowest sample index. n_samples = 1 reduces to judge_rerank. Throws only
/// when every sample fails.
JudgeVerdict meta_judge(const model::UserQuery& query,
                        const std::vector<model::Candidate>& candidates,
                        const AgentPredictions& agent_preds,
                        const std::vector<prompting::FewShot>& few_shots,
                        const model::FaqCorpus& corpus, gateway::Gateway& gw,
                        std::size_t n_samples,
                        const prompting::PromptOptions& opts = {});

enum class FallbackMean {
    over_proposing_agents,  // default: mean over agents that proposed the FAQ
    over_all_agents,        // zeros for agents that did not propose it
};

/// Judge-free aggregation: rank FAQs by their average score across agents,
/// top 5 under the tie rule. Reasoning and source tag come from the
/// highest-scoring proposing instance.
JudgeVerdict fallback_average(const AgentPredictions& agent_preds,
                              FallbackMean mean = FallbackMean::over_proposing_agents);

}  // namespace faqmap::judge
