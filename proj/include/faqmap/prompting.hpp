#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "faqmap/gateway.hpp"
#include "faqmap/model.hpp"

namespace faqmap::prompting {

/// System/user pair with sampling settings; feeds straight into the gateway.
using PromptBundle = gateway::ChatRequest;

/// One worked example shown to an agent: utterance and the FAQ title it maps to.
struct FewShot {
    std::string utterance;
    std::string gold_title;

    friend bool operator==(const FewShot&, const FewShot&) = default;
};

struct PromptOptions {
    double ranker_temperature = 0.1;
    double judge_temperature = 0.3;
    double planner_temperature = 0.1;
    std::size_t budget_chars = 100000;
    // On budget overflow answers are cut to this many words before giving up.
    std::size_t answer_truncate_words = 60;
};

/// One scored FAQ reference inside a structured response. faq_id is filled
/// during parsing by resolving the title against the corpus.
struct ScoredFaqRef {
    std::string faq_title;
    double relevance_score = 0.0;
    std::string reasoning;
    std::string faq_id;

    friend bool operator==(const ScoredFaqRef&, const ScoredFaqRef&) = default;
};

enum class Confidence { high, medium, low };

std::string to_string(Confidence c);
Confidence confidence_from_string(const std::string& s);

struct RankerResponse {
    std::string user_utterance;
    std::string intent_analysis;
    std::string primary_banking_category;
    std::vector<ScoredFaqRef> relevant_faqs;  // at most 5
    Confidence confidence = Confidence::medium;
    std::string explanation_of_confidence;
    std::optional<std::string> recommended_clarification_question;

    friend bool operator==(const RankerResponse&, const RankerResponse&) = default;
};

struct JudgeResponse {
    std::vector<ScoredFaqRef> reranked_faqs;

    friend bool operator==(const JudgeResponse&, const JudgeResponse&) = default;
};

struct PlannerResponse {
    std::string intent;
    std::string category;
    std::vector<std::string> expansion_terms;  // deduplicated, order kept

    friend bool operator==(const PlannerResponse&, const PlannerResponse&) = default;
};

// ---- builders ---------------------------------------------------------------

/// Ranker prompt over the given FAQ slice. Few-shots render as
/// `Example: "{utterance}" -> {gold title}` lines ahead of the FAQ list;
/// FAQs render one per line as `- {question}` plus ` ||| {answer}` when
/// answers are shown. Throws PromptTooLargeError past the budget.
PromptBundle build_ranker_prompt(bool with_answers, const model::UserQuery& query,
                                 const std::vector<const model::FaqEntry*>& faqs,
                                 const std::vector<FewShot>& few_shots,
                                 const PromptOptions& opts = {});

/// Judge prompt: deduplicated candidates with scores, per-agent
/// recommendation sections, answer snippets, training examples.
PromptBundle build_judge_prompt(
    const model::UserQuery& query, const std::vector<model::Candidate>& candidates,
    const std::vector<std::pair<std::string, std::vector<model::Candidate>>>& agent_preds,
    const std::vector<FewShot>& few_shots, const model::FaqCorpus& corpus,
    const PromptOptions& opts = {});

/// Query-analysis prompt asking for {intent, category, expansion_terms}.
PromptBundle build_planner_prompt(const model::UserQuery& query,
                                  const PromptOptions& opts = {});

// ---- parsing ----------------------------------------------------------------

/// Pulls the JSON payload out of an LLM reply: fenced ```json block first,
/// then the first balanced object. Throws UnparseableError.
std::string extract_json(const std::string& raw);

/// Parse + validate + repair a ranker reply. Scores clamp into [0,100];
/// titles resolve against the corpus (exact, then case-insensitive);
/// unresolvable titles drop with a warning unless none survive.
RankerResponse parse_ranker_response(const std::string& raw,
                                     const model::FaqCorpus& corpus);

/// Same for the judge; additionally requires exactly min(5, supplied
/// candidates) entries.
JudgeResponse parse_judge_response(const std::string& raw,
                                   const model::FaqCorpus& corpus,
                                   std::size_t candidates_supplied);

PlannerResponse parse_planner_response(const std::string& raw);

enum class ResponseKind { ranker, judge, planner };

using ParsedResponse = std::variant<RankerResponse, JudgeResponse, PlannerResponse>;

ParsedResponse parse_structured_response(const std::string& raw, ResponseKind kind,
                                         const model::FaqCorpus& corpus,
                                         std::size_t candidates_supplied = 0);

// ---- serialization (fixture builders and round-trip tests) -------------------

std::string to_json(const RankerResponse& r);
std::string to_json(const JudgeResponse& r);

/// Follow-up instruction appended for the single repair pass after an
/// unparseable reply.
extern const std::string kJsonRepairInstruction;

/// Runs the prompt and parses the reply. On an unparseable reply, re-asks
/// once with the repair instruction appended; a second failure propagates.
template <typename Parse>
auto complete_and_parse(gateway::Gateway& gw, const PromptBundle& bundle, Parse parse) {
    const std::string raw = gw.chat_complete(bundle);
    try {
        return parse(raw);
    } catch (const UnparseableError&) {
        PromptBundle repair = bundle;
        repair.user += "\n" + kJsonRepairInstruction;
        return parse(gw.chat_complete(repair));
    }
}

}  // namespace faqmap::prompting
