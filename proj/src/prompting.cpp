#include "faqmap/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "faqmap/log.hpp"
#include "faqmap/prompt_texts.hpp"

namespace faqmap::prompting {

using nlohmann::json;

const std::string kJsonRepairInstruction =
    "Your previous output was not valid JSON; return only the JSON object.";

namespace {

std::string replace_once(std::string text, const std::string& marker,
                         const std::string& value) {
    auto pos = text.find(marker);
    if (pos == std::string::npos) return text;
    text.replace(pos, marker.size(), value);
    return text;
}

std::string truncate_words(const std::string& text, std::size_t max_words) {
    std::istringstream in(text);
    std::string word, out;
    std::size_t n = 0;
    while (n < max_words && in >> word) {
        if (n++) out.push_back(' ');
        out += word;
    }
    return out;
}

std::string format_score(double s) {
    if (s == std::floor(s) && std::abs(s) < 1e15)
        return std::to_string(static_cast<long long>(s));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", s);
    return buf;
}

std::string render_few_shots(const std::vector<FewShot>& few_shots) {
    std::string out;
    for (const FewShot& f : few_shots)
        out += "Example: \"" + f.utterance + "\" -> " + f.gold_title + "\n";
    return out;
}

std::string render_faq_lines(const std::vector<const model::FaqEntry*>& faqs,
                             bool with_answers,
                             std::optional<std::size_t> answer_words) {
    std::string out;
    for (std::size_t i = 0; i < faqs.size(); ++i) {
        if (i) out.push_back('\n');
        out += "- " + faqs[i]->question;
        if (with_answers) {
            std::string answer = faqs[i]->answer;
            if (answer_words) answer = truncate_words(answer, *answer_words);
            out += " ||| " + answer;
        }
    }
    return out;
}

std::string faq_title_of(const model::FaqCorpus& corpus, const std::string& faq_id) {
    const model::FaqEntry* entry = corpus.by_id(faq_id);
    return entry ? entry->question : faq_id;
}

}  // namespace

std::string to_string(Confidence c) {
    switch (c) {
        case Confidence::high: return "HIGH";
        case Confidence::medium: return "MEDIUM";
        case Confidence::low: return "LOW";
    }
    return "MEDIUM";
}

Confidence confidence_from_string(const std::string& s) {
    std::string up = s;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (up == "HIGH") return Confidence::high;
    if (up == "MEDIUM") return Confidence::medium;
    if (up == "LOW") return Confidence::low;
    throw SchemaViolationError("confidence_in_mapping");
}

// ---- builders ---------------------------------------------------------------

PromptBundle build_ranker_prompt(bool with_answers, const model::UserQuery& query,
                                 const std::vector<const model::FaqEntry*>& faqs,
                                 const std::vector<FewShot>& few_shots,
                                 const PromptOptions& opts) {
    if (faqs.empty())
        throw std::invalid_argument("ranker prompt needs at least one FAQ");

    const std::string& system =
        with_answers ? texts::kRankerSystemWithAnswers : texts::kRankerSystemNoAnswers;
    const std::string& templ =
        with_answers ? texts::kRankerUserWithAnswers : texts::kRankerUserNoAnswers;
    const std::string& marker =
        with_answers ? texts::kFaqListMarkerWithAnswers : texts::kFaqListMarkerNoAnswers;
    const std::string list_header =
        with_answers ? "Available FAQs with their Answers:" : "Available FAQs:";

    auto render = [&](std::optional<std::size_t> answer_words) {
        std::string user = templ;
        const std::string examples = render_few_shots(few_shots);
        if (!examples.empty()) {
            auto pos = user.find(list_header);
            user.insert(pos == std::string::npos ? user.size() : pos, examples);
        }
        user = replace_once(std::move(user), marker,
                            render_faq_lines(faqs, with_answers, answer_words));
        user = replace_once(std::move(user), texts::kUtteranceMarker, query.raw);
        return user;
    };

    std::string user = render(std::nullopt);
    if (system.size() + user.size() > opts.budget_chars && with_answers)
        user = render(opts.answer_truncate_words);
    if (system.size() + user.size() > opts.budget_chars)
        throw PromptTooLargeError(system.size() + user.size(), opts.budget_chars);

    return PromptBundle{system, std::move(user), opts.ranker_temperature, true};
}

PromptBundle build_judge_prompt(
    const model::UserQuery& query, const std::vector<model::Candidate>& candidates,
    const std::vector<std::pair<std::string, std::vector<model::Candidate>>>& agent_preds,
    const std::vector<FewShot>& few_shots, const model::FaqCorpus& corpus,
    const PromptOptions& opts) {
    if (candidates.empty())
        throw std::invalid_argument("judge prompt needs at least one candidate");

    auto render = [&](std::optional<std::size_t> answer_words) {
        std::string user = texts::kJudgeInstructions;
        user += "\n\n";
        const std::string examples = render_few_shots(few_shots);
        if (!examples.empty()) user += examples + "\n";
        user += "Candidate FAQs (deduplicated, with their original relevance scores):\n";
        for (const model::Candidate& c : candidates)
            user += "- " + faq_title_of(corpus, c.faq_id) + " (score: " +
                    format_score(c.score) + ", from: " + c.source_agent + ")\n";
        user += "\nAgent recommendations:\n";
        for (const auto& [agent, preds] : agent_preds) {
            user += "Agent " + agent + ":\n";
            if (preds.empty()) user += "(no candidates)\n";
            for (const model::Candidate& c : preds)
                user += "- " + faq_title_of(corpus, c.faq_id) + " (score: " +
                        format_score(c.score) + ")\n";
        }
        user += "\nFAQ Answers:\n";
        for (const model::Candidate& c : candidates) {
            const model::FaqEntry* entry = corpus.by_id(c.faq_id);
            std::string answer = entry ? entry->answer : std::string{};
            if (answer_words) answer = truncate_words(answer, *answer_words);
            user += "- " + faq_title_of(corpus, c.faq_id) + " ||| " + answer + "\n";
        }
        user += "\nUser Utterance: \"" + query.raw + "\"";
        return user;
    };

    std::string user = render(std::nullopt);
    if (texts::kJudgeSystem.size() + user.size() > opts.budget_chars)
        user = render(opts.answer_truncate_words);
    if (texts::kJudgeSystem.size() + user.size() > opts.budget_chars)
        throw PromptTooLargeError(texts::kJudgeSystem.size() + user.size(),
                                  opts.budget_chars);

    return PromptBundle{texts::kJudgeSystem, std::move(user), opts.judge_temperature,
                        true};
}

PromptBundle build_planner_prompt(const model::UserQuery& query,
                                  const PromptOptions& opts) {
    std::string user =
        replace_once(texts::kPlannerUser, texts::kUtteranceMarker, query.raw);
    return PromptBundle{texts::kPlannerSystem, std::move(user),
                        opts.planner_temperature, true};
}

// ---- parsing ----------------------------------------------------------------

namespace {

std::optional<std::string> balanced_object(const std::string& text) {
    auto start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
    }
    return std::nullopt;
}

}  // namespace

std::string extract_json(const std::string& raw) {
    auto fence = raw.find("```");
    if (fence != std::string::npos) {
        auto body_start = raw.find('\n', fence);
        auto fence_end = body_start == std::string::npos
                             ? std::string::npos
                             : raw.find("```", body_start);
        if (fence_end != std::string::npos) {
            if (auto obj = balanced_object(
                    raw.substr(body_start, fence_end - body_start)))
                return *obj;
        }
    }
    if (auto obj = balanced_object(raw)) return *obj;
    throw UnparseableError(raw);
}

namespace {

json parse_object(const std::string& raw) {
    json j = json::parse(extract_json(raw), nullptr, false);
    if (j.is_discarded()) throw UnparseableError(raw);
    if (!j.is_object()) throw SchemaViolationError("root is not an object");
    return j;
}

double numeric_score(const json& value, const std::string& field) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        try {
            return std::stod(value.get<std::string>());
        } catch (...) {
        }
    }
    throw SchemaViolationError(field);
}

std::string string_field(const json& j, const std::string& key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    if (!j.at(key).is_string()) throw SchemaViolationError(key);
    return j.at(key).get<std::string>();
}

std::vector<ScoredFaqRef> parse_scored_list(const json& arr, const std::string& field) {
    std::vector<ScoredFaqRef> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& item = arr[i];
        const std::string at = field + "[" + std::to_string(i) + "]";
        if (!item.is_object()) throw SchemaViolationError(at);
        if (!item.contains("faq") || !item.at("faq").is_string())
            throw SchemaViolationError(at + ".faq");
        ScoredFaqRef ref;
        ref.faq_title = item.at("faq").get<std::string>();
        if (!item.contains("relevance_score"))
            throw SchemaViolationError(at + ".relevance_score");
        ref.relevance_score =
            numeric_score(item.at("relevance_score"), at + ".relevance_score");
        if (ref.relevance_score < 0.0 || ref.relevance_score > 100.0) {
            log::warn("relevance_score " + format_score(ref.relevance_score) +
                      " clamped into [0,100] for \"" + ref.faq_title + "\"");
            ref.relevance_score = std::clamp(ref.relevance_score, 0.0, 100.0);
        }
        ref.reasoning = item.contains("reasoning") && item.at("reasoning").is_string()
                            ? item.at("reasoning").get<std::string>()
                            : std::string{};
        out.push_back(std::move(ref));
    }
    return out;
}

/// Resolve titles to corpus ids; unknown titles drop with a warning, duplicate
/// resolutions keep the first occurrence. Throws only when nothing survives.
std::vector<ScoredFaqRef> resolve_titles(std::vector<ScoredFaqRef> refs,
                                         const model::FaqCorpus& corpus) {
    if (refs.empty()) return refs;
    std::vector<ScoredFaqRef> resolved;
    std::unordered_set<std::string> seen;
    for (ScoredFaqRef& ref : refs) {
        const model::FaqEntry* entry = corpus.by_title(ref.faq_title);
        if (!entry) {
            log::warn("dropping unknown FAQ title: \"" + ref.faq_title + "\"");
            continue;
        }
        if (!seen.insert(entry->id).second) {
            log::warn("dropping duplicate FAQ reference: \"" + ref.faq_title + "\"");
            continue;
        }
        ref.faq_id = entry->id;
        resolved.push_back(std::move(ref));
    }
    if (resolved.empty()) throw UnknownFaqTitleError(refs.front().faq_title);
    return resolved;
}

}  // namespace

RankerResponse parse_ranker_response(const std::string& raw,
                                     const model::FaqCorpus& corpus) {
    json j = parse_object(raw);
    if (!j.contains("relevant_faqs") || !j.at("relevant_faqs").is_array())
        throw SchemaViolationError("relevant_faqs");
    if (j.at("relevant_faqs").size() > 5)
        throw SchemaViolationError("relevant_faqs length");
    if (!j.contains("confidence_in_mapping") ||
        !j.at("confidence_in_mapping").is_string())
        throw SchemaViolationError("confidence_in_mapping");

    RankerResponse r;
    r.user_utterance = string_field(j, "user_utterance");
    r.intent_analysis = string_field(j, "intent_analysis");
    r.primary_banking_category = string_field(j, "primary_banking_category");
    r.confidence =
        confidence_from_string(j.at("confidence_in_mapping").get<std::string>());
    r.explanation_of_confidence = string_field(j, "explanation_of_confidence");
    if (j.contains("recommended_clarification_question") &&
        j.at("recommended_clarification_question").is_string())
        r.recommended_clarification_question =
            j.at("recommended_clarification_question").get<std::string>();

    auto refs = parse_scored_list(j.at("relevant_faqs"), "relevant_faqs");
    if (!refs.empty()) r.relevant_faqs = resolve_titles(std::move(refs), corpus);
    return r;
}

JudgeResponse parse_judge_response(const std::string& raw,
                                   const model::FaqCorpus& corpus,
                                   std::size_t candidates_supplied) {
    json j = parse_object(raw);
    if (!j.contains("reranked_faqs") || !j.at("reranked_faqs").is_array())
        throw SchemaViolationError("reranked_faqs");
    auto refs = parse_scored_list(j.at("reranked_faqs"), "reranked_faqs");
    if (candidates_supplied > 0) {
        const std::size_t expected = std::min<std::size_t>(5, candidates_supplied);
        if (refs.size() != expected) throw SchemaViolationError("reranked_faqs length");
    }
    JudgeResponse r;
    r.reranked_faqs = resolve_titles(std::move(refs), corpus);
    return r;
}

PlannerResponse parse_planner_response(const std::string& raw) {
    json j = parse_object(raw);
    PlannerResponse r;
    r.intent = string_field(j, "intent");
    r.category = string_field(j, "category");
    if (j.contains("expansion_terms")) {
        if (!j.at("expansion_terms").is_array())
            throw SchemaViolationError("expansion_terms");
        std::unordered_set<std::string> seen;
        for (const json& term : j.at("expansion_terms")) {
            if (!term.is_string()) {
                log::warn("dropping non-string expansion term");
                continue;
            }
            std::string t = model::collapse_whitespace(term.get<std::string>());
            if (t.empty() || !seen.insert(t).second) continue;
            r.expansion_terms.push_back(std::move(t));
        }
    }
    return r;
}

ParsedResponse parse_structured_response(const std::string& raw, ResponseKind kind,
                                         const model::FaqCorpus& corpus,
                                         std::size_t candidates_supplied) {
    switch (kind) {
        case ResponseKind::ranker: return parse_ranker_response(raw, corpus);
        case ResponseKind::judge:
            return parse_judge_response(raw, corpus, candidates_supplied);
        case ResponseKind::planner: return parse_planner_response(raw);
    }
    throw std::invalid_argument("unknown response kind");
}

// ---- serialization ------------------------------------------------------------

namespace {

json scored_list_json(const std::vector<ScoredFaqRef>& refs) {
    json arr = json::array();
    for (const ScoredFaqRef& ref : refs)
        arr.push_back(json{{"faq", ref.faq_title},
                           {"relevance_score", ref.relevance_score},
                           {"reasoning", ref.reasoning}});
    return arr;
}

}  // namespace

std::string to_json(const RankerResponse& r) {
    json j{{"user_utterance", r.user_utterance},
           {"intent_analysis", r.intent_analysis},
           {"primary_banking_category", r.primary_banking_category},
           {"relevant_faqs", scored_list_json(r.relevant_faqs)},
           {"confidence_in_mapping", to_string(r.confidence)},
           {"explanation_of_confidence", r.explanation_of_confidence}};
    if (r.recommended_clarification_question)
        j["recommended_clarification_question"] = *r.recommended_clarification_question;
    return j.dump(2);
}

std::string to_json(const JudgeResponse& r) {
    return json{{"reranked_faqs", scored_list_json(r.reranked_faqs)}}.dump(2);
}

}  // namespace faqmap::prompting
