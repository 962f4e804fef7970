#pragma once

// Shared helpers for the test suites: fixture paths, tiny corpora, scripted
// response builders, and a deterministic RNG wrapper.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "faqmap/agents.hpp"
#include "faqmap/gateway.hpp"
#include "faqmap/model.hpp"
#include "faqmap/orchestrator.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
    return (std::filesystem::path(FAQMAP_FIXTURES_DIR) / name).string();
}

inline faqmap::model::FaqCorpus bank_corpus() {
    return faqmap::model::load_corpus(fixture_path("corpus_bank.jsonl"));
}

/// n entries with ids d00..d{n-1} and distinct questions.
inline faqmap::model::FaqCorpus synthetic_corpus(std::size_t n) {
    std::vector<faqmap::model::FaqEntry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        char id[8];
        std::snprintf(id, sizeof(id), "d%03zu", i);
        entries.push_back(faqmap::model::FaqEntry{
            id, "question number " + std::to_string(i) + " about topic " +
                    std::to_string(i * 7 % 13),
            "answer body " + std::to_string(i), std::nullopt});
    }
    return faqmap::model::validate_faq_set(std::move(entries));
}

/// Ranker response JSON naming FAQ titles with scores.
inline std::string ranker_json(
    const std::vector<std::pair<std::string, double>>& title_scores,
    const std::string& confidence = "HIGH") {
    nlohmann::json faqs = nlohmann::json::array();
    for (const auto& [title, score] : title_scores)
        faqs.push_back({{"faq", title},
                        {"relevance_score", score},
                        {"reasoning", "scripted reasoning for " + title}});
    return nlohmann::json{{"user_utterance", "scripted"},
                          {"intent_analysis", "scripted intent"},
                          {"primary_banking_category", "Security"},
                          {"relevant_faqs", faqs},
                          {"confidence_in_mapping", confidence},
                          {"explanation_of_confidence", "scripted"}}
        .dump();
}

inline std::string judge_json(
    const std::vector<std::pair<std::string, double>>& title_scores) {
    nlohmann::json faqs = nlohmann::json::array();
    for (const auto& [title, score] : title_scores)
        faqs.push_back({{"faq", title},
                        {"relevance_score", score},
                        {"reasoning", "judge reasoning for " + title}});
    return nlohmann::json{{"reranked_faqs", faqs}}.dump();
}

/// Agent spec whose prompt is uniquely identifiable by a few-shot marker, so
/// scripted rules can target individual agents.
inline faqmap::agents::AgentSpec marked_agent(const std::string& name,
                                              bool use_embeddings, bool use_answers,
                                              std::size_t pool = 20) {
    faqmap::agents::AgentSpec spec{name, use_embeddings, use_answers, {}, pool};
    spec.few_shots.push_back(
        faqmap::prompting::FewShot{"marker-" + name, "marker gold title"});
    return spec;
}

inline std::string marker_needle(const std::string& agent_name) {
    return "Example: \"marker-" + agent_name + "\"";
}

/// Uniform integer in [0, n) from raw engine outputs (bit-stable anywhere).
inline std::size_t draw(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

}  // namespace testsupport
