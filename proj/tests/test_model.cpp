#include <doctest.h>

#include <random>

#include "faqmap/errors.hpp"
#include "faqmap/model.hpp"
#include "support.hpp"

using namespace faqmap;

TEST_CASE("validate_faq_set accepts a minimal corpus") {
    auto corpus = model::validate_faq_set(
        {model::FaqEntry{"a", "How do I lock my card?", "...", std::nullopt}});
    CHECK(corpus.size() == 1);
    CHECK(corpus.by_id("a") != nullptr);
    CHECK(corpus.by_id("b") == nullptr);
}

TEST_CASE("validate_faq_set rejects duplicate ids") {
    std::vector<model::FaqEntry> entries{
        model::FaqEntry{"a", "q one", "", std::nullopt},
        model::FaqEntry{"a", "q two", "", std::nullopt}};
    CHECK_THROWS_AS(model::validate_faq_set(entries), DuplicateIdError);
    try {
        model::validate_faq_set(entries);
    } catch (const DuplicateIdError& e) {
        CHECK(e.id == "a");
    }
}

TEST_CASE("validate_faq_set rejects empty input and blank questions") {
    CHECK_THROWS_AS(model::validate_faq_set({}), EmptyCorpusError);
    CHECK_THROWS_AS(model::validate_faq_set(
                        {model::FaqEntry{"a", "  \t ", "", std::nullopt}}),
                    EmptyQuestionError);
}

TEST_CASE("title lookup is exact first, then case-insensitive") {
    auto corpus = testsupport::bank_corpus();
    const auto* exact = corpus.by_title("What is account preview?");
    REQUIRE(exact != nullptr);
    CHECK(exact->id == "faq-account-preview");
    const auto* folded = corpus.by_title("what IS account PREVIEW?");
    REQUIRE(folded != nullptr);
    CHECK(folded->id == "faq-account-preview");
    CHECK(corpus.by_title("no such question") == nullptr);
}

TEST_CASE("normalize_utterance trims, collapses, and folds") {
    CHECK(model::normalize_utterance("  Lost   DEB ").normalized == "lost deb");
    CHECK(model::normalize_utterance("sba").normalized == "sba");
    CHECK(model::normalize_utterance("A\tB\nC").normalized == "a b c");
    CHECK(model::normalize_utterance("  Lost   DEB ").raw == "  Lost   DEB ");
    CHECK_THROWS_AS(model::normalize_utterance("   "), EmptyUtteranceError);
}

TEST_CASE("normalize_utterance is idempotent on random ascii strings") {
    std::mt19937_64 rng{7};
    const std::string alphabet = "aA zZ\t.?!09  ";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const std::size_t len = 1 + testsupport::draw(rng, 24);
        for (std::size_t i = 0; i < len; ++i)
            s.push_back(alphabet[testsupport::draw(rng, alphabet.size())]);
        try {
            const std::string once = model::normalize_utterance(s).normalized;
            CHECK(model::normalize_utterance(once).normalized == once);
        } catch (const EmptyUtteranceError&) {
            // whitespace-only draw; nothing to check
        }
    }
}

TEST_CASE("RankedList sorts by score then id and enforces bounds") {
    std::vector<model::Candidate> items{
        {"b", 80.0, "", "x"}, {"a", 90.0, "", "x"}, {"c", 80.0, "", "x"}};
    auto list = model::RankedList::of(items, 5);
    REQUIRE(list.size() == 3);
    CHECK(list.items()[0].faq_id == "a");
    CHECK(list.items()[1].faq_id == "b");  // 80-80 tie broken by id
    CHECK(list.items()[2].faq_id == "c");

    CHECK_THROWS_AS(model::RankedList::of({{"a", 50, "", ""}, {"a", 40, "", ""}}, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(model::RankedList::of({{"a", 101.0, "", ""}}, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(model::RankedList::of(items, 2), std::invalid_argument);
}

TEST_CASE("corpus jsonl round-trips through the loader") {
    auto corpus = testsupport::bank_corpus();
    CHECK(corpus.size() == 8);
    const auto* lock = corpus.by_id("faq-lock-card");
    REQUIRE(lock != nullptr);
    CHECK(lock->question == "Lock and unlock your credit and debit cards");
    CHECK(lock->category == "Security");
}
