#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace faqmap::model {

/// One FAQ: stable id, question title, optional answer body.
struct FaqEntry {
    std::string id;
    std::string question;
    std::string answer;
    std::optional<std::string> category;
};

/// Validated, immutable FAQ collection. Build via validate_faq_set().
class FaqCorpus {
  public:
    const std::vector<FaqEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    const FaqEntry* by_id(const std::string& id) const;
    const FaqEntry& at(std::size_t i) const { return entries_[i]; }

    /// Resolve an FAQ title (question text) to an entry: exact match first,
    /// then case-insensitive. Returns nullptr when neither matches.
    const FaqEntry* by_title(const std::string& title) const;

  private:
    friend FaqCorpus validate_faq_set(std::vector<FaqEntry> entries);
    std::vector<FaqEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::size_t> title_index_;
    std::unordered_map<std::string, std::size_t> folded_title_index_;
};

/// A user utterance plus planner enrichment.
struct UserQuery {
    std::string raw;
    std::string normalized;
    std::optional<std::string> intent_analysis;
    std::vector<std::string> expansion_terms;  // deduplicated, insertion order
};

/// One scored FAQ candidate emitted by a ranker agent.
struct Candidate {
    std::string faq_id;
    double score = 0.0;  // always on the 0-100 agent scale
    std::string reasoning;
    std::string source_agent;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Candidates sorted by score descending, ties by faq_id ascending, at most
/// k items, ids unique. Construction enforces the ordering invariants.
class RankedList {
  public:
    RankedList() = default;

    /// Sorts and validates. Throws std::invalid_argument on duplicate ids,
    /// out-of-range scores, or more than k items after construction.
    static RankedList of(std::vector<Candidate> items, std::size_t k);

    const std::vector<Candidate>& items() const { return items_; }
    std::size_t k() const { return k_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    friend bool operator==(const RankedList&, const RankedList&) = default;

  private:
    std::vector<Candidate> items_;
    std::size_t k_ = 0;
};

/// Composite tie rule used everywhere a ranking is produced:
/// score descending, then faq_id ascending.
bool ranks_before(const Candidate& a, const Candidate& b);

/// Validates invariants (nonempty corpus, unique ids, nonempty questions)
/// and builds the lookup tables. Questions are trimmed for the emptiness
/// check only; stored text is untouched.
FaqCorpus validate_faq_set(std::vector<FaqEntry> entries);

/// Trim, collapse internal whitespace, ASCII case-fold. Raw text preserved.
/// Throws EmptyUtteranceError when nothing survives.
UserQuery normalize_utterance(const std::string& raw);

/// Helpers shared by normalization, tokenizers, and cache keys.
std::string fold_ascii(const std::string& text);
std::string collapse_whitespace(const std::string& text);

/// Corpus JSON-lines format: one {"id","question","answer","category"?}
/// object per line, UTF-8.
std::vector<FaqEntry> read_corpus_jsonl(const std::string& path);
FaqCorpus load_corpus(const std::string& path);

}  // namespace faqmap::model
