#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "faqmap/gateway.hpp"
#include "faqmap/model.hpp"

namespace faqmap::retrieval {

/// Raw-scale retrieval hit (BM25 or cosine). These scores never surface as
/// agent-layer Candidate scores.
struct Hit {
    std::string faq_id;
    double score = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// score descending, faq_id ascending.
bool hit_ranks_before(const Hit& a, const Hit& b);

/// Case-fold, split on non-alphanumeric, drop empties. Bytes >= 0x80 are
/// kept as token characters so UTF-8 text survives intact.
std::vector<std::string> tokenize(const std::string& text);

/// Text embedded for one FAQ: "Question: {question} Answer: {answer}" when
/// answers are included, the bare question otherwise.
std::string faq_embedding_text(const model::FaqEntry& faq, bool with_answers);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class Bm25Index {
  public:
    static Bm25Index build(const model::FaqCorpus& corpus, bool with_answers,
                           Bm25Params params = {});

    /// Okapi BM25 over every document, top-k under the tie rule. Duplicate
    /// query tokens accumulate.
    std::vector<Hit> top_k(const model::UserQuery& query, std::size_t k) const;

    double score(std::size_t doc, const std::vector<std::string>& query_tokens) const;

    std::size_t n_docs() const { return n_docs_; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t doc_length(std::size_t doc) const { return doc_lengths_[doc]; }
    std::size_t doc_freq(const std::string& term) const;
    const Bm25Params& params() const { return params_; }
    const std::string& doc_id(std::size_t doc) const { return ids_[doc]; }

  private:
    std::vector<std::string> ids_;
    std::vector<std::unordered_map<std::string, std::size_t>> doc_term_freqs_;
    std::vector<std::size_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::size_t> doc_freq_;
    std::size_t n_docs_ = 0;
    Bm25Params params_;
};

class EmbeddingIndex {
  public:
    /// Embeds every FAQ through the gateway in batches. Either the whole
    /// index is built or the gateway error propagates; no partial state.
    static EmbeddingIndex build(const model::FaqCorpus& corpus, bool with_answers,
                                gateway::Gateway& gw, std::size_t batch_size = 256);

    /// Cosine similarity (dot product of unit vectors) over every FAQ.
    std::vector<Hit> top_k(const gateway::Embedding& query_vec, std::size_t k) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dimension_; }
    bool with_answers() const { return with_answers_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const gateway::Embedding& vector_of(std::size_t i) const { return vectors_[i]; }

    /// Binary little-endian format: u32 dimension, u8 with_answers, u32 n,
    /// then per FAQ u32 id length, id bytes, dimension f32 components.
    void save(const std::string& path) const;
    static EmbeddingIndex load(const std::string& path);

  private:
    std::vector<std::string> ids_;
    std::vector<gateway::Embedding> vectors_;
    std::size_t dimension_ = 0;
    bool with_answers_ = false;
};

}  // namespace faqmap::retrieval
