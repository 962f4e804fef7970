#include "faqmap/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace faqmap::retrieval {

namespace {

bool token_char(unsigned char c) {
    return c >= 0x80 || std::isalnum(c);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ofstream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

float read_f32(std::ifstream& in) {
    std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::vector<Hit> rank_all(std::vector<Hit> hits, std::size_t k) {
    std::sort(hits.begin(), hits.end(), hit_ranks_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace

bool hit_ranks_before(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.faq_id < b.faq_id;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : model::fold_ascii(text)) {
        if (token_char(static_cast<unsigned char>(c))) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string faq_embedding_text(const model::FaqEntry& faq, bool with_answers) {
    if (!with_answers) return faq.question;
    return "Question: " + faq.question + " Answer: " + faq.answer;
}

// ---- BM25 -------------------------------------------------------------------

Bm25Index Bm25Index::build(const model::FaqCorpus& corpus, bool with_answers,
                           Bm25Params params) {
    Bm25Index index;
    index.params_ = params;
    index.n_docs_ = corpus.size();
    std::size_t total_tokens = 0;
    for (const model::FaqEntry& faq : corpus.entries()) {
        index.ids_.push_back(faq.id);
        std::string text = faq.question;
        if (with_answers) text += " " + faq.answer;
        auto tokens = tokenize(text);
        total_tokens += tokens.size();
        index.doc_lengths_.push_back(tokens.size());
        std::unordered_map<std::string, std::size_t> tf;
        for (const std::string& t : tokens) ++tf[t];
        for (const auto& [term, _] : tf) ++index.doc_freq_[term];
        index.doc_term_freqs_.push_back(std::move(tf));
    }
    index.avg_doc_length_ =
        index.n_docs_ ? static_cast<double>(total_tokens) / index.n_docs_ : 0.0;
    return index;
}

std::size_t Bm25Index::doc_freq(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
}

double Bm25Index::score(std::size_t doc,
                        const std::vector<std::string>& query_tokens) const {
    const auto& tf_map = doc_term_freqs_[doc];
    const double len_norm =
        params_.k1 * (1.0 - params_.b +
                      params_.b * static_cast<double>(doc_lengths_[doc]) / avg_doc_length_);
    double total = 0.0;
    for (const std::string& term : query_tokens) {
        auto df_it = doc_freq_.find(term);
        if (df_it == doc_freq_.end()) continue;
        auto tf_it = tf_map.find(term);
        if (tf_it == tf_map.end()) continue;
        const double df = static_cast<double>(df_it->second);
        const double tf = static_cast<double>(tf_it->second);
        const double idf =
            std::log(1.0 + (static_cast<double>(n_docs_) - df + 0.5) / (df + 0.5));
        total += idf * tf * (params_.k1 + 1.0) / (tf + len_norm);
    }
    return total;
}

std::vector<Hit> Bm25Index::top_k(const model::UserQuery& query, std::size_t k) const {
    const auto query_tokens = tokenize(query.normalized);
    std::vector<Hit> hits;
    hits.reserve(n_docs_);
    for (std::size_t d = 0; d < n_docs_; ++d)
        hits.push_back(Hit{ids_[d], score(d, query_tokens)});
    return rank_all(std::move(hits), k);
}

// ---- embedding index ----------------------------------------------------------

EmbeddingIndex EmbeddingIndex::build(const model::FaqCorpus& corpus, bool with_answers,
                                     gateway::Gateway& gw, std::size_t batch_size) {
    EmbeddingIndex index;
    index.with_answers_ = with_answers;
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const model::FaqEntry& faq : corpus.entries())
        texts.push_back(faq_embedding_text(faq, with_answers));

    for (std::size_t start = 0; start < texts.size(); start += batch_size) {
        const std::size_t end = std::min(texts.size(), start + batch_size);
        std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
        auto vectors = gw.embed_batch(batch);
        for (auto& v : vectors) {
            if (index.dimension_ == 0) index.dimension_ = v.size();
            if (v.size() != index.dimension_)
                throw DimensionMismatchError("embedding dimension changed across batches");
            index.vectors_.push_back(std::move(v));
        }
    }
    for (const model::FaqEntry& faq : corpus.entries()) index.ids_.push_back(faq.id);
    return index;
}

std::vector<Hit> EmbeddingIndex::top_k(const gateway::Embedding& query_vec,
                                       std::size_t k) const {
    if (query_vec.size() != dimension_)
        throw DimensionMismatchError("query vector dimension " +
                                     std::to_string(query_vec.size()) +
                                     " does not match index dimension " +
                                     std::to_string(dimension_));
    std::vector<Hit> hits;
    hits.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        double dot = 0.0;
        const gateway::Embedding& v = vectors_[i];
        for (std::size_t d = 0; d < dimension_; ++d)
            dot += static_cast<double>(v[d]) * static_cast<double>(query_vec[d]);
        hits.push_back(Hit{ids_[i], dot});
    }
    return rank_all(std::move(hits), k);
}

void EmbeddingIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write embedding index: " + path);
    write_u32(out, static_cast<std::uint32_t>(dimension_));
    out.put(with_answers_ ? 1 : 0);
    write_u32(out, static_cast<std::uint32_t>(ids_.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        write_u32(out, static_cast<std::uint32_t>(ids_[i].size()));
        out.write(ids_[i].data(), static_cast<std::streamsize>(ids_[i].size()));
        for (float x : vectors_[i]) write_f32(out, x);
    }
    if (!out) throw ConfigError("short write on embedding index: " + path);
}

EmbeddingIndex EmbeddingIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open embedding index: " + path);
    EmbeddingIndex index;
    index.dimension_ = read_u32(in);
    index.with_answers_ = in.get() == 1;
    const std::uint32_t n = read_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t id_len = read_u32(in);
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        gateway::Embedding v(index.dimension_);
        for (float& x : v) x = read_f32(in);
        index.ids_.push_back(std::move(id));
        index.vectors_.push_back(std::move(v));
    }
    if (!in) throw ConfigError("truncated embedding index: " + path);
    return index;
}

}  // namespace faqmap::retrieval
