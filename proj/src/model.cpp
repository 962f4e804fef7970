#include "faqmap/model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "faqmap/errors.hpp"

namespace faqmap::model {

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::string fold_ascii(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

std::string collapse_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = false;
    for (char c : text) {
        if (is_ascii_space(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.faq_id < b.faq_id;
}

const FaqEntry* FaqCorpus::by_id(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const FaqEntry* FaqCorpus::by_title(const std::string& title) const {
    auto it = title_index_.find(title);
    if (it != title_index_.end()) return &entries_[it->second];
    auto folded = folded_title_index_.find(fold_ascii(title));
    if (folded != folded_title_index_.end()) return &entries_[folded->second];
    return nullptr;
}

FaqCorpus validate_faq_set(std::vector<FaqEntry> entries) {
    if (entries.empty()) throw EmptyCorpusError();
    FaqCorpus corpus;
    corpus.entries_ = std::move(entries);
    for (std::size_t i = 0; i < corpus.entries_.size(); ++i) {
        const FaqEntry& e = corpus.entries_[i];
        if (trim(e.question).empty()) throw EmptyQuestionError(i);
        auto [_, inserted] = corpus.index_.emplace(e.id, i);
        if (!inserted) throw DuplicateIdError(e.id);
        // Duplicate titles are tolerated; the first entry wins resolution.
        corpus.title_index_.emplace(e.question, i);
        corpus.folded_title_index_.emplace(fold_ascii(e.question), i);
    }
    return corpus;
}

UserQuery normalize_utterance(const std::string& raw) {
    UserQuery q;
    q.raw = raw;
    q.normalized = fold_ascii(collapse_whitespace(raw));
    if (q.normalized.empty()) throw EmptyUtteranceError();
    return q;
}

RankedList RankedList::of(std::vector<Candidate> items, std::size_t k) {
    std::stable_sort(items.begin(), items.end(), ranks_before);
    std::unordered_set<std::string> seen;
    for (const Candidate& c : items) {
        if (c.score < 0.0 || c.score > 100.0)
            throw std::invalid_argument("candidate score outside [0,100]: " + c.faq_id);
        if (!seen.insert(c.faq_id).second)
            throw std::invalid_argument("duplicate faq_id in ranked list: " + c.faq_id);
    }
    if (items.size() > k)
        throw std::invalid_argument("ranked list longer than its bound k");
    RankedList out;
    out.items_ = std::move(items);
    out.k_ = k;
    return out;
}

std::vector<FaqEntry> read_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus file: " + path);
    std::vector<FaqEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("question"))
            throw ParseError(lineno, "expected {\"id\",\"question\",...} object");
        FaqEntry e;
        e.id = j.at("id").get<std::string>();
        e.question = j.at("question").get<std::string>();
        e.answer = j.value("answer", std::string{});
        if (j.contains("category") && j.at("category").is_string())
            e.category = j.at("category").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

FaqCorpus load_corpus(const std::string& path) {
    return validate_faq_set(read_corpus_jsonl(path));
}

}  // namespace faqmap::model
