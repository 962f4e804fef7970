#include "faqmap/gateway.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "faqmap/log.hpp"

namespace faqmap::gateway {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string chat_digest(const ChatRequest& req) {
    // json object keys are sorted; dump() emits compact whitespace, so the
    // serialization is canonical for identical requests.
    json j{{"force_json", req.force_json},
           {"kind", "chat"},
           {"system", req.system},
           {"temperature", req.temperature},
           {"user", req.user}};
    return sha256_hex(j.dump());
}

std::string embed_digest(const std::string& text) {
    json j{{"kind", "embed"}, {"text", text}};
    return sha256_hex(j.dump());
}

// ---- ReplayStore -----------------------------------------------------------

ReplayStore ReplayStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open replay store: " + path);
    ReplayStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("digest") || !j.contains("kind"))
            throw ParseError(lineno, "bad replay entry");
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "chat") {
            store.put_chat(j.at("digest").get<std::string>(),
                           j.at("response").get<std::string>());
        } else if (kind == "embed") {
            store.put_embed(j.at("digest").get<std::string>(),
                            j.at("response").get<Embedding>());
        } else {
            throw ParseError(lineno, "unknown replay kind: " + kind);
        }
    }
    return store;
}

std::optional<std::string> ReplayStore::chat_response(const std::string& digest) const {
    auto it = chats_.find(digest);
    if (it == chats_.end()) return std::nullopt;
    return it->second;
}

std::optional<Embedding> ReplayStore::embed_response(const std::string& digest) const {
    auto it = embeds_.find(digest);
    if (it == embeds_.end()) return std::nullopt;
    return it->second;
}

void ReplayStore::put_chat(const std::string& digest, const std::string& response) {
    chats_[digest] = response;
}

void ReplayStore::put_embed(const std::string& digest, const Embedding& response) {
    embeds_[digest] = response;
}

void ReplayStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write replay store: " + path);
    for (const auto& [digest, response] : chats_)
        out << json{{"digest", digest}, {"kind", "chat"}, {"response", response}}.dump()
            << "\n";
    for (const auto& [digest, response] : embeds_)
        out << json{{"digest", digest}, {"kind", "embed"}, {"response", response}}.dump()
            << "\n";
}

// ---- ReplayBackend ---------------------------------------------------------

std::string ReplayBackend::chat(const ChatRequest& req, const BackendConfig&) {
    const std::string digest = chat_digest(req);
    if (auto hit = store_->chat_response(digest)) return *hit;
    throw MissingReplayEntryError(digest);
}

std::vector<Embedding> ReplayBackend::embed(const std::vector<std::string>& texts,
                                            const BackendConfig&) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        const std::string digest = embed_digest(text);
        auto hit = store_->embed_response(digest);
        if (!hit) throw MissingReplayEntryError(digest);
        out.push_back(std::move(*hit));
    }
    return out;
}

// ---- RecordingBackend ------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner,
                                   std::shared_ptr<ReplayStore> store,
                                   std::string append_path)
    : inner_(std::move(inner)), store_(std::move(store)), path_(std::move(append_path)) {}

void RecordingBackend::append_line(const std::string& line) {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        log::warn("replay record append failed: " + path_);
        return;
    }
    out << line << "\n";
}

std::string RecordingBackend::chat(const ChatRequest& req, const BackendConfig& cfg) {
    const std::string response = inner_->chat(req, cfg);
    const std::string digest = chat_digest(req);
    std::lock_guard<std::mutex> lock(write_mu_);
    store_->put_chat(digest, response);
    append_line(json{{"digest", digest}, {"kind", "chat"}, {"response", response}}.dump());
    return response;
}

std::vector<Embedding> RecordingBackend::embed(const std::vector<std::string>& texts,
                                               const BackendConfig& cfg) {
    auto vectors = inner_->embed(texts, cfg);
    std::lock_guard<std::mutex> lock(write_mu_);
    for (std::size_t i = 0; i < texts.size() && i < vectors.size(); ++i) {
        const std::string digest = embed_digest(texts[i]);
        store_->put_embed(digest, vectors[i]);
        append_line(
            json{{"digest", digest}, {"kind", "embed"}, {"response", vectors[i]}}.dump());
    }
    return vectors;
}

// ---- Gateway ---------------------------------------------------------------

Millis backoff_delay(int attempt, const RetryPolicy& policy, double jitter_unit) {
    double nominal =
        static_cast<double>(policy.base.count()) * std::pow(policy.factor, attempt);
    double jittered = nominal * (1.0 + policy.jitter * jitter_unit);
    return Millis{static_cast<long>(jittered < 0 ? 0 : jittered)};
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig cfg,
                 RetryPolicy retry)
    : backend_(std::move(backend)), cfg_(std::move(cfg)), retry_(std::move(retry)) {
    if (!retry_.sleeper)
        retry_.sleeper = [](Millis d) { std::this_thread::sleep_for(d); };
}

template <typename Fn>
auto Gateway::with_retry(Fn&& fn) -> decltype(fn()) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= cfg_.max_retries)
                throw BackendUnavailableError(std::string("retries exhausted: ") +
                                              e.what());
            // jitter in [-1, 1] from the raw engine, so the schedule does not
            // depend on distribution internals
            double unit = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
            retry_.sleeper(backoff_delay(attempt, retry_, unit));
            log::info("transient backend failure, retrying: " + std::string(e.what()));
        }
    }
}

std::string Gateway::chat_complete(const ChatRequest& req) {
    if (req.system.empty() || req.user.empty())
        throw std::invalid_argument("chat request needs nonempty system and user text");
    if (req.temperature < 0.0 || req.temperature > 2.0)
        throw std::invalid_argument("chat temperature outside [0,2]");
    return with_retry([&] { return backend_->chat(req, cfg_); });
}

std::vector<Embedding> Gateway::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw std::invalid_argument("embed_batch requires at least one text");
    auto vectors = with_retry([&] { return backend_->embed(texts, cfg_); });
    if (vectors.size() != texts.size())
        throw DimensionMismatchError("backend returned " + std::to_string(vectors.size()) +
                                     " vectors for " + std::to_string(texts.size()) +
                                     " inputs");
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
    for (Embedding& v : vectors) {
        if (v.size() != dim)
            throw DimensionMismatchError("ragged embedding dimensions: " +
                                         std::to_string(v.size()) + " vs " +
                                         std::to_string(dim));
        double norm_sq = 0.0;
        for (float x : v) norm_sq += static_cast<double>(x) * x;
        if (norm_sq <= 0.0)
            throw DimensionMismatchError("backend returned a zero embedding");
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (float& x : v) x = static_cast<float>(x * inv);
    }
    return vectors;
}

}  // namespace faqmap::gateway
