#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "faqmap/errors.hpp"

namespace faqmap::gateway {

using Embedding = std::vector<float>;
using Millis = std::chrono::milliseconds;

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.1;
    bool force_json = true;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// Model names and transport settings. Model identifiers are configuration,
/// never hardcoded at call sites.
struct BackendConfig {
    std::string endpoint_url = "https://api.openai.com/v1";
    std::string api_key_env_name = "OPENAI_API_KEY";
    std::string chat_model_name = "gpt-4o";
    std::string embed_model_name = "text-embedding-ada-002";
    int max_retries = 3;
    Millis timeout = Millis{30000};
};

/// SHA-256 hex over the canonical serialization of a chat request or a single
/// embedding input (sorted keys, compact whitespace). Stable across runs.
std::string chat_digest(const ChatRequest& req);
std::string embed_digest(const std::string& text);
std::string sha256_hex(const std::string& data);

/// Transport interface. Implementations may throw TransientError for
/// retryable failures; anything else is treated as permanent.
class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const ChatRequest& req, const BackendConfig& cfg) = 0;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                         const BackendConfig& cfg) = 0;
};

// ---------------------------------------------------------------------------
// Replay store: digest -> recorded response, persisted as JSON-lines of
// {digest, kind, response}. Enables bit-identical offline runs.
// ---------------------------------------------------------------------------

class ReplayStore {
  public:
    ReplayStore() = default;
    static ReplayStore load(const std::string& path);

    std::optional<std::string> chat_response(const std::string& digest) const;
    std::optional<Embedding> embed_response(const std::string& digest) const;

    void put_chat(const std::string& digest, const std::string& response);
    void put_embed(const std::string& digest, const Embedding& response);

    void save(const std::string& path) const;
    std::size_t size() const { return chats_.size() + embeds_.size(); }

  private:
    std::map<std::string, std::string> chats_;
    std::map<std::string, Embedding> embeds_;
};

/// Offline backend: answers only from the store, throws MissingReplayEntryError
/// on any request it has not seen.
class ReplayBackend : public ChatBackend {
  public:
    explicit ReplayBackend(std::shared_ptr<const ReplayStore> store)
        : store_(std::move(store)) {}

    std::string chat(const ChatRequest& req, const BackendConfig& cfg) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const BackendConfig& cfg) override;

  private:
    std::shared_ptr<const ReplayStore> store_;
};

/// Pass-through backend that records every response into a store and appends
/// it to a JSON-lines file when a path is given. Writes are serialized.
class RecordingBackend : public ChatBackend {
  public:
    RecordingBackend(std::shared_ptr<ChatBackend> inner,
                     std::shared_ptr<ReplayStore> store,
                     std::string append_path = {});

    std::string chat(const ChatRequest& req, const BackendConfig& cfg) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const BackendConfig& cfg) override;

  private:
    void append_line(const std::string& line);

    std::shared_ptr<ChatBackend> inner_;
    std::shared_ptr<ReplayStore> store_;
    std::string path_;
    std::mutex write_mu_;
};

/// OpenAI-compatible HTTP transport: POST {endpoint}/chat/completions and
/// {endpoint}/embeddings. The API key is read from the environment variable
/// named in the config.
class HttpBackend : public ChatBackend {
  public:
    std::string chat(const ChatRequest& req, const BackendConfig& cfg) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const BackendConfig& cfg) override;
};

// ---------------------------------------------------------------------------
// Scripted backend for offline tests: canned responses keyed by substring
// matchers, invocation counting, failure and delay injection.
// ---------------------------------------------------------------------------

class ScriptedBackend : public ChatBackend {
  public:
    struct ChatRule {
        std::string needle;  // must occur in system + "\n" + user
        std::vector<std::string> responses;  // per-invocation; last one repeats
        std::size_t fail_first = 0;          // transient failures before answering
        bool permanent_fail = false;
        Millis delay{0};
    };

    void add_chat_rule(ChatRule rule);

    /// Dimension of the deterministic text-hash embeddings (default 8).
    void set_embed_dimension(std::size_t dim);
    /// Exact per-text override of the deterministic embedding.
    void set_embed_vector(const std::string& text, Embedding vec);
    void set_embed_fail(bool fail) { embed_fail_ = fail; }
    void set_embed_delay(Millis d) { embed_delay_ = d; }

    std::string chat(const ChatRequest& req, const BackendConfig& cfg) override;
    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const BackendConfig& cfg) override;

    std::size_t chat_calls() const;
    std::size_t embed_calls() const;
    std::size_t total_calls() const;
    std::size_t rule_calls(const std::string& needle) const;
    std::vector<ChatRequest> recorded_chats() const;
    void reset_counters();

    /// Deterministic unit-direction embedding derived from the text alone.
    static Embedding hash_embedding(const std::string& text, std::size_t dim);

  private:
    struct RuleState {
        ChatRule rule;
        std::size_t calls = 0;
    };

    mutable std::mutex mu_;
    std::vector<RuleState> rules_;
    std::size_t chat_calls_ = 0;
    std::size_t embed_calls_ = 0;
    std::size_t embed_dim_ = 8;
    bool embed_fail_ = false;
    Millis embed_delay_{0};
    std::map<std::string, Embedding> embed_overrides_;
    std::vector<ChatRequest> recorded_;
};

// ---------------------------------------------------------------------------
// Gateway: retry with exponential backoff + jitter, embedding normalization.
// ---------------------------------------------------------------------------

struct RetryPolicy {
    Millis base{250};
    double factor = 2.0;
    double jitter = 0.2;  // +/- fraction of the nominal delay
    std::function<void(Millis)> sleeper;  // injectable for tests
};

/// Nominal backoff with jitter applied; attempt is 0-based.
Millis backoff_delay(int attempt, const RetryPolicy& policy, double jitter_unit);

class Gateway {
  public:
    Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig cfg,
            RetryPolicy retry = {});

    /// Raw completion text. Retries transient failures up to
    /// cfg.max_retries times, then throws BackendUnavailableError.
    std::string chat_complete(const ChatRequest& req);

    /// One L2-normalized vector per input, all the same dimension.
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);

    const BackendConfig& config() const { return cfg_; }
    ChatBackend& backend() { return *backend_; }

  private:
    template <typename Fn>
    auto with_retry(Fn&& fn) -> decltype(fn());

    std::shared_ptr<ChatBackend> backend_;
    BackendConfig cfg_;
    RetryPolicy retry_;
};

}  // namespace faqmap::gateway
