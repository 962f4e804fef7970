#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>

#include "faqmap/gateway.hpp"

namespace faqmap::gateway {

namespace {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

void ScriptedBackend::add_chat_rule(ChatRule rule) {
    std::lock_guard<std::mutex> lock(mu_);
    rules_.push_back(RuleState{std::move(rule), 0});
}

void ScriptedBackend::set_embed_dimension(std::size_t dim) {
    std::lock_guard<std::mutex> lock(mu_);
    embed_dim_ = dim;
}

void ScriptedBackend::set_embed_vector(const std::string& text, Embedding vec) {
    std::lock_guard<std::mutex> lock(mu_);
    embed_overrides_[text] = std::move(vec);
}

Embedding ScriptedBackend::hash_embedding(const std::string& text, std::size_t dim) {
    std::mt19937_64 rng{fnv1a64(text)};
    Embedding v(dim);
    for (float& x : v) {
        // uniform in [-0.5, 0.5) straight from engine output; distribution
        // classes are not bit-stable across standard libraries
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        x = static_cast<float>(u - 0.5);
    }
    return v;
}

std::string ScriptedBackend::chat(const ChatRequest& req, const BackendConfig&) {
    const std::string haystack = req.system + "\n" + req.user;
    Millis delay{0};
    std::string response;
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++chat_calls_;
        recorded_.push_back(req);
        RuleState* match = nullptr;
        for (RuleState& rs : rules_) {
            if (haystack.find(rs.rule.needle) == std::string::npos) continue;
            if (match)
                throw Error("scripted matchers are not disjoint: \"" +
                            match->rule.needle + "\" and \"" + rs.rule.needle + "\"");
            match = &rs;
        }
        if (!match) {
            std::string excerpt = req.user.substr(0, 120);
            throw NoMatchError(excerpt);
        }
        const std::size_t n = match->calls++;
        delay = match->rule.delay;
        if (match->rule.permanent_fail)
            throw Error("scripted permanent failure for \"" + match->rule.needle + "\"");
        if (n < match->rule.fail_first)
            throw TransientError("scripted transient failure " + std::to_string(n + 1) +
                                 " for \"" + match->rule.needle + "\"");
        if (match->rule.responses.empty())
            throw Error("scripted rule has no responses: \"" + match->rule.needle + "\"");
        const std::size_t idx =
            std::min(n - match->rule.fail_first, match->rule.responses.size() - 1);
        response = match->rule.responses[idx];
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    return response;
}

std::vector<Embedding> ScriptedBackend::embed(const std::vector<std::string>& texts,
                                              const BackendConfig&) {
    Millis delay{0};
    std::vector<Embedding> out;
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++embed_calls_;
        if (embed_fail_) throw TransientError("scripted embedding failure");
        delay = embed_delay_;
        out.reserve(texts.size());
        for (const std::string& text : texts) {
            auto it = embed_overrides_.find(text);
            out.push_back(it != embed_overrides_.end() ? it->second
                                                       : hash_embedding(text, embed_dim_));
        }
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    return out;
}

std::size_t ScriptedBackend::chat_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return chat_calls_;
}

std::size_t ScriptedBackend::embed_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return embed_calls_;
}

std::size_t ScriptedBackend::total_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return chat_calls_ + embed_calls_;
}

std::size_t ScriptedBackend::rule_calls(const std::string& needle) const {
    std::lock_guard<std::mutex> lock(mu_);
    for (const RuleState& rs : rules_)
        if (rs.rule.needle == needle) return rs.calls;
    return 0;
}

std::vector<ChatRequest> ScriptedBackend::recorded_chats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return recorded_;
}

void ScriptedBackend::reset_counters() {
    std::lock_guard<std::mutex> lock(mu_);
    chat_calls_ = 0;
    embed_calls_ = 0;
    recorded_.clear();
    for (RuleState& rs : rules_) rs.calls = 0;
}

}  // namespace faqmap::gateway
