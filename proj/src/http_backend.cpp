#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "faqmap/gateway.hpp"

namespace faqmap::gateway {

using nlohmann::json;

namespace {

struct ParsedEndpoint {
    std::string base;         // scheme://host[:port]
    std::string path_prefix;  // e.g. /v1
};

ParsedEndpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint_url must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

bool transient_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

json post_json(const std::string& path, const json& body, const BackendConfig& cfg) {
    ParsedEndpoint ep = split_endpoint(cfg.endpoint_url);
    httplib::Client client(ep.base);
    client.set_connection_timeout(cfg.timeout);
    client.set_read_timeout(cfg.timeout);
    client.set_write_timeout(cfg.timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env_name.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post(ep.path_prefix + path, headers, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw TimeoutError("http timeout on " + path);
        throw TransientError("http error on " + path + ": " + httplib::to_string(err));
    }
    if (res->status != 200) {
        std::string excerpt = res->body.substr(0, 300);
        std::string msg = "HTTP " + std::to_string(res->status) + " on " + path + ": " + excerpt;
        if (transient_status(res->status)) throw TransientError(msg);
        throw Error(msg);
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
        throw Error("backend returned non-JSON body on " + path);
    return parsed;
}

}  // namespace

std::string HttpBackend::chat(const ChatRequest& req, const BackendConfig& cfg) {
    json body{
        {"model", cfg.chat_model_name},
        {"messages",
         json::array({json{{"role", "system"}, {"content", req.system}},
                      json{{"role", "user"}, {"content", req.user}}})},
        {"temperature", req.temperature},
    };
    if (req.force_json) body["response_format"] = json{{"type", "json_object"}};
    json res = post_json("/chat/completions", body, cfg);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(std::string("unexpected chat completion shape: ") + e.what());
    }
}

std::vector<Embedding> HttpBackend::embed(const std::vector<std::string>& texts,
                                          const BackendConfig& cfg) {
    json body{{"model", cfg.embed_model_name}, {"input", texts}};
    json res = post_json("/embeddings", body, cfg);
    std::vector<Embedding> out(texts.size());
    try {
        for (const json& item : res.at("data")) {
            std::size_t idx = item.at("index").get<std::size_t>();
            if (idx >= out.size())
                throw Error("embedding index out of range: " + std::to_string(idx));
            out[idx] = item.at("embedding").get<Embedding>();
        }
    } catch (const json::exception& e) {
        throw Error(std::string("unexpected embeddings shape: ") + e.what());
    }
    return out;
}

}  // namespace faqmap::gateway
