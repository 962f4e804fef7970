#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "faqmap/gateway.hpp"
#include "support.hpp"

// HttpBackend against an in-process server speaking the vendor wire format.

using namespace faqmap;
using nlohmann::json;

namespace {

struct MockApi {
    httplib::Server server;
    int port = 0;
    std::thread thread;
    std::atomic<int> chat_hits{0};
    std::atomic<int> fail_next{0};  // respond 500 this many times
    json last_chat_body;
    std::string last_auth;

    MockApi() {
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        ++chat_hits;
                        last_auth = req.get_header_value("Authorization");
                        last_chat_body = json::parse(req.body);
                        if (fail_next > 0) {
                            --fail_next;
                            res.status = 500;
                            res.set_content("{\"error\": \"scripted outage\"}",
                                            "application/json");
                            return;
                        }
                        json reply{
                            {"choices",
                             json::array({json{{"message",
                                                json{{"role", "assistant"},
                                                     {"content", "mock completion"}}}}})}};
                        res.set_content(reply.dump(), "application/json");
                    });
        server.Post("/v1/embeddings",
                    [](const httplib::Request& req, httplib::Response& res) {
                        json body = json::parse(req.body);
                        json data = json::array();
                        const auto& inputs = body.at("input");
                        // deliberately reply in reverse order; the client must
                        // reassemble by index
                        for (std::size_t i = inputs.size(); i-- > 0;) {
                            data.push_back(json{
                                {"index", i},
                                {"embedding", json::array({1.0 + static_cast<double>(i),
                                                           2.0, 2.0})}});
                        }
                        res.set_content(json{{"data", data}}.dump(),
                                        "application/json");
                    });
        server.Post("/v1/unauthorized", [](const httplib::Request&, httplib::Response&) {});
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~MockApi() {
        server.stop();
        thread.join();
    }

    gateway::BackendConfig config(int max_retries = 0) const {
        gateway::BackendConfig cfg;
        cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.api_key_env_name = "FAQMAP_TEST_KEY";
        cfg.chat_model_name = "mock-chat";
        cfg.embed_model_name = "mock-embed";
        cfg.max_retries = max_retries;
        cfg.timeout = gateway::Millis{5000};
        return cfg;
    }
};

gateway::RetryPolicy no_sleep() {
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    return policy;
}

}  // namespace

TEST_CASE("chat completion round-trips the vendor body shape") {
    MockApi api;
    ::setenv("FAQMAP_TEST_KEY", "sk-test-123", 1);
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), api.config(),
                        no_sleep());

    gateway::ChatRequest req{"system text", "user text", 0.3, true};
    CHECK(gw.chat_complete(req) == "mock completion");

    CHECK(api.last_auth == "Bearer sk-test-123");
    CHECK(api.last_chat_body.at("model") == "mock-chat");
    CHECK(api.last_chat_body.at("temperature") == 0.3);
    CHECK(api.last_chat_body.at("response_format").at("type") == "json_object");
    const auto& messages = api.last_chat_body.at("messages");
    REQUIRE(messages.size() == 2);
    CHECK(messages.at(0).at("role") == "system");
    CHECK(messages.at(0).at("content") == "system text");
    CHECK(messages.at(1).at("role") == "user");

    gateway::ChatRequest plain{"s", "u", 0.1, false};
    gw.chat_complete(plain);
    CHECK(!api.last_chat_body.contains("response_format"));
    ::unsetenv("FAQMAP_TEST_KEY");
}

TEST_CASE("embeddings reassemble by index and normalize") {
    MockApi api;
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), api.config(),
                        no_sleep());
    auto vectors = gw.embed_batch({"first", "second"});
    REQUIRE(vectors.size() == 2);
    // raw vectors are (1,2,2) and (2,2,2); after L2 normalization the first
    // component distinguishes them even though the server replied reversed
    CHECK(vectors[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(vectors[1][0] == doctest::Approx(2.0 / std::sqrt(12.0)).epsilon(1e-6));
}

TEST_CASE("500 responses are transient: retried then surfaced") {
    MockApi api;
    api.fail_next = 2;
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), api.config(3),
                        no_sleep());
    CHECK(gw.chat_complete({"s", "u", 0.1, true}) == "mock completion");
    CHECK(api.chat_hits == 3);  // two failures + one success

    api.fail_next = 10;
    api.chat_hits = 0;
    gateway::Gateway strict(std::make_shared<gateway::HttpBackend>(), api.config(1),
                            no_sleep());
    CHECK_THROWS_AS(strict.chat_complete({"s", "u", 0.1, true}),
                    BackendUnavailableError);
    CHECK(api.chat_hits == 2);  // initial attempt + one retry
}

TEST_CASE("non-2xx non-transient statuses fail immediately") {
    MockApi api;
    auto cfg = api.config(5);
    cfg.endpoint_url += "/unauthorized-prefix-makes-404";
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), cfg, no_sleep());
    int attempts_before = api.chat_hits;
    CHECK_THROWS_AS(gw.chat_complete({"s", "u", 0.1, true}), Error);
    CHECK(api.chat_hits == attempts_before);  // 404 path never reached the handler
}

TEST_CASE("connection refusal exhausts retries as BackendUnavailable") {
    gateway::BackendConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1/v1";  // nothing listens here
    cfg.max_retries = 2;
    cfg.timeout = gateway::Millis{200};
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), cfg, no_sleep());
    CHECK_THROWS_AS(gw.chat_complete({"s", "u", 0.1, true}), BackendUnavailableError);
}

TEST_CASE("malformed endpoint urls are rejected") {
    gateway::BackendConfig cfg;
    cfg.endpoint_url = "no-scheme-here";
    gateway::Gateway gw(std::make_shared<gateway::HttpBackend>(), cfg, no_sleep());
    CHECK_THROWS_AS(gw.chat_complete({"s", "u", 0.1, true}), ConfigError);
}
