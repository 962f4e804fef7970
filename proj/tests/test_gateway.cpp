#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>
#include <unistd.h>

#include "faqmap/gateway.hpp"
#include "support.hpp"

using namespace faqmap;
using gateway::BackendConfig;
using gateway::ChatRequest;
using gateway::Embedding;
using gateway::Gateway;
using gateway::ScriptedBackend;

namespace {

gateway::RetryPolicy no_sleep() {
    gateway::RetryPolicy policy;
    policy.sleeper = [](gateway::Millis) {};
    return policy;
}

std::string temp_file(const std::string& stem) {
    return (std::filesystem::temp_directory_path() /
            (stem + std::to_string(::getpid()) + ".jsonl"))
        .string();
}

}  // namespace

TEST_CASE("scripted backend returns canned responses and counts invocations") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_chat_rule({"utterance:lost deb", {"fixture-a"}});
    backend->add_chat_rule({"utterance:sba", {"fixture-b"}});
    Gateway gw(backend, BackendConfig{}, no_sleep());

    ChatRequest req{"system text", "utterance:lost deb", 0.1, true};
    CHECK(gw.chat_complete(req) == "fixture-a");
    CHECK(gw.chat_complete(req) == "fixture-a");
    CHECK(backend->rule_calls("utterance:lost deb") == 2);
    CHECK(backend->rule_calls("utterance:sba") == 0);
    CHECK(backend->chat_calls() == 2);

    ChatRequest miss{"system text", "nothing matches this", 0.1, true};
    CHECK_THROWS_AS(gw.chat_complete(miss), NoMatchError);
}

TEST_CASE("overlapping scripted matchers are rejected at match time") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_chat_rule({"needle one", {"a"}});
    backend->add_chat_rule({"needle", {"b"}});  // prefix of the first
    Gateway gw(backend, BackendConfig{}, no_sleep());
    CHECK_THROWS_AS(gw.chat_complete({"s", "text with needle one inside", 0.1, true}),
                    Error);
    // a request matching only one rule still works
    CHECK(gw.chat_complete({"s", "just the short needle", 0.1, true}) == "b");
}

TEST_CASE("scripted backend records concurrent invocations") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_chat_rule({"ping", {"pong"}});
    Gateway gw(backend, BackendConfig{}, no_sleep());
    std::thread a([&] { gw.chat_complete({"s", "ping 1", 0.1, true}); });
    std::thread b([&] { gw.chat_complete({"s", "ping 2", 0.1, true}); });
    a.join();
    b.join();
    CHECK(backend->rule_calls("ping") == 2);
    CHECK(backend->recorded_chats().size() == 2);
}

TEST_CASE("retry performs min(failures, max_retries)+1 attempts") {
    for (std::size_t failures : {0u, 1u, 2u, 3u, 5u}) {
        for (int max_retries : {0, 1, 2, 3}) {
            auto backend = std::make_shared<ScriptedBackend>();
            backend->add_chat_rule({"go", {"ok"}, failures});
            BackendConfig cfg;
            cfg.max_retries = max_retries;
            Gateway gw(backend, cfg, no_sleep());
            const std::size_t expected =
                std::min<std::size_t>(failures, static_cast<std::size_t>(max_retries)) +
                1;
            if (failures <= static_cast<std::size_t>(max_retries)) {
                CHECK(gw.chat_complete({"s", "go", 0.1, true}) == "ok");
            } else {
                CHECK_THROWS_AS(gw.chat_complete({"s", "go", 0.1, true}),
                                BackendUnavailableError);
            }
            CHECK(backend->rule_calls("go") == expected);
        }
    }
}

TEST_CASE("permanent scripted failures are not retried") {
    auto backend = std::make_shared<ScriptedBackend>();
    ScriptedBackend::ChatRule rule{"go", {"never"}};
    rule.permanent_fail = true;
    backend->add_chat_rule(rule);
    BackendConfig cfg;
    cfg.max_retries = 5;
    Gateway gw(backend, cfg, no_sleep());
    CHECK_THROWS_AS(gw.chat_complete({"s", "go", 0.1, true}), Error);
    CHECK(backend->rule_calls("go") == 1);
}

TEST_CASE("backoff schedule: base 250ms, factor 2, jitter within 20 percent") {
    gateway::RetryPolicy policy;
    CHECK(gateway::backoff_delay(0, policy, 0.0).count() == 250);
    CHECK(gateway::backoff_delay(1, policy, 0.0).count() == 500);
    CHECK(gateway::backoff_delay(2, policy, 0.0).count() == 1000);
    CHECK(gateway::backoff_delay(0, policy, 1.0).count() == 300);
    CHECK(gateway::backoff_delay(0, policy, -1.0).count() == 200);
    CHECK(gateway::backoff_delay(1, policy, -1.0).count() == 400);
    CHECK(gateway::backoff_delay(1, policy, 1.0).count() == 600);
}

TEST_CASE("chat request validation") {
    auto backend = std::make_shared<ScriptedBackend>();
    Gateway gw(backend, BackendConfig{}, no_sleep());
    CHECK_THROWS_AS(gw.chat_complete({"", "user", 0.1, true}), std::invalid_argument);
    CHECK_THROWS_AS(gw.chat_complete({"system", "", 0.1, true}), std::invalid_argument);
    CHECK_THROWS_AS(gw.chat_complete({"s", "u", 2.5, true}), std::invalid_argument);
}

TEST_CASE("embed_batch normalizes to unit length") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->set_embed_vector("a", {3.0f, 4.0f});
    backend->set_embed_dimension(2);
    Gateway gw(backend, BackendConfig{}, no_sleep());

    auto out = gw.embed_batch({"a"});
    REQUIRE(out.size() == 1);
    CHECK(out[0][0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(out[0][1] == doctest::Approx(0.8).epsilon(1e-6));

    auto two = gw.embed_batch({"a", "b"});
    REQUIRE(two.size() == 2);
    CHECK(two[0].size() == two[1].size());

    CHECK_THROWS_AS(gw.embed_batch({}), std::invalid_argument);
}

TEST_CASE("embed_batch unit-norm invariant over random texts") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->set_embed_dimension(16);
    Gateway gw(backend, BackendConfig{}, no_sleep());
    std::vector<std::string> texts;
    for (int i = 0; i < 50; ++i) texts.push_back("text " + std::to_string(i));
    for (const Embedding& v : gw.embed_batch(texts)) {
        double norm = 0.0;
        for (float x : v) norm += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
    }
}

TEST_CASE("ragged embedding dimensions are rejected") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->set_embed_dimension(3);
    backend->set_embed_vector("short", {1.0f, 2.0f});
    Gateway gw(backend, BackendConfig{}, no_sleep());
    CHECK_THROWS_AS(gw.embed_batch({"regular", "short"}), DimensionMismatchError);
}

TEST_CASE("digests are deterministic and input-sensitive") {
    ChatRequest a{"sys", "user", 0.1, true};
    ChatRequest b{"sys", "user", 0.1, true};
    ChatRequest c{"sys", "user", 0.3, true};
    CHECK(gateway::chat_digest(a) == gateway::chat_digest(b));
    CHECK(gateway::chat_digest(a) != gateway::chat_digest(c));
    CHECK(gateway::embed_digest("x") == gateway::embed_digest("x"));
    CHECK(gateway::embed_digest("x") != gateway::embed_digest("y"));
    CHECK(gateway::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("replay store round-trips and misses loudly") {
    const std::string path = temp_file("faqmap_replay_");
    ChatRequest req{"sys", "user text", 0.1, true};
    {
        gateway::ReplayStore store;
        store.put_chat(gateway::chat_digest(req), "recorded reply");
        store.put_embed(gateway::embed_digest("t"), {0.1f, 0.2f});
        store.save(path);
    }
    auto loaded = std::make_shared<gateway::ReplayStore>(gateway::ReplayStore::load(path));
    CHECK(loaded->size() == 2);
    Gateway gw(std::make_shared<gateway::ReplayBackend>(loaded), BackendConfig{},
               no_sleep());
    CHECK(gw.chat_complete(req) == "recorded reply");
    CHECK(gw.chat_complete(req) == "recorded reply");  // byte-identical
    ChatRequest other{"sys", "unseen", 0.1, true};
    CHECK_THROWS_AS(gw.chat_complete(other), MissingReplayEntryError);
    std::filesystem::remove(path);
}

TEST_CASE("recording backend captures traffic for later replay") {
    const std::string path = temp_file("faqmap_record_");
    auto scripted = std::make_shared<ScriptedBackend>();
    scripted->add_chat_rule({"hello", {"canned"}});
    scripted->set_embed_dimension(4);
    auto store = std::make_shared<gateway::ReplayStore>();
    auto recorder =
        std::make_shared<gateway::RecordingBackend>(scripted, store, path);
    Gateway live(recorder, BackendConfig{}, no_sleep());

    ChatRequest req{"sys", "hello there", 0.1, true};
    CHECK(live.chat_complete(req) == "canned");
    auto vecs = live.embed_batch({"alpha", "beta"});

    auto reloaded =
        std::make_shared<gateway::ReplayStore>(gateway::ReplayStore::load(path));
    Gateway replay(std::make_shared<gateway::ReplayBackend>(reloaded), BackendConfig{},
                   no_sleep());
    CHECK(replay.chat_complete(req) == "canned");
    CHECK(replay.embed_batch({"alpha", "beta"}) == vecs);
    std::filesystem::remove(path);
}
