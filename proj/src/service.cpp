#include "faqmap/service.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "faqmap/log.hpp"

namespace faqmap::service {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

std::unique_ptr<httplib::Server> make_server(pipeline::Pipeline& pipe,
                                             int max_concurrency) {
    auto server = std::make_unique<httplib::Server>();
    server->new_task_queue = [max_concurrency] {
        return new httplib::ThreadPool(static_cast<std::size_t>(max_concurrency));
    };

    server->Get("/health", [&pipe](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200,
                   json{{"status", "ok"}, {"corpus_size", pipe.corpus().size()}});
    });

    server->Post("/annotate", [&pipe](const httplib::Request& req,
                                      httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("utterance") ||
            !body.at("utterance").is_string()) {
            reply_json(res, 400, json{{"error", "body must be {\"utterance\": text}"}});
            return;
        }
        const auto start = std::chrono::steady_clock::now();
        try {
            pipeline::AnnotationResult result =
                pipe.annotate(body.at("utterance").get<std::string>());
            json out = pipeline::verdict_to_json(result.verdict, pipe.corpus());
            out["cache_hit"] = result.cache_hit;
            out["latency_ms"] = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
            reply_json(res, 200, out);
        } catch (const EmptyUtteranceError& e) {
            reply_json(res, 400, json{{"error", e.what()}});
        } catch (const BackendUnavailableError& e) {
            reply_json(res, 503, json{{"error", e.what()}});
        } catch (const MissingReplayEntryError& e) {
            reply_json(res, 503, json{{"error", e.what()}});
        } catch (const NoCandidatesError& e) {
            reply_json(res, 404, json{{"error", e.what()}});
        } catch (const std::exception& e) {
            log::warn(std::string("annotate request failed: ") + e.what());
            reply_json(res, 500, json{{"error", e.what()}});
        }
    });

    return server;
}

}  // namespace faqmap::service
