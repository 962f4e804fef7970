#pragma once

#include <memory>

#include "faqmap/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace faqmap::service {

/// JSON-over-HTTP annotation service.
///   POST /annotate {"utterance": text} -> verdict JSON + {cache_hit, latency_ms}
///   GET  /health                       -> {"status", "corpus_size"}
/// 400 on malformed bodies, 503 when the backend is unavailable.
std::unique_ptr<httplib::Server> make_server(pipeline::Pipeline& pipe,
                                             int max_concurrency = 8);

}  // namespace faqmap::service
