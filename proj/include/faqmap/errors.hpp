#pragma once

#include <stdexcept>
#include <string>

namespace faqmap {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- corpus / query validation ----

struct DuplicateIdError : Error {
    std::string id;
    explicit DuplicateIdError(std::string id_)
        : Error("duplicate FAQ id: " + id_), id(std::move(id_)) {}
};

struct EmptyQuestionError : Error {
    std::size_t index;
    explicit EmptyQuestionError(std::size_t i)
        : Error("empty question at entry " + std::to_string(i)), index(i) {}
};

struct EmptyCorpusError : Error {
    EmptyCorpusError() : Error("FAQ corpus is empty") {}
};

struct EmptyUtteranceError : Error {
    EmptyUtteranceError() : Error("utterance is empty after normalization") {}
};

struct UnknownFaqIdError : Error {
    std::string id;
    explicit UnknownFaqIdError(std::string id_)
        : Error("unknown FAQ id: " + id_), id(std::move(id_)) {}
};

// ---- gateway ----

// Retryable transport failure (connection refused, 429/5xx, timeout).
struct TransientError : Error {
    using Error::Error;
};

struct TimeoutError : TransientError {
    explicit TimeoutError(const std::string& what) : TransientError(what) {}
};

// Raised once retries are exhausted.
struct BackendUnavailableError : Error {
    explicit BackendUnavailableError(const std::string& what) : Error(what) {}
};

struct MissingReplayEntryError : Error {
    std::string digest;
    explicit MissingReplayEntryError(std::string d)
        : Error("no replay entry for digest " + d), digest(std::move(d)) {}
};

struct NoMatchError : Error {
    explicit NoMatchError(const std::string& request_excerpt)
        : Error("no scripted response matches request: " + request_excerpt) {}
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

// ---- prompting ----

struct UnparseableError : Error {
    std::string raw;
    explicit UnparseableError(std::string raw_)
        : Error("response is not parseable JSON"), raw(std::move(raw_)) {}
};

struct SchemaViolationError : Error {
    std::string field;
    explicit SchemaViolationError(std::string field_)
        : Error("schema violation: " + field_), field(std::move(field_)) {}
};

struct UnknownFaqTitleError : Error {
    std::string title;
    explicit UnknownFaqTitleError(std::string t)
        : Error("no FAQ title could be resolved (first: " + t + ")"), title(std::move(t)) {}
};

struct PromptTooLargeError : Error {
    std::size_t size;
    std::size_t budget;
    PromptTooLargeError(std::size_t s, std::size_t b)
        : Error("prompt of " + std::to_string(s) + " chars exceeds budget of " +
                std::to_string(b)),
          size(s), budget(b) {}
};

// ---- agents / judge / pipeline ----

struct InsufficientTrainingError : Error {
    InsufficientTrainingError(std::size_t have, std::size_t need)
        : Error("need " + std::to_string(need) + " training examples, have " +
                std::to_string(have)) {}
};

struct AgentFailedError : Error {
    std::string agent;
    bool transport;  // cause was backend unavailability, not content
    AgentFailedError(std::string agent_, const std::string& cause,
                     bool transport_ = false)
        : Error("agent " + agent_ + " failed: " + cause),
          agent(std::move(agent_)),
          transport(transport_) {}
};

struct JudgeFailedError : Error {
    explicit JudgeFailedError(const std::string& cause)
        : Error("judge failed: " + cause) {}
};

struct NoCandidatesError : Error {
    NoCandidatesError() : Error("no agent produced any candidate") {}
};

// ---- evalkit ----

struct EmptyRunsError : Error {
    EmptyRunsError() : Error("metric computed over zero runs") {}
};

struct EmptyInputError : Error {
    EmptyInputError() : Error("dataset adapter received no rows") {}
};

struct DanglingLinkError : Error {
    std::string id;
    explicit DanglingLinkError(std::string id_)
        : Error("relevance link references unknown id: " + id_), id(std::move(id_)) {}
};

struct ParseError : Error {
    std::size_t line;
    ParseError(std::size_t line_, const std::string& what)
        : Error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

// ---- configuration ----

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace faqmap
