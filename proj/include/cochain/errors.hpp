#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cochain {

// All failures surface as exceptions derived from Error so callers can
// distinguish engine faults from plain std::runtime_error thrown elsewhere.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument handed to an operation (empty text, non-positive knob, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Configuration file missing a field or holding an out-of-range value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem problem: unreadable corpus, unwritable artifact directory.
class IoError : public Error {
public:
    using Error::Error;
};

// Embedding vectors of different dimensionality were combined.
class DimMismatchError : public Error {
public:
    using Error::Error;
};

// Cosine similarity against a zero-norm vector.
class ZeroVectorError : public Error {
public:
    using Error::Error;
};

// Scripted backend has no entry for the request fingerprint.
class ScriptMissError : public Error {
public:
    explicit ScriptMissError(const std::string& fp)
        : Error("no scripted response for request fingerprint " + fp), fingerprint(fp) {}
    std::string fingerprint;
};

// Remote backend unreachable or returned a non-retryable failure.
class BackendUnavailableError : public Error {
public:
    using Error::Error;
};

// A call would push cumulative token usage past the configured ceiling.
class BudgetExceededError : public Error {
public:
    using Error::Error;
};

// Counterfactual refinement hit max_rounds without a reasonable verdict.
class RefinementExhaustedError : public Error {
public:
    RefinementExhaustedError(const std::string& msg, std::string answer, std::string instruction)
        : Error(msg), last_answer(std::move(answer)), last_instruction(std::move(instruction)) {}
    std::string last_answer;
    std::string last_instruction;
};

// Prompt distillation produced zero parseable candidates.
class DistillationEmptyError : public Error {
public:
    using Error::Error;
};

// Prompts tree has no stage nodes to retrieve from.
class TreeEmptyError : public Error {
public:
    using Error::Error;
};

// Stage exclusion removed every stage node from a retrieved chain.
class AllStagesExcludedError : public Error {
public:
    using Error::Error;
};

// Seed node name not present in the knowledge graph.
class SeedNotInGraphError : public Error {
public:
    using Error::Error;
};

// Token budget smaller than the irreducible prompt skeleton.
class BudgetTooSmallError : public Error {
public:
    using Error::Error;
};

// Remote embedding endpoint unreachable or malformed reply.
class EncoderUnavailableError : public Error {
public:
    using Error::Error;
};

}  // namespace cochain
