#pragma once

#include <istream>
#include <map>
#include <mutex>
#include <string>

namespace cochain {

struct ChatRequest {
    std::string model_id;
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct ChatResponse {
    std::string text;
    // Token counts as reported by the backend; -1 means not reported, in which
    // case the gateway fills them from the whitespace-split local rule.
    long input_tokens = -1;
    long output_tokens = -1;
    long latency_ms = 0;
};

struct ModelRates {
    double input_per_token = 0.0;
    double output_per_token = 0.0;
};

struct UsageRecord {
    long call_count = 0;
    long total_input_tokens = 0;
    long total_output_tokens = 0;
    long total_wall_ms = 0;
    double total_cost = 0.0;

    UsageRecord& operator+=(const UsageRecord& other);
    UsageRecord operator-(const UsageRecord& other) const;
    bool operator==(const UsageRecord& other) const = default;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Replays canned responses keyed by request fingerprint (model id + system
// text + user text; temperature excluded). Entries load from JSONL lines of
// the form {"fingerprint": "...", "text": "...", "input_tokens": n, "output_tokens": n}
// where the token fields are optional. Unknown fingerprints raise ScriptMissError.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    static ScriptedBackend from_file(const std::string& path);
    static ScriptedBackend from_stream(std::istream& in);

    void add_entry(const std::string& fingerprint, const std::string& text,
                   long input_tokens = -1, long output_tokens = -1);
    // Convenience for fixture builders: fingerprints the request fields itself.
    void add_response(const std::string& model_id, const std::string& system_text,
                      const std::string& user_text, const std::string& text,
                      long input_tokens = -1, long output_tokens = -1);
    void save(const std::string& path) const;
    size_t size() const { return entries_.size(); }

    ChatResponse complete(const ChatRequest& request) override;

private:
    struct Entry {
        std::string text;
        long input_tokens = -1;
        long output_tokens = -1;
    };
    std::map<std::string, Entry> entries_;
};

struct HttpOptions {
    std::string base_url;  // e.g. http://localhost:8080/v1
    int retry_limit = 2;
    int backoff_base_ms = 100;
    int timeout_sec = 30;
};

// Chat-completions client. POSTs to {base_url}/chat/completions with a bearer
// token taken from the COCHAIN_API_KEY environment variable at call time (the
// key never appears in any file). Transport failures, 429, and 5xx retry with
// exponential backoff up to retry_limit extra attempts; other statuses fail
// immediately with BackendUnavailableError.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpOptions options);
    ChatResponse complete(const ChatRequest& request) override;

private:
    HttpOptions options_;
    std::string host_;
    std::string path_prefix_;
};

// Single funnel for every model call: validates requests, enforces the token
// ceiling, and accumulates usage and cost. Thread-safe accounting.
class Gateway {
public:
    Gateway() = default;
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    ChatResponse complete(const ChatRequest& request, Backend& backend);

    void set_rates(const std::string& model_id, ModelRates rates);
    // 0 disables the ceiling. The ceiling bounds cumulative input + output
    // tokens; each call is pre-checked with the local input estimate plus the
    // request's max_output_tokens before the backend is touched.
    void set_token_ceiling(long ceiling);
    UsageRecord usage_report() const;

private:
    mutable std::mutex mutex_;
    UsageRecord usage_;
    std::map<std::string, ModelRates> rates_;
    long token_ceiling_ = 0;
};

// A backend plus the per-role request knobs, so call sites only supply texts.
struct BoundBackend {
    Backend* backend = nullptr;
    std::string model_id;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

std::string ask(Gateway& gateway, const BoundBackend& bound, const std::string& system_text,
                const std::string& user_text);

}  // namespace cochain
