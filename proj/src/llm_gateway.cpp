// CPPHTTPLIB_OPENSSL_SUPPORT arrives on the command line (PUBLIC on this
// target) so every translation unit sees one httplib configuration.
#include "cochain/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cochain/errors.hpp"
#include "cochain/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cochain {

using nlohmann::json;

UsageRecord& UsageRecord::operator+=(const UsageRecord& other) {
    call_count += other.call_count;
    total_input_tokens += other.total_input_tokens;
    total_output_tokens += other.total_output_tokens;
    total_wall_ms += other.total_wall_ms;
    total_cost += other.total_cost;
    return *this;
}

UsageRecord UsageRecord::operator-(const UsageRecord& other) const {
    UsageRecord d;
    d.call_count = call_count - other.call_count;
    d.total_input_tokens = total_input_tokens - other.total_input_tokens;
    d.total_output_tokens = total_output_tokens - other.total_output_tokens;
    d.total_wall_ms = total_wall_ms - other.total_wall_ms;
    d.total_cost = total_cost - other.total_cost;
    return d;
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open script file: " + path);
    return from_stream(in);
}

ScriptedBackend ScriptedBackend::from_stream(std::istream& in) {
    ScriptedBackend b;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = text::trim(line);
        if (t.empty()) continue;
        json j;
        try {
            j = json::parse(t);
        } catch (const json::exception& e) {
            throw IoError("bad script line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("fingerprint") || !j.contains("text")) {
            throw IoError("script line " + std::to_string(line_no) +
                          " lacks fingerprint or text");
        }
        b.add_entry(j["fingerprint"].get<std::string>(), j["text"].get<std::string>(),
                    j.value("input_tokens", -1L), j.value("output_tokens", -1L));
    }
    return b;
}

void ScriptedBackend::add_entry(const std::string& fingerprint, const std::string& text,
                                long input_tokens, long output_tokens) {
    entries_[fingerprint] = Entry{text, input_tokens, output_tokens};
}

void ScriptedBackend::add_response(const std::string& model_id, const std::string& system_text,
                                   const std::string& user_text, const std::string& text,
                                   long input_tokens, long output_tokens) {
    add_entry(text::fingerprint(model_id, system_text, user_text), text, input_tokens,
              output_tokens);
}

void ScriptedBackend::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write script file: " + path);
    for (const auto& [fp, e] : entries_) {
        json j;
        j["fingerprint"] = fp;
        j["text"] = e.text;
        if (e.input_tokens >= 0) j["input_tokens"] = e.input_tokens;
        if (e.output_tokens >= 0) j["output_tokens"] = e.output_tokens;
        out << j.dump() << '\n';
    }
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::string fp = text::fingerprint(request.model_id, request.system_text, request.user_text);
    auto it = entries_.find(fp);
    if (it == entries_.end()) throw ScriptMissError(fp);
    ChatResponse r;
    r.text = it->second.text;
    r.input_tokens = it->second.input_tokens;
    r.output_tokens = it->second.output_tokens;
    r.latency_ms = 0;
    return r;
}

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
    const std::string& url = options_.base_url;
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("base_url needs a scheme: " + url);
    }
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = url;
    } else {
        host_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    auto started = std::chrono::steady_clock::now();

    json body;
    body["model"] = request.model_id;
    json messages = json::array();
    if (!request.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    body["messages"] = messages;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    const char* key = std::getenv("COCHAIN_API_KEY");
    if (key != nullptr && key[0] != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout_sec, 0);
    client.set_read_timeout(options_.timeout_sec, 0);

    const std::string path = path_prefix_ + "/chat/completions";
    std::string last_failure;
    for (int attempt = 0; attempt <= options_.retry_limit; ++attempt) {
        if (attempt > 0 && options_.backoff_base_ms > 0) {
            long delay = options_.backoff_base_ms << std::min(attempt - 1, 20);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        int status = res->status;
        if (status == 429 || (status >= 500 && status < 600)) {
            last_failure = "status " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw BackendUnavailableError("chat endpoint returned status " +
                                          std::to_string(status));
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw BackendUnavailableError(std::string("unparseable chat reply: ") + e.what());
        }
        if (!reply.contains("choices") || reply["choices"].empty()) {
            throw BackendUnavailableError("chat reply has no choices");
        }
        ChatResponse out;
        out.text = reply["choices"][0]["message"]["content"].get<std::string>();
        if (reply.contains("usage")) {
            out.input_tokens = reply["usage"].value("prompt_tokens", -1L);
            out.output_tokens = reply["usage"].value("completion_tokens", -1L);
        }
        auto ended = std::chrono::steady_clock::now();
        out.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(ended - started).count();
        return out;
    }
    throw BackendUnavailableError("chat endpoint failed after " +
                                  std::to_string(options_.retry_limit + 1) +
                                  " attempts; last: " + last_failure);
}

ChatResponse Gateway::complete(const ChatRequest& request, Backend& backend) {
    if (text::trim(request.user_text).empty()) {
        throw ValidationError("chat request has empty user_text");
    }
    if (request.max_output_tokens < 1) {
        throw ValidationError("chat request needs max_output_tokens >= 1");
    }
    const long estimated_input =
        text::count_tokens(request.system_text) + text::count_tokens(request.user_text);
    {
        std::lock_guard lock(mutex_);
        if (token_ceiling_ > 0) {
            long projected = usage_.total_input_tokens + usage_.total_output_tokens +
                             estimated_input + request.max_output_tokens;
            if (projected > token_ceiling_) {
                throw BudgetExceededError(
                    "call would project " + std::to_string(projected) +
                    " cumulative tokens past ceiling " + std::to_string(token_ceiling_));
            }
        }
    }

    ChatResponse response = backend.complete(request);
    if (response.input_tokens < 0) response.input_tokens = estimated_input;
    if (response.output_tokens < 0) response.output_tokens = text::count_tokens(response.text);

    {
        std::lock_guard lock(mutex_);
        usage_.call_count += 1;
        usage_.total_input_tokens += response.input_tokens;
        usage_.total_output_tokens += response.output_tokens;
        usage_.total_wall_ms += response.latency_ms;
        auto it = rates_.find(request.model_id);
        if (it != rates_.end()) {
            usage_.total_cost +=
                static_cast<double>(response.input_tokens) * it->second.input_per_token +
                static_cast<double>(response.output_tokens) * it->second.output_per_token;
        }
    }
    return response;
}

void Gateway::set_rates(const std::string& model_id, ModelRates rates) {
    std::lock_guard lock(mutex_);
    rates_[model_id] = rates;
}

void Gateway::set_token_ceiling(long ceiling) {
    std::lock_guard lock(mutex_);
    token_ceiling_ = ceiling;
}

UsageRecord Gateway::usage_report() const {
    std::lock_guard lock(mutex_);
    return usage_;
}

std::string ask(Gateway& gateway, const BoundBackend& bound, const std::string& system_text,
                const std::string& user_text) {
    ChatRequest req;
    req.model_id = bound.model_id;
    req.system_text = system_text;
    req.user_text = user_text;
    req.temperature = bound.temperature;
    req.max_output_tokens = bound.max_output_tokens;
    return gateway.complete(req, *bound.backend).text;
}

}  // namespace cochain
