#ifdef COCHAIN_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "cochain/embedder.hpp"

#include <cmath>
#include <cstdlib>

#include "cochain/errors.hpp"
#include "cochain/text.hpp"
#include "cochain/vecops.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cochain {

using nlohmann::json;

FeatureHashEncoder::FeatureHashEncoder(int dim) : dim_(dim) {
    if (dim < 1) throw ValidationError("encoder dim must be >= 1");
}

EmbeddingVector FeatureHashEncoder::encode(const std::string& text) {
    std::vector<std::string> tokens = text::alnum_tokens(text);
    if (tokens.empty()) {
        std::string whole = text::canonicalize(text);
        if (whole.empty()) throw ValidationError("cannot encode empty text");
        tokens.push_back(std::move(whole));
    }
    EmbeddingVector v;
    v.values.assign(static_cast<size_t>(dim_), 0.0f);
    for (const std::string& tok : tokens) {
        size_t idx = static_cast<size_t>(text::fnv1a64(tok) % static_cast<uint64_t>(dim_));
        v.values[idx] += 1.0f;
    }
    double norm = std::sqrt(vecops::norm_sq(v.values.data(), v.values.size()));
    for (float& x : v.values) x = static_cast<float>(x / norm);
    return v;
}

RemoteEncoder::RemoteEncoder(std::string url, std::string model_id, int dim, int timeout_sec)
    : url_(std::move(url)), model_id_(std::move(model_id)), dim_(dim), timeout_sec_(timeout_sec) {
    if (dim < 1) throw ValidationError("encoder dim must be >= 1");
}

EmbeddingVector RemoteEncoder::encode(const std::string& text) {
    if (text::trim(text).empty()) throw ValidationError("cannot encode empty text");

    size_t scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) {
        throw EncoderUnavailableError("embedding url needs a scheme: " + url_);
    }
    size_t path_start = url_.find('/', scheme_end + 3);
    std::string host = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

    json body;
    body["model"] = model_id_;
    body["input"] = text;

    httplib::Client client(host);
    client.set_connection_timeout(timeout_sec_, 0);
    client.set_read_timeout(timeout_sec_, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv("COCHAIN_API_KEY"); key != nullptr && key[0] != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw EncoderUnavailableError("embedding endpoint unreachable: " +
                                      httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw EncoderUnavailableError("embedding endpoint returned status " +
                                      std::to_string(res->status));
    }
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception& e) {
        throw EncoderUnavailableError(std::string("unparseable embedding reply: ") + e.what());
    }

    const json* vec = nullptr;
    if (reply.is_array() && !reply.empty() && reply[0].is_array()) {
        vec = &reply[0];
    } else if (reply.is_array()) {
        vec = &reply;
    } else if (reply.is_object() && reply.contains("data") && reply["data"].is_array() &&
               !reply["data"].empty() && reply["data"][0].contains("embedding")) {
        vec = &reply["data"][0]["embedding"];
    }
    if (vec == nullptr || !vec->is_array()) {
        throw EncoderUnavailableError("embedding reply has no vector");
    }
    EmbeddingVector out;
    out.values.reserve(vec->size());
    for (const auto& x : *vec) out.values.push_back(x.get<float>());
    if (out.dim() != dim_) {
        throw EncoderUnavailableError("embedding dim " + std::to_string(out.dim()) +
                                      " does not match configured " + std::to_string(dim_));
    }
    return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimMismatchError("cosine over dims " + std::to_string(a.dim()) + " and " +
                               std::to_string(b.dim()));
    }
    double na = vecops::norm_sq(a.values.data(), a.values.size());
    double nb = vecops::norm_sq(b.values.data(), b.values.size());
    if (na == 0.0 || nb == 0.0) throw ZeroVectorError("cosine against zero-norm vector");
    double d = vecops::dot(a.values.data(), b.values.data(), a.values.size());
    return d / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace cochain
