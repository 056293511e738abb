#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cochain/composer.hpp"
#include "cochain/embedder.hpp"
#include "cochain/knowledge_graph.hpp"
#include "cochain/llm_gateway.hpp"
#include "cochain/workflow_types.hpp"

namespace cochain {

struct BackendConfig {
    std::string kind;  // "scripted" or "http"
    std::string script;
    std::string base_url;
    std::string model_id;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

// One JSON file configures a run. Relative paths resolve against the config
// file's directory. Credentials never appear here; the HTTP backends read
// their bearer token from the COCHAIN_API_KEY environment variable.
struct RunConfig {
    std::vector<StageLabel> stages;  // order = array index

    std::string encoder_kind = "feature_hash";  // or "remote"
    int encoder_dim = 256;
    std::string encoder_url;
    std::string encoder_model;

    BackendConfig extractor;
    BackendConfig evaluator;
    BackendConfig backbone;
    std::optional<BackendConfig> keyword;
    std::map<std::string, BackendConfig> agents;  // keyed by stage id

    double delta = 0.35;
    int top_n = 5;
    int max_depth = 3;
    size_t max_paths = 20;
    std::string keyword_mode = "heuristic";

    int branching_limit = 3;
    long budget = 1024;

    bool tacit = true;
    bool lenient = true;
    int max_rounds = 5;
    std::string variant = "auto";

    int retry_limit = 2;
    int backoff_ms = 100;
    long token_ceiling = 0;
    std::map<std::string, ModelRates> rates;

    std::string corpus_path;
    std::string seed_path;
    std::string graph_dir = "artifacts/graph";
    std::string tree_path = "artifacts/tree.jsonl";
    std::string usage_log = "artifacts/usage.jsonl";
};

RunConfig load_config(const std::string& path);

// Instantiated backends bound to their per-role request knobs. The owned
// vector keeps the backend objects alive.
struct BackendSet {
    std::vector<std::unique_ptr<Backend>> owned;
    BoundBackend extractor;
    BoundBackend evaluator;
    BoundBackend backbone;
    std::optional<BoundBackend> keyword;
    std::map<std::string, BoundBackend> agents;
};

BackendSet make_backends(const RunConfig& config);

std::unique_ptr<Encoder> make_encoder(const RunConfig& config);

void apply_gateway_config(const RunConfig& config, Gateway& gateway);

// Translations from config fields to the option structs the pipeline takes,
// shared by the CLI and by fixture replay so the two cannot drift apart.
QueryOptions query_options_from(const RunConfig& config);
BuildOptions build_options_from(const RunConfig& config);

}  // namespace cochain
