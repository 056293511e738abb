#include "cochain/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "cochain/errors.hpp"
#include "json.hpp"

namespace cochain {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

BackendConfig parse_backend(const json& j, const std::string& role, const fs::path& base) {
    if (!j.is_object()) throw ConfigError("backend " + role + " must be an object");
    BackendConfig b;
    b.kind = j.value("kind", std::string());
    b.model_id = j.value("model", std::string());
    b.temperature = j.value("temperature", 0.0);
    b.max_output_tokens = j.value("max_output_tokens", 1024);
    if (b.model_id.empty()) throw ConfigError("backend " + role + " needs a model id");
    if (b.max_output_tokens < 1) {
        throw ConfigError("backend " + role + " needs max_output_tokens >= 1");
    }
    if (b.kind == "scripted") {
        b.script = j.value("script", std::string());
        if (b.script.empty()) throw ConfigError("scripted backend " + role + " needs a script");
        b.script = (base / b.script).lexically_normal().string();
    } else if (b.kind == "http") {
        b.base_url = j.value("base_url", std::string());
        if (b.base_url.empty()) throw ConfigError("http backend " + role + " needs a base_url");
    } else {
        throw ConfigError("backend " + role + " has unknown kind \"" + b.kind + "\"");
    }
    return b;
}

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path candidate(p);
    if (candidate.is_absolute()) return candidate.lexically_normal().string();
    return (base / candidate).lexically_normal().string();
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    const fs::path base = fs::path(path).parent_path();

    RunConfig c;
    if (!j.contains("stages") || !j["stages"].is_array() || j["stages"].empty()) {
        throw ConfigError("config needs a non-empty stages array");
    }
    std::set<std::string> seen_stage;
    int order = 0;
    for (const auto& s : j["stages"]) {
        std::string id = s.get<std::string>();
        if (!seen_stage.insert(id).second) throw ConfigError("duplicate stage id " + id);
        c.stages.push_back({id, order++});
    }

    if (j.contains("encoder")) {
        const json& e = j["encoder"];
        c.encoder_kind = e.value("kind", std::string("feature_hash"));
        c.encoder_dim = e.value("dim", 256);
        c.encoder_url = e.value("url", std::string());
        c.encoder_model = e.value("model", std::string());
        if (c.encoder_kind != "feature_hash" && c.encoder_kind != "remote") {
            throw ConfigError("encoder kind must be feature_hash or remote");
        }
        if (c.encoder_dim < 1) throw ConfigError("encoder dim must be >= 1");
        if (c.encoder_kind == "remote" && c.encoder_url.empty()) {
            throw ConfigError("remote encoder needs a url");
        }
    }

    if (!j.contains("backends") || !j["backends"].is_object()) {
        throw ConfigError("config needs a backends object");
    }
    const json& b = j["backends"];
    if (!b.contains("extractor")) throw ConfigError("backends needs an extractor entry");
    if (!b.contains("evaluator")) throw ConfigError("backends needs an evaluator entry");
    if (!b.contains("backbone")) throw ConfigError("backends needs a backbone entry");
    c.extractor = parse_backend(b["extractor"], "extractor", base);
    c.evaluator = parse_backend(b["evaluator"], "evaluator", base);
    c.backbone = parse_backend(b["backbone"], "backbone", base);
    if (b.contains("keyword")) c.keyword = parse_backend(b["keyword"], "keyword", base);
    if (b.contains("agents")) {
        if (!b["agents"].is_object()) throw ConfigError("backends.agents must be an object");
        for (const auto& [stage_id, cfg] : b["agents"].items()) {
            if (!seen_stage.contains(stage_id)) {
                throw ConfigError("agent for unknown stage " + stage_id);
            }
            c.agents[stage_id] = parse_backend(cfg, "agent " + stage_id, base);
        }
    }

    if (j.contains("retrieval")) {
        const json& r = j["retrieval"];
        c.delta = r.value("delta", 0.35);
        c.top_n = r.value("top_n", 5);
        c.max_depth = r.value("max_depth", 3);
        c.max_paths = r.value("max_paths", static_cast<size_t>(20));
        c.keyword_mode = r.value("keyword_mode", std::string("heuristic"));
        if (c.delta < -1.0 || c.delta > 1.0) throw ConfigError("delta must lie in [-1, 1]");
        if (c.top_n < 1) throw ConfigError("top_n must be >= 1");
        if (c.max_depth < 2) throw ConfigError("max_depth must be >= 2");
        if (c.max_paths < 1) throw ConfigError("max_paths must be >= 1");
        if (c.keyword_mode != "heuristic" && c.keyword_mode != "llm") {
            throw ConfigError("keyword_mode must be heuristic or llm");
        }
        if (c.keyword_mode == "llm" && !c.keyword.has_value()) {
            throw ConfigError("llm keyword mode needs a keyword backend");
        }
    }

    if (j.contains("tree")) {
        c.branching_limit = j["tree"].value("m", 3);
        if (c.branching_limit < 1) throw ConfigError("tree m must be >= 1");
    }
    if (j.contains("composer")) {
        c.budget = j["composer"].value("budget", 1024L);
        if (c.budget < 1) throw ConfigError("composer budget must be >= 1");
    }
    if (j.contains("refinement")) {
        c.max_rounds = j["refinement"].value("max_rounds", 5);
        if (c.max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
    }
    if (j.contains("counterfactual")) {
        const json& cf = j["counterfactual"];
        c.tacit = cf.value("tacit", true);
        c.lenient = cf.value("lenient", true);
        c.variant = cf.value("variant", std::string("auto"));
        static const std::set<std::string> variants = {"auto",         "causal", "adversarial",
                                                       "substitution", "extreme",
                                                       "backward_causal"};
        if (!variants.contains(c.variant)) {
            throw ConfigError("unknown counterfactual variant " + c.variant);
        }
    }

    if (j.contains("gateway")) {
        const json& g = j["gateway"];
        c.retry_limit = g.value("retry_limit", 2);
        c.backoff_ms = g.value("backoff_ms", 100);
        c.token_ceiling = g.value("token_ceiling", 0L);
        if (c.retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
        if (c.backoff_ms < 0) throw ConfigError("backoff_ms must be >= 0");
        if (c.token_ceiling < 0) throw ConfigError("token_ceiling must be >= 0");
        if (g.contains("rates")) {
            for (const auto& [model, r] : g["rates"].items()) {
                ModelRates rates;
                rates.input_per_token = r.value("input_per_token", 0.0);
                rates.output_per_token = r.value("output_per_token", 0.0);
                if (rates.input_per_token < 0 || rates.output_per_token < 0) {
                    throw ConfigError("rates for " + model + " must be >= 0");
                }
                c.rates[model] = rates;
            }
        }
    }

    if (j.contains("paths")) {
        const json& p = j["paths"];
        c.corpus_path = resolve(base, p.value("corpus", std::string()));
        c.seed_path = resolve(base, p.value("seed", std::string()));
        c.graph_dir = resolve(base, p.value("graph_dir", std::string("artifacts/graph")));
        c.tree_path = resolve(base, p.value("tree", std::string("artifacts/tree.jsonl")));
        c.usage_log = resolve(base, p.value("usage_log", std::string("artifacts/usage.jsonl")));
    } else {
        c.graph_dir = resolve(base, c.graph_dir);
        c.tree_path = resolve(base, c.tree_path);
        c.usage_log = resolve(base, c.usage_log);
    }
    return c;
}

namespace {

BoundBackend instantiate(const BackendConfig& cfg, const RunConfig& run, BackendSet& set) {
    std::unique_ptr<Backend> backend;
    if (cfg.kind == "scripted") {
        backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(cfg.script));
    } else {
        HttpOptions opts;
        opts.base_url = cfg.base_url;
        opts.retry_limit = run.retry_limit;
        opts.backoff_base_ms = run.backoff_ms;
        backend = std::make_unique<HttpBackend>(opts);
    }
    BoundBackend bound;
    bound.backend = backend.get();
    bound.model_id = cfg.model_id;
    bound.temperature = cfg.temperature;
    bound.max_output_tokens = cfg.max_output_tokens;
    set.owned.push_back(std::move(backend));
    return bound;
}

}  // namespace

BackendSet make_backends(const RunConfig& config) {
    BackendSet set;
    set.extractor = instantiate(config.extractor, config, set);
    set.evaluator = instantiate(config.evaluator, config, set);
    set.backbone = instantiate(config.backbone, config, set);
    if (config.keyword.has_value()) {
        set.keyword = instantiate(config.keyword.value(), config, set);
    }
    for (const auto& [stage_id, cfg] : config.agents) {
        set.agents[stage_id] = instantiate(cfg, config, set);
    }
    return set;
}

std::unique_ptr<Encoder> make_encoder(const RunConfig& config) {
    if (config.encoder_kind == "remote") {
        return std::make_unique<RemoteEncoder>(config.encoder_url, config.encoder_model,
                                               config.encoder_dim);
    }
    return std::make_unique<FeatureHashEncoder>(config.encoder_dim);
}

void apply_gateway_config(const RunConfig& config, Gateway& gateway) {
    gateway.set_token_ceiling(config.token_ceiling);
    for (const auto& [model, rates] : config.rates) gateway.set_rates(model, rates);
}

QueryOptions query_options_from(const RunConfig& config) {
    QueryOptions o;
    o.delta = config.delta;
    o.top_n = config.top_n;
    o.max_depth = config.max_depth;
    o.max_paths = config.max_paths;
    o.budget = config.budget;
    o.keyword_mode =
        config.keyword_mode == "llm" ? KeywordMode::llm : KeywordMode::heuristic;
    return o;
}

BuildOptions build_options_from(const RunConfig& config) {
    BuildOptions o;
    o.tacit_enabled = config.tacit;
    o.lenient = config.lenient;
    o.max_rounds = config.max_rounds;
    if (config.variant != "auto") {
        for (CounterfactualVariant v : kVariantCycle) {
            if (to_string(v) == config.variant) {
                o.variant = v;
                break;
            }
        }
    }
    return o;
}

}  // namespace cochain
