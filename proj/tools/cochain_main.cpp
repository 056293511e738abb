#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cochain/composer.hpp"
#include "cochain/config.hpp"
#include "cochain/errors.hpp"
#include "cochain/eval_metrics.hpp"
#include "cochain/knowledge_graph.hpp"
#include "cochain/prompts_tree.hpp"
#include "cochain/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_parent_dir(const std::string& path) {
    fs::path parent = fs::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) {
        throw cochain::IoError("cannot create directory " + parent.string() + ": " +
                               ec.message());
    }
}

void append_usage(const cochain::RunConfig& config, const std::string& command,
                  const cochain::UsageRecord& usage) {
    if (config.usage_log.empty()) return;
    ensure_parent_dir(config.usage_log);
    std::ofstream out(config.usage_log, std::ios::app);
    if (!out) throw cochain::IoError("cannot append to usage log " + config.usage_log);
    json j;
    j["calls"] = usage.call_count;
    j["command"] = command;
    j["cost"] = usage.total_cost;
    j["input_tokens"] = usage.total_input_tokens;
    j["output_tokens"] = usage.total_output_tokens;
    j["wall_ms"] = usage.total_wall_ms;
    out << j.dump() << '\n';
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            std::string t = cochain::text::trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string t = cochain::text::trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

int cmd_build_kg(const std::string& config_path, bool no_tacit) {
    cochain::RunConfig config = cochain::load_config(config_path);
    if (config.corpus_path.empty()) {
        throw cochain::ConfigError("build-kg needs paths.corpus in the config");
    }
    std::vector<cochain::StageDataset> datasets =
        cochain::load_corpus(config.corpus_path, config.stages);

    cochain::Gateway gateway;
    cochain::apply_gateway_config(config, gateway);
    cochain::BackendSet backends = cochain::make_backends(config);

    cochain::BuildBackends build_backends;
    build_backends.extractor = backends.extractor;
    build_backends.evaluator = backends.evaluator;
    build_backends.agents = backends.agents;

    cochain::BuildOptions options = cochain::build_options_from(config);
    if (no_tacit) options.tacit_enabled = false;

    cochain::BuildReport report =
        cochain::build_graph(datasets, build_backends, options, gateway);
    report.graph.save(config.graph_dir);

    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "graph saved to " << config.graph_dir << '\n';
    std::cout << "nodes " << report.graph.node_count() << " edges " << report.graph.edge_count()
              << " explicit " << report.explicit_triples << " tacit " << report.tacit_triples
              << " skipped_lines " << report.skipped_lines << " skipped_samples "
              << report.skipped_samples << '\n';
    append_usage(config, "build-kg", gateway.usage_report());
    return 0;
}

int cmd_build_tree(const std::string& config_path) {
    cochain::RunConfig config = cochain::load_config(config_path);
    if (config.seed_path.empty()) {
        throw cochain::ConfigError("build-tree needs paths.seed in the config");
    }
    std::ifstream in(config.seed_path);
    if (!in) throw cochain::IoError("cannot open seed file: " + config.seed_path);
    std::string line;
    json seed_json;
    bool found = false;
    while (std::getline(in, line)) {
        if (cochain::text::trim(line).empty()) continue;
        seed_json = json::parse(line);
        found = true;
        break;
    }
    if (!found) throw cochain::IoError("seed file is empty: " + config.seed_path);

    cochain::QAPair seed;
    seed.instruction = seed_json.value("instruction", std::string());
    seed.response = seed_json.value("response", std::string());
    std::string stage_id = seed_json.value("stage", std::string());
    bool stage_known = false;
    for (const cochain::StageLabel& s : config.stages) {
        if (s.id == stage_id) {
            seed.stage = s;
            stage_known = true;
            break;
        }
    }
    if (!stage_known) {
        throw cochain::IoError("seed names unknown stage \"" + stage_id + "\"");
    }

    cochain::Gateway gateway;
    cochain::apply_gateway_config(config, gateway);
    cochain::BackendSet backends = cochain::make_backends(config);

    cochain::TreeBuildReport report = cochain::build_tree(
        seed, config.stages, backends.agents, config.branching_limit, gateway);
    ensure_parent_dir(config.tree_path);
    report.tree.save(config.tree_path);

    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "tree saved to " << config.tree_path << '\n';
    std::cout << "nodes " << report.tree.size() << " depth " << report.tree.depth() << '\n';
    append_usage(config, "build-tree", gateway.usage_report());
    return 0;
}

int cmd_query(const std::string& config_path, const std::string& question, bool want_trace,
              const std::string& trace_path, const std::string& skip_csv) {
    cochain::RunConfig config = cochain::load_config(config_path);

    cochain::QueryOptions options = cochain::query_options_from(config);
    for (const std::string& sid : split_csv(skip_csv)) {
        bool known = false;
        for (const cochain::StageLabel& s : config.stages) known = known || s.id == sid;
        if (!known) throw cochain::ConfigError("--skip-stages names unknown stage " + sid);
        options.exclude_stages.insert(sid);
    }

    cochain::KnowledgeGraph graph = cochain::KnowledgeGraph::load(config.graph_dir, config.stages);
    cochain::PromptsTree tree = cochain::PromptsTree::load(config.tree_path, config.stages);
    std::unique_ptr<cochain::Encoder> encoder = cochain::make_encoder(config);

    cochain::Gateway gateway;
    cochain::apply_gateway_config(config, gateway);
    cochain::BackendSet backends = cochain::make_backends(config);

    cochain::QueryBackends query_backends;
    query_backends.backbone = backends.backbone;
    query_backends.keyword = backends.keyword;

    cochain::QueryResult result = cochain::answer_query(question, graph, tree, *encoder,
                                                        query_backends, options, gateway);
    std::cout << result.answer << '\n';
    if (want_trace) {
        std::string path = trace_path.empty() ? "trace.json" : trace_path;
        ensure_parent_dir(path);
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw cochain::IoError("cannot write trace to " + path);
        out << cochain::to_json_string(result.trace) << '\n';
    }
    append_usage(config, "query", result.usage);
    return 0;
}

int cmd_eval(const std::string& pairs_path) {
    std::ifstream in(pairs_path);
    if (!in) throw cochain::IoError("cannot open pairs file: " + pairs_path);
    json pairs = json::array();
    double gleu_sum = 0.0, rouge_sum = 0.0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (cochain::text::trim(line).empty()) continue;
        json j = json::parse(line);
        if (!j.contains("candidate") || !j.contains("reference")) {
            throw cochain::IoError("pairs line " + std::to_string(line_no) +
                                   " needs candidate and reference");
        }
        std::string cand = j["candidate"].get<std::string>();
        std::string ref = j["reference"].get<std::string>();
        double g = cochain::gleu(cand, ref);
        double r = cochain::rouge_l(cand, ref);
        gleu_sum += g;
        rouge_sum += r;
        pairs.push_back({{"gleu", g}, {"rouge_l", r}});
    }
    if (pairs.empty()) throw cochain::IoError("pairs file has no rows: " + pairs_path);
    json out;
    out["mean"] = {{"gleu", gleu_sum / static_cast<double>(pairs.size())},
                   {"rouge_l", rouge_sum / static_cast<double>(pairs.size())}};
    out["pairs"] = pairs;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_cost_report(const std::string& config_path) {
    cochain::RunConfig config = cochain::load_config(config_path);
    std::ifstream in(config.usage_log);
    if (!in) {
        std::cout << "no usage recorded\n";
        return 0;
    }
    struct Bucket {
        long runs = 0;
        long calls = 0;
        double input = 0.0, output = 0.0, cost = 0.0;
    };
    std::map<std::string, Bucket> buckets;
    std::string line;
    while (std::getline(in, line)) {
        if (cochain::text::trim(line).empty()) continue;
        json j = json::parse(line);
        Bucket& b = buckets[j.value("command", std::string("unknown"))];
        b.runs += 1;
        b.calls += j.value("calls", 0L);
        b.input += j.value("input_tokens", 0.0);
        b.output += j.value("output_tokens", 0.0);
        b.cost += j.value("cost", 0.0);
    }
    if (buckets.empty()) {
        std::cout << "no usage recorded\n";
        return 0;
    }
    std::printf("%-12s %6s %8s %12s %12s %12s %12s\n", "command", "runs", "calls", "avg_input",
                "avg_output", "avg_cost", "total_cost");
    for (const auto& [command, b] : buckets) {
        double n = static_cast<double>(b.runs);
        std::printf("%-12s %6ld %8ld %12.2f %12.2f %12.6f %12.6f\n", command.c_str(), b.runs,
                    b.calls, b.input / n, b.output / n, b.cost / n, b.cost);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"workflow knowledge engine"};
    app.require_subcommand(1);

    std::string config_path, question, trace_path, skip_csv, pairs_path;
    bool no_tacit = false;

    CLI::App* build_kg = app.add_subcommand("build-kg", "build the knowledge graph");
    build_kg->add_option("--config", config_path, "config file")->required();
    build_kg->add_flag("--no-tacit", no_tacit, "skip counterfactual probing");

    CLI::App* build_tree = app.add_subcommand("build-tree", "build the prompts tree");
    build_tree->add_option("--config", config_path, "config file")->required();

    CLI::App* query = app.add_subcommand("query", "answer a question");
    query->add_option("--config", config_path, "config file")->required();
    query->add_option("--question", question, "the user need")->required();
    CLI::Option* trace_opt =
        query->add_option("--trace", trace_path, "write the retrieval trace (default trace.json)")
            ->expected(0, 1);
    query->add_option("--skip-stages", skip_csv, "comma-separated stage ids to exclude");

    CLI::App* eval = app.add_subcommand("eval", "score candidate/reference pairs");
    eval->add_option("--pairs", pairs_path, "JSONL of {candidate, reference}")->required();

    CLI::App* cost = app.add_subcommand("cost-report", "summarize the usage log");
    cost->add_option("--config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? 0 : 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (build_kg->parsed()) return cmd_build_kg(config_path, no_tacit);
        if (build_tree->parsed()) return cmd_build_tree(config_path);
        if (query->parsed()) {
            return cmd_query(config_path, question, trace_opt->count() > 0, trace_path, skip_csv);
        }
        if (eval->parsed()) return cmd_eval(pairs_path);
        if (cost->parsed()) return cmd_cost_report(config_path);
    } catch (const cochain::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
