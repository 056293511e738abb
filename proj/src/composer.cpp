#include "cochain/composer.hpp"

#include <algorithm>
#include <tuple>

#include "cochain/errors.hpp"
#include "cochain/prompt_templates.hpp"
#include "cochain/text.hpp"
#include "json.hpp"

namespace cochain {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out += '\n';
        out += lines[i];
    }
    return out;
}

std::string section(const std::string& header, const std::string& body) {
    return header + "\n" + (body.empty() ? prompts::none_retrieved() : body);
}

}  // namespace

std::string ComposedPrompt::user_text() const {
    return section(prompts::knowledge_header(), knowledge) + "\n\n" +
           section(prompts::causal_header(), causal) + "\n\n" +
           section(prompts::chain_header(), chain) + "\n\n" + prompts::user_need_header() + "\n" +
           user_need;
}

std::string ComposedPrompt::full_text() const { return preamble + "\n\n" + user_text(); }

ComposedPrompt compose_prompt(const std::string& user_need, const std::string& knowledge,
                              const std::string& causal, const PromptChain& chain, long budget) {
    if (text::trim(user_need).empty()) {
        throw ValidationError("cannot compose a prompt for an empty user need");
    }
    if (budget < 1) throw ValidationError("composition needs a positive token budget");

    auto block_lines = [](const std::string& s) {
        std::vector<std::string> lines;
        for (std::string& l : text::split_lines(s)) {
            if (!text::trim(l).empty()) lines.push_back(std::move(l));
        }
        return lines;
    };
    std::vector<std::string> k_lines = block_lines(knowledge);
    std::vector<std::string> c_lines = block_lines(causal);
    std::vector<std::string> ch_lines;
    for (size_t i = 0; i < chain.texts.size(); ++i) {
        ch_lines.push_back("[" + chain.stages[i] + "] " + chain.texts[i]);
    }

    ComposedPrompt out;
    out.preamble = prompts::backbone_preamble();
    out.user_need = user_need;
    while (true) {
        out.knowledge = join_lines(k_lines);
        out.causal = join_lines(c_lines);
        out.chain = join_lines(ch_lines);
        out.token_estimate = text::count_tokens(out.full_text());
        if (out.token_estimate <= budget) return out;
        if (!k_lines.empty()) {
            k_lines.pop_back();
        } else if (!c_lines.empty()) {
            c_lines.pop_back();
        } else if (!ch_lines.empty()) {
            ch_lines.pop_back();
        } else {
            throw BudgetTooSmallError("token budget " + std::to_string(budget) +
                                      " is below the prompt skeleton of " +
                                      std::to_string(out.token_estimate) + " tokens");
        }
    }
}

std::string to_json_string(const RetrievalTrace& trace) {
    json seeds = json::array();
    for (const auto& s : trace.seeds) {
        seeds.push_back({{"name", s.name}, {"score", s.score}});
    }
    json j;
    j["blocks"] = {{"causal", trace.causal_block},
                   {"chain", trace.chain_block},
                   {"knowledge", trace.knowledge_block}};
    j["chain_node_ids"] = trace.chain_node_ids;
    j["chain_nodes_visited"] = trace.chain_nodes_visited;
    j["excluded_stages"] = trace.excluded_stages;
    j["fallback_used"] = trace.fallback_used;
    j["keywords"] = trace.keywords;
    j["one_hop_count"] = trace.one_hop_count;
    j["path_count"] = trace.path_count;
    j["seeds"] = seeds;
    j["token_estimate"] = trace.token_estimate;
    j["warnings"] = trace.warnings;
    return j.dump(2);
}

QueryResult answer_query(const std::string& query, const KnowledgeGraph& graph,
                         const PromptsTree& tree, Encoder& encoder,
                         const QueryBackends& backends, const QueryOptions& options,
                         Gateway& gateway) {
    if (text::trim(query).empty()) throw ValidationError("cannot answer an empty query");
    if (backends.backbone.backend == nullptr) {
        throw ValidationError("answering needs a backbone backend");
    }

    const UsageRecord before = gateway.usage_report();
    QueryResult result;
    RetrievalTrace& trace = result.trace;
    trace.excluded_stages.assign(options.exclude_stages.begin(), options.exclude_stages.end());

    const BoundBackend* keyword_backend =
        backends.keyword.has_value() ? &backends.keyword.value() : nullptr;
    trace.keywords = extract_keywords(query, options.keyword_mode, &gateway, keyword_backend);

    std::vector<SeedScore> seeds;
    try {
        SeedSelection selection = select_seeds(graph, query, trace.keywords, encoder,
                                               options.delta, options.top_n);
        seeds = std::move(selection.seeds);
        trace.fallback_used = selection.fallback_used;
        for (const SeedScore& s : seeds) {
            trace.seeds.push_back({s.node->canonical_name, s.score});
        }
    } catch (const Error& e) {
        trace.warnings.push_back(std::string("seed selection failed: ") + e.what());
    }

    std::set<std::tuple<std::string, std::string, std::string, Provenance>> triple_keys;
    std::vector<Triple> triples;
    std::set<std::pair<std::vector<std::string>, std::vector<std::string>>> path_keys;
    std::vector<CausalPath> paths;
    for (const SeedScore& seed : seeds) {
        try {
            for (Triple& t : expand_one_hop(graph, seed.node->canonical_name)) {
                if (triple_keys.emplace(t.head, t.relation, t.tail, t.provenance).second) {
                    triples.push_back(std::move(t));
                }
            }
            for (CausalPath& p : find_cross_stage_paths(graph, seed.node->canonical_name, 2,
                                                        options.max_depth, options.max_paths)) {
                if (path_keys.emplace(p.node_names, p.relations).second) {
                    paths.push_back(std::move(p));
                }
            }
        } catch (const Error& e) {
            trace.warnings.push_back("expansion of seed " + seed.node->canonical_name +
                                     " failed: " + e.what());
        }
    }
    std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.head, a.relation, a.tail, a.provenance) <
               std::tie(b.head, b.relation, b.tail, b.provenance);
    });
    std::sort(paths.begin(), paths.end(), [](const CausalPath& a, const CausalPath& b) {
        if (a.node_names.size() != b.node_names.size()) {
            return a.node_names.size() < b.node_names.size();
        }
        if (a.node_names != b.node_names) return a.node_names < b.node_names;
        return a.relations < b.relations;
    });
    trace.one_hop_count = static_cast<int>(triples.size());
    trace.path_count = static_cast<int>(paths.size());

    PromptChain chain;
    try {
        ChainRetrieval retrieved =
            retrieve_prompt_chain(tree, query, encoder, options.exclude_stages);
        chain = std::move(retrieved.chain);
        trace.chain_node_ids = chain.node_ids;
        trace.chain_nodes_visited = retrieved.nodes_visited;
    } catch (const Error& e) {
        trace.warnings.push_back(std::string("chain retrieval failed: ") + e.what());
    }

    result.composed = compose_prompt(query, verbalize({}, triples), verbalize(paths, {}), chain,
                                     options.budget);
    trace.knowledge_block = result.composed.knowledge;
    trace.causal_block = result.composed.causal;
    trace.chain_block = result.composed.chain;
    trace.token_estimate = result.composed.token_estimate;

    ChatRequest request;
    request.model_id = backends.backbone.model_id;
    request.system_text = result.composed.preamble;
    request.user_text = result.composed.user_text();
    request.temperature = backends.backbone.temperature;
    request.max_output_tokens = backends.backbone.max_output_tokens;
    result.answer = gateway.complete(request, *backends.backbone.backend).text;

    result.usage = gateway.usage_report() - before;
    return result;
}

}  // namespace cochain
