#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cochain/causal_chain.hpp"
#include "cochain/prompts_tree.hpp"

namespace cochain {

// The backbone prompt: a fixed preamble plus four sections in fixed order
// (workflow knowledge, cross-stage causal chains, stage guidance prompts,
// user need). Empty sections render as "(none retrieved)"; the user need is
// never altered.
struct ComposedPrompt {
    std::string preamble;
    std::string knowledge;
    std::string causal;
    std::string chain;
    std::string user_need;
    long token_estimate = 0;  // whitespace tokens of full_text()

    std::string user_text() const;  // the four headed sections
    std::string full_text() const;  // preamble + user_text
};

// Fits the blocks to the token budget by dropping trailing lines, knowledge
// first, then causal, then chain. A budget below the empty-block skeleton
// raises BudgetTooSmallError.
ComposedPrompt compose_prompt(const std::string& user_need, const std::string& knowledge,
                              const std::string& causal, const PromptChain& chain, long budget);

struct RetrievalTrace {
    struct TracedSeed {
        std::string name;
        double score = 0.0;
    };
    std::vector<std::string> keywords;
    std::vector<TracedSeed> seeds;
    bool fallback_used = false;
    int one_hop_count = 0;
    int path_count = 0;
    std::vector<std::string> chain_node_ids;
    int chain_nodes_visited = 0;
    std::vector<std::string> excluded_stages;
    std::vector<std::string> warnings;
    std::string knowledge_block;
    std::string causal_block;
    std::string chain_block;
    long token_estimate = 0;
};

std::string to_json_string(const RetrievalTrace& trace);

struct QueryOptions {
    double delta = 0.35;
    int top_n = 5;
    int max_depth = 3;
    size_t max_paths = 20;
    long budget = 1024;
    KeywordMode keyword_mode = KeywordMode::heuristic;
    std::set<std::string> exclude_stages;
};

struct QueryBackends {
    BoundBackend backbone;
    std::optional<BoundBackend> keyword;  // only consulted in llm keyword mode
};

struct QueryResult {
    std::string answer;
    ComposedPrompt composed;
    UsageRecord usage;  // exactly the calls made for this query
    RetrievalTrace trace;
};

// Online path: extract keywords, select seeds, expand one hop, search
// cross-stage paths, retrieve the prompt chain, compose, and make exactly one
// backbone call. Retrieval failures degrade to emptier blocks with a trace
// warning; only composition and the backbone call can fail the query.
QueryResult answer_query(const std::string& query, const KnowledgeGraph& graph,
                         const PromptsTree& tree, Encoder& encoder,
                         const QueryBackends& backends, const QueryOptions& options,
                         Gateway& gateway);

}  // namespace cochain
