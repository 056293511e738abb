#pragma once

#include <string>
#include <vector>

#include "cochain/embedder.hpp"
#include "cochain/knowledge_graph.hpp"
#include "cochain/llm_gateway.hpp"

namespace cochain {

enum class KeywordMode { heuristic, llm };

// Heuristic extraction: alphanumeric tokens, stopwords and tokens shorter
// than 3 characters dropped, result deduplicated and sorted.
std::vector<std::string> extract_keywords(const std::string& query);

// llm mode asks the keyword backend and splits its reply on commas and
// newlines; any backend failure or an empty parse falls back to the heuristic.
std::vector<std::string> extract_keywords(const std::string& query, KeywordMode mode,
                                          Gateway* gateway, const BoundBackend* keyword_backend);

struct SeedScore {
    const KnowledgeNode* node = nullptr;
    double score = 0.0;
};

// Pure ranking core: drop scores below delta, order by score descending with
// canonical name ascending as the tiebreak, keep at most top_n.
std::vector<SeedScore> rank_candidates(std::vector<SeedScore> scored, double delta, int top_n);

struct SeedSelection {
    std::vector<SeedScore> seeds;
    // True when keyword candidates were too few and every node was scanned,
    // or when the final seed set came out empty.
    bool fallback_used = false;
};

// Two-stage retrieval: keyword search proposes candidates, cosine similarity
// against the encoded query ranks them. Fewer candidates than top_n triggers
// a full scan of the graph. An empty result is valid.
SeedSelection select_seeds(const KnowledgeGraph& graph, const std::string& query,
                           const std::vector<std::string>& keywords, Encoder& encoder,
                           double delta, int top_n);

struct CausalPath {
    std::vector<std::string> node_names;
    std::vector<std::string> relations;       // one per hop
    std::vector<std::string> stages_crossed;  // distinct stage ids, first-encounter order

    bool operator==(const CausalPath& other) const = default;
};

// Undirected simple paths from the seed of edge-length in [min_depth,
// max_depth] that pass through at least one interior node labeled with two or
// more stages and end at a node carrying a stage the seed does not. Paths are
// deduplicated on (nodes, relations), ordered by length then node names, and
// capped at max_paths.
std::vector<CausalPath> find_cross_stage_paths(const KnowledgeGraph& graph,
                                               const std::string& seed_name, int min_depth = 2,
                                               int max_depth = 3, size_t max_paths = 20);

// Every edge incident to the seed as a triple, ordered by
// (head, relation, tail, provenance).
std::vector<Triple> expand_one_hop(const KnowledgeGraph& graph, const std::string& seed_name);

// Renders paths as "a -[r]-> b (stages: s1 → s2)" lines followed, when
// triples are present, by a "One-hop neighbors:" section of (h | r | t)
// lines. Both inputs empty yields the empty string.
std::string verbalize(const std::vector<CausalPath>& paths, const std::vector<Triple>& triples);

}  // namespace cochain
