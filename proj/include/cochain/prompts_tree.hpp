#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cochain/embedder.hpp"
#include "cochain/llm_gateway.hpp"
#include "cochain/workflow_types.hpp"

namespace cochain {

struct PromptNode {
    std::string id;
    std::optional<StageLabel> stage;  // empty only at the root
    std::string prompt_text;          // root holds the seed user need
    QAPair evidence;                  // the Q&A the prompt was distilled from
    std::string parent;               // empty at the root
    std::vector<std::string> children;
};

// Rooted stage-layered tree of reusable guidance prompts. Every child of the
// root sits at the first stage, grandchildren at the second, and so on, so
// stage order strictly increases along any root-to-leaf path. Out-degree
// never exceeds the branching limit.
class PromptsTree {
public:
    // An empty tree; create() and load() produce usable ones.
    PromptsTree() = default;

    static PromptsTree create(const QAPair& seed, int branching_limit);

    const std::string& root_id() const { return root_id_; }
    int branching_limit() const { return branching_limit_; }
    bool has_node(const std::string& id) const { return nodes_.contains(id); }
    const PromptNode& node(const std::string& id) const;
    size_t size() const { return nodes_.size(); }
    std::vector<std::string> ids() const;  // sorted
    int depth() const;                     // edge count of the longest root-to-leaf path

    std::string add_child(const std::string& parent_id, const StageLabel& stage,
                          const std::string& prompt_text, const QAPair& evidence);

    // JSONL, one node per line sorted by id; the root line carries the
    // branching limit under "m".
    void save(const std::string& path) const;
    static PromptsTree load(const std::string& path, const std::vector<StageLabel>& stages);

private:
    std::string next_id();

    std::string root_id_;
    int branching_limit_ = 1;
    size_t counter_ = 0;
    std::map<std::string, PromptNode> nodes_;
};

// One imperative guidance prompt per numbered line of the agent's reply.
// Zero parseable lines raises DistillationEmptyError.
std::vector<std::string> distill_prompts(const std::string& answer, const StageLabel& stage,
                                         Gateway& gateway, const BoundBackend& agent);

// Asks the agent to rank the candidates and keeps the best min(m, n) in
// ranked order. Unparseable rankings fall back to input order; short rankings
// are padded from the remaining candidates in input order.
std::vector<std::string> self_evaluate(const std::vector<std::string>& candidates, int m,
                                       Gateway& gateway, const BoundBackend& agent);

std::string generate_next_question(const std::string& prompt_text, const StageLabel& next_stage,
                                   Gateway& gateway, const BoundBackend& agent);

struct TreeBuildReport {
    PromptsTree tree;
    std::vector<std::string> warnings;
};

// Breadth-first expansion from a seed Q&A: distill candidate prompts from the
// current answer, keep the best m, and for each kept prompt generate the next
// stage's question and answer to expand under. Final-stage prompts attach as
// leaves. Per-branch failures prune that branch with a warning; a tree that
// ends up with no stage nodes raises TreeEmptyError.
TreeBuildReport build_tree(const QAPair& seed, const std::vector<StageLabel>& stages,
                           const std::map<std::string, BoundBackend>& agents, int branching_limit,
                           Gateway& gateway);

struct PromptChain {
    std::vector<std::string> node_ids;  // walked path, root included
    std::vector<std::string> texts;     // stage prompts along the walk, post-exclusion
    std::vector<std::string> stages;    // stage id per text
};

struct ChainRetrieval {
    PromptChain chain;
    int nodes_visited = 0;
};

// Greedy root-to-leaf descent: at each node pick the child whose prompt is
// most cosine-similar to the query (first child wins ties), then drop stage
// nodes named in exclude_stages. Visits at most 1 + depth * branching_limit
// nodes. Dropping every stage node raises AllStagesExcludedError.
ChainRetrieval retrieve_prompt_chain(const PromptsTree& tree, const std::string& query,
                                     Encoder& encoder,
                                     const std::set<std::string>& exclude_stages = {});

}  // namespace cochain
