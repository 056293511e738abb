#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cochain/llm_gateway.hpp"
#include "cochain/workflow_types.hpp"

namespace cochain {

// How a triple entered the graph: stated directly in corpus Q&A, or surfaced
// by counterfactual probing.
enum class Provenance { Explicit, Tacit };

std::string to_string(Provenance p);

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;
    Provenance provenance = Provenance::Explicit;
    std::string variant;  // counterfactual variant for tacit triples, else empty

    bool operator==(const Triple& other) const = default;
};

struct KnowledgeNode {
    std::string canonical_name;
    std::set<std::string> stage_ids;
    std::set<std::string> surface_forms;
};

// Stage-labeled multigraph over canonicalized entities. Node identity is the
// canonicalized name; edges are unique per (head, relation, tail, provenance).
class KnowledgeGraph {
public:
    struct Edge {
        std::string head;
        std::string relation;
        std::string tail;
        Provenance provenance = Provenance::Explicit;
        std::string variant;
    };

    void register_stage(const StageLabel& stage);
    const std::map<std::string, int>& stage_orders() const { return stage_orders_; }
    std::vector<StageLabel> stages() const;

    // Canonicalizes head and tail, creates or updates both nodes, labels them
    // with the stage, and inserts the edge unless its key already exists.
    void add_triple(const Triple& triple, const StageLabel& stage);

    const KnowledgeNode* find(const std::string& name) const;
    std::vector<const KnowledgeNode*> all_nodes() const;  // sorted by canonical name
    const std::vector<Edge>& edges() const { return edges_; }
    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edges_.size(); }

    // Indices into edges() touching the node, in insertion order.
    const std::vector<size_t>* adjacent(const std::string& canonical_name) const;

    // Writes nodes.jsonl and edges.jsonl under dir, lines byte-sorted so
    // identical graphs serialize identically.
    void save(const std::string& dir) const;
    static KnowledgeGraph load(const std::string& dir, const std::vector<StageLabel>& stages);

    // Structural union: node labels and surfaces merge setwise, duplicate
    // edge keys keep the first copy.
    void merge_in(const KnowledgeGraph& other);
    // Set semantics: same stages, same labeled nodes, same edge set.
    bool operator==(const KnowledgeGraph& other) const;

private:
    std::map<std::string, KnowledgeNode> nodes_;
    std::vector<Edge> edges_;
    std::set<std::tuple<std::string, std::string, std::string, Provenance>> edge_keys_;
    std::map<std::string, int> stage_orders_;
    std::map<std::string, std::vector<size_t>> adjacency_;
};

struct ExtractionResult {
    std::vector<Triple> triples;
    int skipped_lines = 0;
};

// Grammar parser for extractor output: one triple per line, written
// (head | relation | tail). Lines that fail the grammar are counted, not kept.
// Blank lines are ignored. Fields are canonicalized for emptiness checks but
// triples keep the trimmed surface text.
ExtractionResult parse_triples(const std::string& extractor_output);

ExtractionResult extract_triples(const QAPair& qa, Gateway& gateway,
                                 const BoundBackend& extractor);

std::string generate_counterfactual(const std::string& instruction, CounterfactualVariant variant,
                                    Gateway& gateway, const BoundBackend& generator);

// Pulls "VERDICT:" / "FEEDBACK:" lines out of evaluator output. Unparseable
// verdicts degrade to ambiguous with the raw text as feedback; a non-reasonable
// verdict always carries non-empty feedback.
VerdictReport parse_verdict(const std::string& evaluator_output);

struct RefinementResult {
    std::string answer;
    std::string instruction;  // final instruction, feedback appended verbatim per round
    std::vector<VerdictReport> history;
};

// Ask-and-judge loop: the stage agent answers, the evaluator rules on the
// answer, feedback is appended to the instruction and the loop repeats until
// a reasonable verdict or max_rounds, which raises RefinementExhaustedError.
RefinementResult refine_counterfactual(const std::string& cf_instruction, const StageLabel& stage,
                                       Gateway& gateway, const BoundBackend& agent,
                                       const BoundBackend& evaluator, int max_rounds = 5);

struct StageDataset {
    StageLabel stage;
    std::vector<QAPair> samples;
};

struct BuildBackends {
    BoundBackend extractor;
    BoundBackend evaluator;
    std::map<std::string, BoundBackend> agents;  // keyed by stage id
};

struct BuildOptions {
    bool tacit_enabled = true;
    // Leniency keeps offline builds alive across per-sample failures: the
    // sample is skipped with a warning instead of aborting the build.
    bool lenient = true;
    int max_rounds = 5;
    // Fixed probe variant; unset means round-robin through kVariantCycle.
    std::optional<CounterfactualVariant> variant;
};

struct BuildReport {
    KnowledgeGraph graph;
    std::vector<std::string> warnings;
    int explicit_triples = 0;
    int tacit_triples = 0;
    int skipped_lines = 0;
    int skipped_samples = 0;
};

// Offline graph construction: per stage in workflow order, per sample in
// corpus order, extract explicit triples, then (when enabled) probe with a
// counterfactual, refine it to a reasonable answer, and extract tacit triples
// from the refined exchange.
BuildReport build_graph(const std::vector<StageDataset>& datasets, const BuildBackends& backends,
                        const BuildOptions& options, Gateway& gateway);

KnowledgeGraph merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Nodes whose canonical name or surface forms contain any canonicalized
// keyword as a whole alphanumeric token. Multi-word keywords match nothing.
std::vector<const KnowledgeNode*> keyword_search(const KnowledgeGraph& graph,
                                                 const std::vector<std::string>& keywords);

// Corpus line format: {"instruction": ..., "response": ..., "stage": ...}.
std::vector<StageDataset> load_corpus(const std::string& path,
                                      const std::vector<StageLabel>& stages);

}  // namespace cochain
