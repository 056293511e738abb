#include "cochain/causal_chain.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "cochain/errors.hpp"
#include "cochain/prompt_templates.hpp"
#include "cochain/text.hpp"

namespace cochain {

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",     "about", "above",  "after", "again",  "all",   "also",  "an",    "and",
        "any",   "are",   "as",     "at",    "be",     "been",  "being", "below", "between",
        "both",  "but",   "by",     "can",   "cannot", "could", "did",   "do",    "does",
        "doing", "down",  "during", "each",  "few",    "for",   "from",  "further", "had",
        "has",   "have",  "having", "he",    "her",    "here",  "him",   "his",   "how",
        "i",     "if",    "in",     "into",  "is",     "it",    "its",   "may",   "me",
        "might", "more",  "most",   "must",  "my",     "no",    "nor",   "not",   "now",
        "of",    "off",   "on",     "once",  "only",   "or",    "other", "our",   "out",
        "over",  "own",   "same",   "shall", "she",    "should", "so",   "some",  "such",
        "than",  "that",  "the",    "their", "them",   "then",  "there", "these", "they",
        "this",  "those", "through", "to",   "too",    "under", "until", "up",    "very",
        "was",   "we",    "were",   "what",  "when",   "where", "which", "while", "who",
        "whom",  "why",   "will",   "with",  "would",  "you",   "your"};
    return words;
}

}  // namespace

std::vector<std::string> extract_keywords(const std::string& query) {
    if (text::canonicalize(query).empty()) {
        throw ValidationError("cannot extract keywords from an empty query");
    }
    std::set<std::string> keep;
    for (const std::string& tok : text::alnum_tokens(query)) {
        if (tok.size() < 3) continue;
        if (stopwords().contains(tok)) continue;
        keep.insert(tok);
    }
    return {keep.begin(), keep.end()};
}

std::vector<std::string> extract_keywords(const std::string& query, KeywordMode mode,
                                          Gateway* gateway, const BoundBackend* keyword_backend) {
    if (mode == KeywordMode::heuristic) return extract_keywords(query);
    if (text::canonicalize(query).empty()) {
        throw ValidationError("cannot extract keywords from an empty query");
    }
    if (gateway == nullptr || keyword_backend == nullptr ||
        keyword_backend->backend == nullptr) {
        return extract_keywords(query);
    }
    try {
        std::string reply = ask(*gateway, *keyword_backend, prompts::keyword_system(),
                                prompts::keyword_user(query));
        std::set<std::string> keep;
        std::string cur;
        auto flush = [&] {
            std::string c = text::canonicalize(cur);
            if (!c.empty()) keep.insert(c);
            cur.clear();
        };
        for (char c : reply) {
            if (c == ',' || c == '\n') {
                flush();
            } else {
                cur.push_back(c);
            }
        }
        flush();
        if (keep.empty()) return extract_keywords(query);
        return {keep.begin(), keep.end()};
    } catch (const Error&) {
        return extract_keywords(query);
    }
}

std::vector<SeedScore> rank_candidates(std::vector<SeedScore> scored, double delta, int top_n) {
    if (top_n < 1) throw ValidationError("seed ranking needs top_n >= 1");
    std::erase_if(scored, [delta](const SeedScore& s) { return s.score < delta; });
    std::sort(scored.begin(), scored.end(), [](const SeedScore& a, const SeedScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node->canonical_name < b.node->canonical_name;
    });
    if (scored.size() > static_cast<size_t>(top_n)) scored.resize(static_cast<size_t>(top_n));
    return scored;
}

SeedSelection select_seeds(const KnowledgeGraph& graph, const std::string& query,
                           const std::vector<std::string>& keywords, Encoder& encoder,
                           double delta, int top_n) {
    if (text::canonicalize(query).empty()) {
        throw ValidationError("cannot select seeds for an empty query");
    }
    if (delta < -1.0 || delta > 1.0) {
        throw ValidationError("similarity threshold must lie in [-1, 1]");
    }
    if (top_n < 1) throw ValidationError("seed selection needs top_n >= 1");

    SeedSelection out;
    std::vector<const KnowledgeNode*> candidates = keyword_search(graph, keywords);
    if (candidates.size() < static_cast<size_t>(top_n)) {
        candidates = graph.all_nodes();
        out.fallback_used = true;
    }
    if (candidates.empty()) {
        out.fallback_used = true;
        return out;
    }

    EmbeddingVector query_vec = encoder.encode(query);
    std::vector<SeedScore> scored;
    scored.reserve(candidates.size());
    for (const KnowledgeNode* node : candidates) {
        scored.push_back({node, cosine(encoder.encode(node->canonical_name), query_vec)});
    }
    out.seeds = rank_candidates(std::move(scored), delta, top_n);
    if (out.seeds.empty()) out.fallback_used = true;
    return out;
}

std::vector<CausalPath> find_cross_stage_paths(const KnowledgeGraph& graph,
                                               const std::string& seed_name, int min_depth,
                                               int max_depth, size_t max_paths) {
    const KnowledgeNode* seed = graph.find(seed_name);
    if (seed == nullptr) throw SeedNotInGraphError("seed not in graph: " + seed_name);
    if (min_depth < 1 || max_depth < min_depth) {
        throw ValidationError("path search needs 1 <= min_depth <= max_depth");
    }

    struct Candidate {
        std::vector<std::string> names;
        std::vector<std::string> relations;
    };
    std::vector<Candidate> collected;
    std::set<std::pair<std::vector<std::string>, std::vector<std::string>>> seen;

    std::vector<std::string> names{seed->canonical_name};
    std::vector<std::string> relations;
    std::unordered_set<std::string> on_path{seed->canonical_name};

    auto qualifies = [&](const std::vector<std::string>& path_names) {
        int len = static_cast<int>(path_names.size()) - 1;
        if (len < min_depth) return false;
        bool bridged = false;
        for (size_t i = 1; i + 1 < path_names.size(); ++i) {
            if (graph.find(path_names[i])->stage_ids.size() >= 2) {
                bridged = true;
                break;
            }
        }
        if (!bridged) return false;
        const KnowledgeNode* end = graph.find(path_names.back());
        for (const std::string& sid : end->stage_ids) {
            if (!seed->stage_ids.contains(sid)) return true;
        }
        return false;
    };

    auto dfs = [&](auto&& self, const std::string& current) -> void {
        if (qualifies(names)) {
            if (seen.emplace(names, relations).second) collected.push_back({names, relations});
        }
        if (static_cast<int>(relations.size()) >= max_depth) return;
        const std::vector<size_t>* incident = graph.adjacent(current);
        if (incident == nullptr) return;
        for (size_t idx : *incident) {
            const KnowledgeGraph::Edge& e = graph.edges()[idx];
            const std::string& next = e.head == current ? e.tail : e.head;
            if (on_path.contains(next)) continue;
            names.push_back(next);
            relations.push_back(e.relation);
            on_path.insert(next);
            self(self, next);
            on_path.erase(next);
            names.pop_back();
            relations.pop_back();
        }
    };
    dfs(dfs, seed->canonical_name);

    std::sort(collected.begin(), collected.end(), [](const Candidate& a, const Candidate& b) {
        if (a.names.size() != b.names.size()) return a.names.size() < b.names.size();
        if (a.names != b.names) return a.names < b.names;
        return a.relations < b.relations;
    });
    if (collected.size() > max_paths) collected.resize(max_paths);

    auto workflow_sorted_stages = [&graph](const KnowledgeNode& node) {
        std::vector<std::string> ids(node.stage_ids.begin(), node.stage_ids.end());
        std::sort(ids.begin(), ids.end(), [&graph](const std::string& a, const std::string& b) {
            int oa = graph.stage_orders().at(a), ob = graph.stage_orders().at(b);
            if (oa != ob) return oa < ob;
            return a < b;
        });
        return ids;
    };

    std::vector<CausalPath> out;
    out.reserve(collected.size());
    for (Candidate& c : collected) {
        CausalPath path;
        path.relations = std::move(c.relations);
        std::set<std::string> seen_stage;
        for (const std::string& name : c.names) {
            for (const std::string& sid : workflow_sorted_stages(*graph.find(name))) {
                if (seen_stage.insert(sid).second) path.stages_crossed.push_back(sid);
            }
        }
        path.node_names = std::move(c.names);
        out.push_back(std::move(path));
    }
    return out;
}

std::vector<Triple> expand_one_hop(const KnowledgeGraph& graph, const std::string& seed_name) {
    const KnowledgeNode* seed = graph.find(seed_name);
    if (seed == nullptr) throw SeedNotInGraphError("seed not in graph: " + seed_name);
    std::vector<Triple> out;
    if (const std::vector<size_t>* incident = graph.adjacent(seed->canonical_name)) {
        for (size_t idx : *incident) {
            const KnowledgeGraph::Edge& e = graph.edges()[idx];
            out.push_back(Triple{e.head, e.relation, e.tail, e.provenance, e.variant});
        }
    }
    std::sort(out.begin(), out.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.head, a.relation, a.tail, a.provenance) <
               std::tie(b.head, b.relation, b.tail, b.provenance);
    });
    return out;
}

std::string verbalize(const std::vector<CausalPath>& paths, const std::vector<Triple>& triples) {
    std::vector<std::string> lines;
    for (const CausalPath& p : paths) {
        std::string line = p.node_names.empty() ? std::string() : p.node_names[0];
        for (size_t i = 0; i < p.relations.size(); ++i) {
            line += " -[" + p.relations[i] + "]-> " + p.node_names[i + 1];
        }
        if (!p.stages_crossed.empty()) {
            line += " (stages: ";
            for (size_t i = 0; i < p.stages_crossed.size(); ++i) {
                if (i > 0) line += " → ";
                line += p.stages_crossed[i];
            }
            line += ")";
        }
        lines.push_back(std::move(line));
    }
    if (!triples.empty()) {
        lines.push_back("One-hop neighbors:");
        for (const Triple& t : triples) {
            lines.push_back("(" + t.head + " | " + t.relation + " | " + t.tail + ")");
        }
    }
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out += '\n';
        out += lines[i];
    }
    return out;
}

}  // namespace cochain
