#include "cochain/knowledge_graph.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "cochain/errors.hpp"
#include "cochain/prompt_templates.hpp"
#include "cochain/text.hpp"
#include "json.hpp"

namespace cochain {

using nlohmann::json;

std::string to_string(Provenance p) {
    return p == Provenance::Explicit ? "explicit" : "tacit";
}

namespace {

Provenance provenance_from_string(const std::string& s) {
    if (s == "explicit") return Provenance::Explicit;
    if (s == "tacit") return Provenance::Tacit;
    throw IoError("unknown provenance: " + s);
}

// Surface forms keep their case but normalize whitespace, so "Carbon  Fiber"
// and "Carbon Fiber" are one surface.
std::string surface_form(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending = true;
            continue;
        }
        if (pending) {
            out.push_back(' ');
            pending = false;
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace

void KnowledgeGraph::register_stage(const StageLabel& stage) {
    auto [it, inserted] = stage_orders_.emplace(stage.id, stage.order);
    if (!inserted && it->second != stage.order) {
        throw ValidationError("stage " + stage.id + " registered with conflicting orders");
    }
}

std::vector<StageLabel> KnowledgeGraph::stages() const {
    std::vector<StageLabel> out;
    out.reserve(stage_orders_.size());
    for (const auto& [id, order] : stage_orders_) out.push_back({id, order});
    std::sort(out.begin(), out.end());
    return out;
}

void KnowledgeGraph::add_triple(const Triple& triple, const StageLabel& stage) {
    std::string head = text::canonicalize(triple.head);
    std::string relation = text::canonicalize(triple.relation);
    std::string tail = text::canonicalize(triple.tail);
    if (head.empty() || relation.empty() || tail.empty()) {
        throw ValidationError("triple has an empty field after canonicalization");
    }
    register_stage(stage);

    for (const auto& [canonical, raw] :
         {std::pair{head, triple.head}, std::pair{tail, triple.tail}}) {
        KnowledgeNode& node = nodes_[canonical];
        node.canonical_name = canonical;
        node.stage_ids.insert(stage.id);
        node.surface_forms.insert(surface_form(raw));
    }

    auto key = std::make_tuple(head, relation, tail, triple.provenance);
    if (!edge_keys_.insert(key).second) return;
    edges_.push_back(Edge{head, relation, tail, triple.provenance, triple.variant});
    size_t idx = edges_.size() - 1;
    adjacency_[head].push_back(idx);
    if (tail != head) adjacency_[tail].push_back(idx);
}

const KnowledgeNode* KnowledgeGraph::find(const std::string& name) const {
    auto it = nodes_.find(text::canonicalize(name));
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<const KnowledgeNode*> KnowledgeGraph::all_nodes() const {
    std::vector<const KnowledgeNode*> out;
    out.reserve(nodes_.size());
    for (const auto& [name, node] : nodes_) out.push_back(&node);
    return out;
}

const std::vector<size_t>* KnowledgeGraph::adjacent(const std::string& canonical_name) const {
    auto it = adjacency_.find(canonical_name);
    return it == adjacency_.end() ? nullptr : &it->second;
}

void KnowledgeGraph::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create graph directory " + dir + ": " + ec.message());

    std::vector<std::string> node_lines;
    node_lines.reserve(nodes_.size());
    for (const auto& [name, node] : nodes_) {
        std::vector<std::string> labels(node.stage_ids.begin(), node.stage_ids.end());
        std::sort(labels.begin(), labels.end(), [this](const std::string& a, const std::string& b) {
            int oa = stage_orders_.at(a), ob = stage_orders_.at(b);
            if (oa != ob) return oa < ob;
            return a < b;
        });
        json j;
        j["labels"] = labels;
        j["name"] = name;
        j["surfaces"] = std::vector<std::string>(node.surface_forms.begin(),
                                                 node.surface_forms.end());
        node_lines.push_back(j.dump());
    }
    std::sort(node_lines.begin(), node_lines.end());

    std::vector<std::string> edge_lines;
    edge_lines.reserve(edges_.size());
    for (const Edge& e : edges_) {
        json j;
        j["head"] = e.head;
        j["meta"] = e.variant.empty() ? json::object() : json{{"variant", e.variant}};
        j["prov"] = to_string(e.provenance);
        j["rel"] = e.relation;
        j["tail"] = e.tail;
        edge_lines.push_back(j.dump());
    }
    std::sort(edge_lines.begin(), edge_lines.end());

    auto write_lines = [&dir](const char* name, const std::vector<std::string>& lines) {
        std::string path = dir + "/" + name;
        std::ofstream out(path, std::ios::trunc | std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        for (const std::string& l : lines) out << l << '\n';
    };
    write_lines("nodes.jsonl", node_lines);
    write_lines("edges.jsonl", edge_lines);
}

KnowledgeGraph KnowledgeGraph::load(const std::string& dir, const std::vector<StageLabel>& stages) {
    KnowledgeGraph g;
    for (const StageLabel& s : stages) g.register_stage(s);

    auto read_lines = [&dir](const char* name) {
        std::string path = dir + "/" + name;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) {
            if (!text::trim(line).empty()) lines.push_back(line);
        }
        return lines;
    };

    auto parse_line = [](const std::string& line, const char* name) {
        try {
            return json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(std::string(name) + ": " + e.what());
        }
    };

    for (const std::string& line : read_lines("nodes.jsonl")) {
        json j = parse_line(line, "nodes.jsonl");
        KnowledgeNode node;
        try {
            node.canonical_name = j.at("name").get<std::string>();
            for (const auto& label : j.at("labels")) {
                std::string id = label.get<std::string>();
                if (!g.stage_orders_.contains(id)) {
                    throw IoError("node " + node.canonical_name + " carries unknown stage " + id);
                }
                node.stage_ids.insert(id);
            }
            for (const auto& s : j.at("surfaces")) node.surface_forms.insert(s.get<std::string>());
        } catch (const json::exception& e) {
            throw IoError(std::string("nodes.jsonl: ") + e.what());
        }
        g.nodes_[node.canonical_name] = std::move(node);
    }

    for (const std::string& line : read_lines("edges.jsonl")) {
        json j = parse_line(line, "edges.jsonl");
        Edge e;
        try {
            e.head = j.at("head").get<std::string>();
            e.relation = j.at("rel").get<std::string>();
            e.tail = j.at("tail").get<std::string>();
            e.provenance = provenance_from_string(j.at("prov").get<std::string>());
            if (j.contains("meta") && j["meta"].contains("variant")) {
                e.variant = j["meta"]["variant"].get<std::string>();
            }
        } catch (const json::exception& ex) {
            throw IoError(std::string("edges.jsonl: ") + ex.what());
        }
        if (!g.nodes_.contains(e.head) || !g.nodes_.contains(e.tail)) {
            throw IoError("edge references unknown node: " + e.head + " / " + e.tail);
        }
        auto key = std::make_tuple(e.head, e.relation, e.tail, e.provenance);
        if (!g.edge_keys_.insert(key).second) continue;
        g.edges_.push_back(e);
        size_t idx = g.edges_.size() - 1;
        g.adjacency_[e.head].push_back(idx);
        if (e.tail != e.head) g.adjacency_[e.tail].push_back(idx);
    }
    return g;
}

ExtractionResult parse_triples(const std::string& extractor_output) {
    ExtractionResult result;
    for (const std::string& raw : text::split_lines(extractor_output)) {
        std::string line = text::trim(raw);
        if (line.empty()) continue;
        if (line.front() != '(' || line.back() != ')') {
            ++result.skipped_lines;
            continue;
        }
        std::string inner = line.substr(1, line.size() - 2);
        std::vector<std::string> parts;
        size_t pos = 0;
        while (true) {
            size_t bar = inner.find('|', pos);
            if (bar == std::string::npos) {
                parts.push_back(text::trim(inner.substr(pos)));
                break;
            }
            parts.push_back(text::trim(inner.substr(pos, bar - pos)));
            pos = bar + 1;
        }
        if (parts.size() != 3 || text::canonicalize(parts[0]).empty() ||
            text::canonicalize(parts[1]).empty() || text::canonicalize(parts[2]).empty()) {
            ++result.skipped_lines;
            continue;
        }
        result.triples.push_back(Triple{parts[0], parts[1], parts[2], Provenance::Explicit, ""});
    }
    return result;
}

ExtractionResult extract_triples(const QAPair& qa, Gateway& gateway,
                                 const BoundBackend& extractor) {
    if (text::trim(qa.instruction).empty()) {
        throw ValidationError("cannot extract triples from an empty instruction");
    }
    if (text::trim(qa.response).empty()) {
        throw ValidationError("cannot extract triples from an empty response");
    }
    std::string reply = ask(gateway, extractor, prompts::extractor_system(),
                            prompts::extractor_user(qa.instruction, qa.response));
    return parse_triples(reply);
}

std::string generate_counterfactual(const std::string& instruction, CounterfactualVariant variant,
                                    Gateway& gateway, const BoundBackend& generator) {
    if (text::trim(instruction).empty()) {
        throw ValidationError("cannot probe an empty instruction");
    }
    std::string reply = ask(gateway, generator, prompts::counterfactual_system(),
                            prompts::counterfactual_user(variant, instruction));
    return text::trim(reply);
}

VerdictReport parse_verdict(const std::string& evaluator_output) {
    VerdictReport report;
    bool have_verdict = false;
    for (const std::string& raw : text::split_lines(evaluator_output)) {
        std::string line = text::trim(raw);
        if (!have_verdict && text::starts_with_ci(line, "verdict:")) {
            std::string label = text::canonicalize(line.substr(8));
            if (label == "reasonable") {
                report.label = Verdict::reasonable;
                have_verdict = true;
            } else if (label == "ambiguous") {
                report.label = Verdict::ambiguous;
                have_verdict = true;
            } else if (label == "unreasonable") {
                report.label = Verdict::unreasonable;
                have_verdict = true;
            }
        } else if (text::starts_with_ci(line, "feedback:")) {
            report.feedback = text::trim(line.substr(9));
        }
    }
    if (!have_verdict) {
        report.label = Verdict::ambiguous;
        report.feedback = text::trim(evaluator_output);
    }
    if (report.label != Verdict::reasonable && report.feedback.empty()) {
        report.feedback = text::trim(evaluator_output);
        if (report.feedback.empty()) report.feedback = "evaluator gave no feedback";
    }
    return report;
}

RefinementResult refine_counterfactual(const std::string& cf_instruction, const StageLabel& stage,
                                       Gateway& gateway, const BoundBackend& agent,
                                       const BoundBackend& evaluator, int max_rounds) {
    if (text::trim(cf_instruction).empty()) {
        throw ValidationError("cannot refine an empty counterfactual instruction");
    }
    if (max_rounds < 1) throw ValidationError("refinement needs max_rounds >= 1");

    RefinementResult result;
    result.instruction = cf_instruction;
    for (int round = 0; round < max_rounds; ++round) {
        result.answer =
            ask(gateway, agent, prompts::agent_system(stage.id), result.instruction);
        std::string verdict_text =
            ask(gateway, evaluator, prompts::evaluator_system(),
                prompts::evaluator_user(result.instruction, result.answer));
        VerdictReport report = parse_verdict(verdict_text);
        result.history.push_back(report);
        if (report.label == Verdict::reasonable) return result;
        result.instruction += "\n" + report.feedback;
    }
    throw RefinementExhaustedError(
        "counterfactual refinement exhausted after " + std::to_string(max_rounds) + " rounds",
        result.answer, result.instruction);
}

BuildReport build_graph(const std::vector<StageDataset>& datasets, const BuildBackends& backends,
                        const BuildOptions& options, Gateway& gateway) {
    if (backends.extractor.backend == nullptr) {
        throw ValidationError("graph build needs an extractor backend");
    }
    if (options.tacit_enabled) {
        if (backends.evaluator.backend == nullptr) {
            throw ValidationError("tacit probing needs an evaluator backend");
        }
        for (const StageDataset& ds : datasets) {
            auto it = backends.agents.find(ds.stage.id);
            if (it == backends.agents.end() || it->second.backend == nullptr) {
                throw ValidationError("tacit probing needs an agent for stage " + ds.stage.id);
            }
        }
    }

    std::vector<const StageDataset*> ordered;
    ordered.reserve(datasets.size());
    for (const StageDataset& ds : datasets) ordered.push_back(&ds);
    std::sort(ordered.begin(), ordered.end(),
              [](const StageDataset* a, const StageDataset* b) { return a->stage < b->stage; });

    BuildReport report;
    for (const StageDataset* ds : ordered) report.graph.register_stage(ds->stage);

    size_t probe_counter = 0;
    for (const StageDataset* ds : ordered) {
        for (size_t i = 0; i < ds->samples.size(); ++i) {
            const QAPair& qa = ds->samples[i];
            auto fail = [&](const Error& e, const char* phase) {
                if (!options.lenient) throw;
                report.warnings.push_back("stage " + ds->stage.id + " sample " +
                                          std::to_string(i) + " " + phase + ": " + e.what());
                ++report.skipped_samples;
            };

            try {
                ExtractionResult explicit_part = extract_triples(qa, gateway, backends.extractor);
                report.skipped_lines += explicit_part.skipped_lines;
                for (Triple t : explicit_part.triples) {
                    t.provenance = Provenance::Explicit;
                    t.variant.clear();
                    report.graph.add_triple(t, ds->stage);
                    ++report.explicit_triples;
                }
            } catch (const Error& e) {
                fail(e, "explicit extraction");
                continue;
            }

            if (!options.tacit_enabled) continue;
            CounterfactualVariant variant =
                options.variant.value_or(kVariantCycle[probe_counter % kVariantCycle.size()]);
            ++probe_counter;
            try {
                const BoundBackend& agent = backends.agents.at(ds->stage.id);
                std::string cf = generate_counterfactual(qa.instruction, variant, gateway, agent);
                RefinementResult refined = refine_counterfactual(
                    cf, ds->stage, gateway, agent, backends.evaluator, options.max_rounds);
                QAPair probed{refined.instruction, refined.answer, ds->stage};
                ExtractionResult tacit_part = extract_triples(probed, gateway, backends.extractor);
                report.skipped_lines += tacit_part.skipped_lines;
                for (Triple t : tacit_part.triples) {
                    t.provenance = Provenance::Tacit;
                    t.variant = to_string(variant);
                    report.graph.add_triple(t, ds->stage);
                    ++report.tacit_triples;
                }
            } catch (const Error& e) {
                fail(e, "tacit probing");
            }
        }
    }
    return report;
}

void KnowledgeGraph::merge_in(const KnowledgeGraph& other) {
    for (const StageLabel& s : other.stages()) register_stage(s);
    for (const auto& [name, node] : other.nodes_) {
        KnowledgeNode& mine = nodes_[name];
        mine.canonical_name = name;
        mine.stage_ids.insert(node.stage_ids.begin(), node.stage_ids.end());
        mine.surface_forms.insert(node.surface_forms.begin(), node.surface_forms.end());
    }
    for (const Edge& e : other.edges_) {
        auto key = std::make_tuple(e.head, e.relation, e.tail, e.provenance);
        if (!edge_keys_.insert(key).second) continue;
        edges_.push_back(e);
        size_t idx = edges_.size() - 1;
        adjacency_[e.head].push_back(idx);
        if (e.tail != e.head) adjacency_[e.tail].push_back(idx);
    }
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& other) const {
    if (stage_orders_ != other.stage_orders_) return false;
    if (nodes_.size() != other.nodes_.size()) return false;
    for (const auto& [name, node] : nodes_) {
        auto it = other.nodes_.find(name);
        if (it == other.nodes_.end()) return false;
        if (node.stage_ids != it->second.stage_ids) return false;
        if (node.surface_forms != it->second.surface_forms) return false;
    }
    auto edge_set = [](const KnowledgeGraph& g) {
        std::set<std::tuple<std::string, std::string, std::string, Provenance, std::string>> s;
        for (const Edge& e : g.edges_) {
            s.insert({e.head, e.relation, e.tail, e.provenance, e.variant});
        }
        return s;
    };
    return edge_set(*this) == edge_set(other);
}

KnowledgeGraph merge_graphs(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    KnowledgeGraph out;
    out.merge_in(a);
    out.merge_in(b);
    return out;
}

std::vector<const KnowledgeNode*> keyword_search(const KnowledgeGraph& graph,
                                                 const std::vector<std::string>& keywords) {
    std::set<std::string> wanted;
    for (const std::string& k : keywords) {
        std::string c = text::canonicalize(k);
        if (!c.empty()) wanted.insert(c);
    }
    std::vector<const KnowledgeNode*> out;
    if (wanted.empty()) return out;
    for (const KnowledgeNode* node : graph.all_nodes()) {
        std::set<std::string> tokens;
        for (const std::string& t : text::alnum_tokens(node->canonical_name)) tokens.insert(t);
        for (const std::string& surface : node->surface_forms) {
            for (const std::string& t : text::alnum_tokens(surface)) tokens.insert(t);
        }
        bool hit = false;
        for (const std::string& k : wanted) {
            if (tokens.contains(k)) {
                hit = true;
                break;
            }
        }
        if (hit) out.push_back(node);
    }
    return out;
}

std::vector<StageDataset> load_corpus(const std::string& path,
                                      const std::vector<StageLabel>& stages) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus: " + path);

    std::map<std::string, StageLabel> by_id;
    for (const StageLabel& s : stages) by_id[s.id] = s;

    std::map<std::string, std::vector<QAPair>> grouped;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("instruction") || !j.contains("response") || !j.contains("stage")) {
            throw IoError("corpus line " + std::to_string(line_no) +
                          " needs instruction, response, and stage");
        }
        std::string stage_id = j["stage"].get<std::string>();
        auto it = by_id.find(stage_id);
        if (it == by_id.end()) {
            throw IoError("corpus line " + std::to_string(line_no) + " names unknown stage " +
                          stage_id);
        }
        grouped[stage_id].push_back(QAPair{j["instruction"].get<std::string>(),
                                           j["response"].get<std::string>(), it->second});
    }

    std::vector<StageDataset> out;
    for (const StageLabel& s : stages) {
        auto it = grouped.find(s.id);
        if (it == grouped.end()) continue;
        out.push_back(StageDataset{s, std::move(it->second)});
    }
    return out;
}

}  // namespace cochain
