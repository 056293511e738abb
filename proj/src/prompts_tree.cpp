#include "cochain/prompts_tree.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "cochain/errors.hpp"
#include "cochain/prompt_templates.hpp"
#include "cochain/text.hpp"
#include "json.hpp"

namespace cochain {

using nlohmann::json;

namespace {

std::string format_id(size_t n) {
    std::string digits = std::to_string(n);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "n" + digits;
}

}  // namespace

PromptsTree PromptsTree::create(const QAPair& seed, int branching_limit) {
    if (text::trim(seed.instruction).empty()) {
        throw ValidationError("tree seed needs a non-empty instruction");
    }
    if (branching_limit < 1) throw ValidationError("branching limit must be >= 1");
    PromptsTree t;
    t.branching_limit_ = branching_limit;
    PromptNode root;
    root.id = format_id(t.counter_++);
    root.prompt_text = seed.instruction;
    root.evidence = seed;
    t.root_id_ = root.id;
    t.nodes_[root.id] = std::move(root);
    return t;
}

const PromptNode& PromptsTree::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ValidationError("no tree node with id " + id);
    return it->second;
}

std::vector<std::string> PromptsTree::ids() const {
    std::vector<std::string> out;
    out.reserve(nodes_.size());
    for (const auto& [id, n] : nodes_) out.push_back(id);
    return out;
}

int PromptsTree::depth() const {
    int deepest = 0;
    for (const auto& [id, n] : nodes_) {
        int d = 0;
        const PromptNode* cur = &n;
        while (!cur->parent.empty()) {
            ++d;
            cur = &nodes_.at(cur->parent);
        }
        deepest = std::max(deepest, d);
    }
    return deepest;
}

std::string PromptsTree::next_id() { return format_id(counter_++); }

std::string PromptsTree::add_child(const std::string& parent_id, const StageLabel& stage,
                                   const std::string& prompt_text, const QAPair& evidence) {
    auto it = nodes_.find(parent_id);
    if (it == nodes_.end()) throw ValidationError("no tree node with id " + parent_id);
    if (text::trim(prompt_text).empty()) {
        throw ValidationError("stage prompt text must be non-empty");
    }
    PromptNode& parent = it->second;
    if (static_cast<int>(parent.children.size()) >= branching_limit_) {
        throw ValidationError("node " + parent_id + " is at the branching limit");
    }
    if (parent.stage.has_value() && stage.order <= parent.stage->order) {
        throw ValidationError("child stage must come after the parent stage");
    }
    PromptNode child;
    child.id = next_id();
    child.stage = stage;
    child.prompt_text = prompt_text;
    child.evidence = evidence;
    child.parent = parent_id;
    parent.children.push_back(child.id);
    std::string id = child.id;
    nodes_[id] = std::move(child);
    return id;
}

void PromptsTree::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write tree file: " + path);
    for (const auto& [id, n] : nodes_) {
        json j;
        j["children"] = n.children;
        j["evidence_ref"] = {{"a", n.evidence.response},
                             {"q", n.evidence.instruction},
                             {"stage", n.evidence.stage.id}};
        j["id"] = n.id;
        if (n.id == root_id_) j["m"] = branching_limit_;
        j["parent"] = n.parent.empty() ? json() : json(n.parent);
        j["prompt"] = n.prompt_text;
        j["stage"] = n.stage.has_value() ? json(n.stage->id) : json();
        out << j.dump() << '\n';
    }
}

PromptsTree PromptsTree::load(const std::string& path, const std::vector<StageLabel>& stages) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tree file: " + path);

    std::map<std::string, StageLabel> by_id;
    for (const StageLabel& s : stages) by_id[s.id] = s;

    PromptsTree t;
    std::string line;
    size_t line_no = 0;
    size_t max_counter = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("tree line " + std::to_string(line_no) + ": " + e.what());
        }
        PromptNode n;
        n.id = j.at("id").get<std::string>();
        if (!j.at("stage").is_null()) {
            std::string sid = j["stage"].get<std::string>();
            auto it = by_id.find(sid);
            if (it == by_id.end()) {
                throw IoError("tree node " + n.id + " names unknown stage " + sid);
            }
            n.stage = it->second;
        }
        n.prompt_text = j.at("prompt").get<std::string>();
        if (!j.at("parent").is_null()) n.parent = j["parent"].get<std::string>();
        for (const auto& c : j.at("children")) n.children.push_back(c.get<std::string>());
        const json& ev = j.at("evidence_ref");
        n.evidence.instruction = ev.at("q").get<std::string>();
        n.evidence.response = ev.at("a").get<std::string>();
        std::string ev_stage = ev.at("stage").get<std::string>();
        if (auto it = by_id.find(ev_stage); it != by_id.end()) n.evidence.stage = it->second;

        if (!n.stage.has_value()) {
            if (!t.root_id_.empty()) throw IoError("tree has more than one root");
            t.root_id_ = n.id;
            if (!j.contains("m")) throw IoError("root line lacks the branching limit");
            t.branching_limit_ = j["m"].get<int>();
        }
        if (n.id.size() > 1 && n.id[0] == 'n') {
            max_counter = std::max(max_counter, static_cast<size_t>(std::stoul(n.id.substr(1))));
        }
        if (!t.nodes_.emplace(n.id, std::move(n)).second) {
            throw IoError("duplicate tree node id at line " + std::to_string(line_no));
        }
    }
    if (t.root_id_.empty()) throw IoError("tree file has no root node");
    t.counter_ = max_counter + 1;

    for (const auto& [id, n] : t.nodes_) {
        if (id == t.root_id_) continue;
        auto pit = t.nodes_.find(n.parent);
        if (pit == t.nodes_.end()) {
            throw IoError("tree node " + id + " has unknown parent " + n.parent);
        }
        if (std::find(pit->second.children.begin(), pit->second.children.end(), id) ==
            pit->second.children.end()) {
            throw IoError("tree node " + id + " missing from its parent's child list");
        }
        if (pit->second.stage.has_value() && n.stage.has_value() &&
            n.stage->order <= pit->second.stage->order) {
            throw IoError("tree node " + id + " does not advance the stage order");
        }
        if (text::trim(n.prompt_text).empty()) {
            throw IoError("tree node " + id + " has empty prompt text");
        }
        if (static_cast<int>(pit->second.children.size()) > t.branching_limit_) {
            throw IoError("tree node " + n.parent + " exceeds the branching limit");
        }
    }
    return t;
}

std::vector<std::string> distill_prompts(const std::string& answer, const StageLabel& stage,
                                         Gateway& gateway, const BoundBackend& agent) {
    if (text::trim(answer).empty()) {
        throw ValidationError("cannot distill prompts from an empty answer");
    }
    std::string reply =
        ask(gateway, agent, prompts::distill_system(), prompts::distill_user(stage.id, answer));
    std::vector<std::string> out;
    for (const std::string& raw : text::split_lines(reply)) {
        std::string line = text::trim(raw);
        size_t pos = 0;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == 0 || pos >= line.size()) continue;
        if (line[pos] != '.' && line[pos] != ')') continue;
        std::string body = text::trim(line.substr(pos + 1));
        if (!body.empty()) out.push_back(std::move(body));
    }
    if (out.empty()) {
        throw DistillationEmptyError("distillation yielded no parseable prompts for stage " +
                                     stage.id);
    }
    return out;
}

std::vector<std::string> self_evaluate(const std::vector<std::string>& candidates, int m,
                                       Gateway& gateway, const BoundBackend& agent) {
    if (candidates.empty()) throw ValidationError("cannot rank zero candidates");
    if (m < 1) throw ValidationError("selection needs m >= 1");

    std::string reply =
        ask(gateway, agent, prompts::rank_system(), prompts::rank_user(candidates, m));

    const size_t n = candidates.size();
    std::vector<size_t> order;
    std::vector<bool> taken(n, false);
    size_t value = 0;
    bool in_number = false;
    auto flush = [&] {
        if (in_number && value >= 1 && value <= n && !taken[value - 1]) {
            order.push_back(value - 1);
            taken[value - 1] = true;
        }
        value = 0;
        in_number = false;
    };
    for (char c : reply) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            value = value * 10 + static_cast<size_t>(c - '0');
            in_number = true;
        } else {
            flush();
        }
    }
    flush();

    const size_t want = std::min(static_cast<size_t>(m), n);
    if (order.empty()) {
        return {candidates.begin(), candidates.begin() + static_cast<long>(want)};
    }
    for (size_t i = 0; i < n && order.size() < want; ++i) {
        if (!taken[i]) {
            order.push_back(i);
            taken[i] = true;
        }
    }
    std::vector<std::string> out;
    out.reserve(want);
    for (size_t i = 0; i < want; ++i) out.push_back(candidates[order[i]]);
    return out;
}

std::string generate_next_question(const std::string& prompt_text, const StageLabel& next_stage,
                                   Gateway& gateway, const BoundBackend& agent) {
    if (text::trim(prompt_text).empty()) {
        throw ValidationError("cannot generate a question from an empty prompt");
    }
    std::string reply = ask(gateway, agent, prompts::next_question_system(),
                            prompts::next_question_user(prompt_text, next_stage.id));
    return text::trim(reply);
}

TreeBuildReport build_tree(const QAPair& seed, const std::vector<StageLabel>& stages,
                           const std::map<std::string, BoundBackend>& agents, int branching_limit,
                           Gateway& gateway) {
    if (stages.empty()) throw ValidationError("tree build needs at least one stage");
    if (text::trim(seed.response).empty()) {
        throw ValidationError("tree seed needs a non-empty response");
    }
    for (const StageLabel& s : stages) {
        auto it = agents.find(s.id);
        if (it == agents.end() || it->second.backend == nullptr) {
            throw ValidationError("tree build needs an agent for stage " + s.id);
        }
    }

    TreeBuildReport report{PromptsTree::create(seed, branching_limit), {}};
    PromptsTree& tree = report.tree;

    struct Pending {
        std::string node_id;
        std::string question;
        std::string answer;
        size_t stage_idx;
    };
    std::deque<Pending> queue;
    queue.push_back({tree.root_id(), seed.instruction, seed.response, 0});

    while (!queue.empty()) {
        Pending cur = std::move(queue.front());
        queue.pop_front();
        const StageLabel& stage = stages[cur.stage_idx];
        const BoundBackend& agent = agents.at(stage.id);

        std::vector<std::string> best;
        try {
            std::vector<std::string> candidates =
                distill_prompts(cur.answer, stage, gateway, agent);
            best = self_evaluate(candidates, branching_limit, gateway, agent);
        } catch (const Error& e) {
            report.warnings.push_back("stage " + stage.id + " under node " + cur.node_id + ": " +
                                      e.what());
            continue;
        }

        for (const std::string& prompt_text : best) {
            std::string child_id = tree.add_child(cur.node_id, stage, prompt_text,
                                                  QAPair{cur.question, cur.answer, stage});
            if (cur.stage_idx + 1 >= stages.size()) continue;
            const StageLabel& next_stage = stages[cur.stage_idx + 1];
            try {
                std::string question =
                    generate_next_question(prompt_text, next_stage, gateway, agent);
                std::string answer = ask(gateway, agents.at(next_stage.id),
                                         prompts::agent_system(next_stage.id), question);
                queue.push_back({child_id, question, answer, cur.stage_idx + 1});
            } catch (const Error& e) {
                report.warnings.push_back("stage " + next_stage.id + " under node " + child_id +
                                          ": " + e.what());
            }
        }
    }

    if (tree.size() <= 1) {
        throw TreeEmptyError("tree build produced no stage prompts");
    }
    return report;
}

ChainRetrieval retrieve_prompt_chain(const PromptsTree& tree, const std::string& query,
                                     Encoder& encoder,
                                     const std::set<std::string>& exclude_stages) {
    if (tree.size() <= 1) throw TreeEmptyError("prompts tree has no stage nodes");
    if (text::trim(query).empty()) {
        throw ValidationError("cannot retrieve a chain for an empty query");
    }

    EmbeddingVector query_vec = encoder.encode(query);
    ChainRetrieval out;
    out.nodes_visited = 1;

    const PromptNode* cur = &tree.node(tree.root_id());
    out.chain.node_ids.push_back(cur->id);
    while (!cur->children.empty()) {
        const PromptNode* best = nullptr;
        double best_score = 0.0;
        for (const std::string& child_id : cur->children) {
            const PromptNode& child = tree.node(child_id);
            double score = cosine(encoder.encode(child.prompt_text), query_vec);
            ++out.nodes_visited;
            if (best == nullptr || score > best_score) {
                best = &child;
                best_score = score;
            }
        }
        cur = best;
        out.chain.node_ids.push_back(cur->id);
    }

    for (const std::string& id : out.chain.node_ids) {
        const PromptNode& n = tree.node(id);
        if (!n.stage.has_value()) continue;
        if (exclude_stages.contains(n.stage->id)) continue;
        out.chain.texts.push_back(n.prompt_text);
        out.chain.stages.push_back(n.stage->id);
    }
    if (out.chain.texts.empty()) {
        throw AllStagesExcludedError("stage exclusion removed every prompt from the chain");
    }
    return out;
}

}  // namespace cochain
