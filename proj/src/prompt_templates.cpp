#include "cochain/prompt_templates.hpp"

#include "cochain/errors.hpp"

namespace cochain {

std::string to_string(CounterfactualVariant v) {
    switch (v) {
        case CounterfactualVariant::causal: return "causal";
        case CounterfactualVariant::adversarial: return "adversarial";
        case CounterfactualVariant::substitution: return "substitution";
        case CounterfactualVariant::extreme: return "extreme";
        case CounterfactualVariant::backward_causal: return "backward_causal";
    }
    throw ValidationError("unknown counterfactual variant");
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::reasonable: return "reasonable";
        case Verdict::ambiguous: return "ambiguous";
        case Verdict::unreasonable: return "unreasonable";
    }
    throw ValidationError("unknown verdict");
}

namespace prompts {

namespace {

const char* variant_directive(CounterfactualVariant v) {
    switch (v) {
        case CounterfactualVariant::causal:
            return "Alter one causal premise of the task so the stated cause no longer holds, "
                   "then ask what follows.";
        case CounterfactualVariant::adversarial:
            return "Challenge the task's strongest assumption with a worst-case condition that "
                   "an adversary could force.";
        case CounterfactualVariant::substitution:
            return "Substitute a key resource, material, or method in the task with a plausible "
                   "alternative and ask how the plan changes.";
        case CounterfactualVariant::extreme:
            return "Push one quantity or constraint in the task to an extreme value and ask "
                   "what breaks first.";
        case CounterfactualVariant::backward_causal:
            return "Start from the task's desired outcome and reason backward: ask what must "
                   "have been true upstream for it to hold.";
    }
    throw ValidationError("unknown counterfactual variant");
}

}  // namespace

std::string extractor_system() {
    return "You extract knowledge triples from workflow question-answer pairs. "
           "Reply only with lines of the form (head | relation | tail). "
           "When the text states a dependency with phrases such as \"depends on\", "
           "\"relies on\", or \"applies to\", keep that exact phrase as the relation. "
           "No commentary, no numbering.";
}

std::string extractor_user(const std::string& instruction, const std::string& response) {
    return "Question:\n" + instruction + "\n\nAnswer:\n" + response +
           "\n\nList the knowledge triples.";
}

std::string counterfactual_system() {
    return "You write counterfactual probing questions for workflow tasks. "
           "Reply with a single self-contained question and nothing else.";
}

std::string counterfactual_user(CounterfactualVariant variant, const std::string& instruction) {
    return std::string("Probe style: ") + to_string(variant) + ". " + variant_directive(variant) +
           "\n\nOriginal task:\n" + instruction + "\n\nWrite the counterfactual question.";
}

std::string agent_system(const std::string& stage_id) {
    return "You are the expert for the " + stage_id +
           " stage of a multi-stage business workflow. Answer from this stage's "
           "perspective, concretely and within its constraints.";
}

std::string evaluator_system() {
    return "You judge whether an answer to a counterfactual workflow question is sound. "
           "Reply with two lines:\nVERDICT: reasonable | ambiguous | unreasonable\n"
           "FEEDBACK: one sentence of guidance (required unless the verdict is reasonable).";
}

std::string evaluator_user(const std::string& instruction, const std::string& answer) {
    return "Question:\n" + instruction + "\n\nAnswer:\n" + answer + "\n\nJudge the answer.";
}

std::string distill_system() {
    return "You distill reusable guidance prompts from a stage answer. Each prompt is one "
           "imperative sentence another team could follow. Reply only with a numbered list, "
           "one prompt per line, like:\n1. First prompt\n2. Second prompt";
}

std::string distill_user(const std::string& stage_id, const std::string& answer) {
    return "Stage: " + stage_id + "\n\nStage answer:\n" + answer +
           "\n\nDistill the guidance prompts.";
}

std::string rank_system() {
    return "You rank candidate guidance prompts by how actionable and transferable they are. "
           "Reply with one line: the candidate numbers in descending quality order, "
           "comma-separated, like: 3,1,2";
}

std::string rank_user(const std::vector<std::string>& candidates, int m) {
    std::string out = "Keep the best " + std::to_string(m) + " of these candidates:\n";
    for (size_t i = 0; i < candidates.size(); ++i) {
        out += std::to_string(i + 1) + ". " + candidates[i] + "\n";
    }
    out += "\nRank them.";
    return out;
}

std::string next_question_system() {
    return "You connect workflow stages. Given a guidance prompt adopted at one stage, write "
           "the single question the next stage must answer to carry it out. Reply with the "
           "question only.";
}

std::string next_question_user(const std::string& prompt_text, const std::string& next_stage_id) {
    return "Adopted prompt:\n" + prompt_text + "\n\nNext stage: " + next_stage_id +
           "\n\nWrite the question for that stage.";
}

std::string keyword_system() {
    return "You extract the content keywords from a workflow question. Reply with the "
           "keywords only, comma-separated, lowercase.";
}

std::string keyword_user(const std::string& query) { return "Question:\n" + query; }

const std::string& backbone_preamble() {
    static const std::string text =
        "You are an assistant for multi-stage business workflow decisions. Using the "
        "retrieved workflow knowledge, the cross-stage causal chains, and the stage "
        "guidance prompts below, give one focused, feasible answer to the user need. "
        "Respect the constraints of every stage involved.";
    return text;
}

const std::string& knowledge_header() {
    static const std::string text = "## Workflow knowledge";
    return text;
}

const std::string& causal_header() {
    static const std::string text = "## Cross-stage causal chains";
    return text;
}

const std::string& chain_header() {
    static const std::string text = "## Stage guidance prompts";
    return text;
}

const std::string& user_need_header() {
    static const std::string text = "## User need";
    return text;
}

const std::string& none_retrieved() {
    static const std::string text = "(none retrieved)";
    return text;
}

}  // namespace prompts
}  // namespace cochain
