#pragma once

#include <string>
#include <vector>

#include "cochain/workflow_types.hpp"

namespace cochain::prompts {

// Every model-facing prompt is assembled here and nowhere else. Scripted
// fixtures key on request fingerprints, so this text is part of the on-disk
// contract: changing a template invalidates recorded scripts.

std::string extractor_system();
std::string extractor_user(const std::string& instruction, const std::string& response);

std::string counterfactual_system();
std::string counterfactual_user(CounterfactualVariant variant, const std::string& instruction);

std::string agent_system(const std::string& stage_id);

std::string evaluator_system();
std::string evaluator_user(const std::string& instruction, const std::string& answer);

std::string distill_system();
std::string distill_user(const std::string& stage_id, const std::string& answer);

std::string rank_system();
std::string rank_user(const std::vector<std::string>& candidates, int m);

std::string next_question_system();
std::string next_question_user(const std::string& prompt_text, const std::string& next_stage_id);

std::string keyword_system();
std::string keyword_user(const std::string& query);

const std::string& backbone_preamble();
const std::string& knowledge_header();
const std::string& causal_header();
const std::string& chain_header();
const std::string& user_need_header();
const std::string& none_retrieved();

}  // namespace cochain::prompts
