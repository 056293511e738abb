#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cochain::text {

// Lowercase (ASCII), trim ends, collapse internal whitespace runs to one space.
std::string canonicalize(std::string_view s);

// Lowercase tokens split on non-alphanumeric boundaries. "Cost-optimization!" -> {cost, optimization}
std::vector<std::string> alnum_tokens(std::string_view s);

// Lowercase tokens split on whitespace only; punctuation stays attached.
// This is the metric tokenizer, distinct from alnum_tokens on purpose.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Number of whitespace-separated chunks. The local token-count rule.
long count_tokens(std::string_view s);

std::string trim(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

uint64_t fnv1a64(std::string_view s);

// Stable request fingerprint: model id, system text, user text joined with a
// 0x1f separator, FNV-1a 64 hashed, rendered as 16 hex digits. Temperature and
// sampling knobs are excluded by design.
std::string fingerprint(std::string_view model_id, std::string_view system_text,
                        std::string_view user_text);

}  // namespace cochain::text
