#pragma once

#include <array>
#include <string>

namespace cochain {

// A workflow stage: stable id plus its position in the workflow order.
struct StageLabel {
    std::string id;
    int order = 0;

    bool operator==(const StageLabel& other) const = default;
    bool operator<(const StageLabel& other) const {
        if (order != other.order) return order < other.order;
        return id < other.id;
    }
};

struct QAPair {
    std::string instruction;
    std::string response;
    StageLabel stage;
};

enum class CounterfactualVariant { causal, adversarial, substitution, extreme, backward_causal };

// Round-robin order used when the variant mode is "auto".
inline constexpr std::array<CounterfactualVariant, 5> kVariantCycle = {
    CounterfactualVariant::causal, CounterfactualVariant::adversarial,
    CounterfactualVariant::substitution, CounterfactualVariant::extreme,
    CounterfactualVariant::backward_causal};

std::string to_string(CounterfactualVariant v);

enum class Verdict { reasonable, ambiguous, unreasonable };

std::string to_string(Verdict v);

struct VerdictReport {
    Verdict label = Verdict::ambiguous;
    std::string feedback;
};

}  // namespace cochain
