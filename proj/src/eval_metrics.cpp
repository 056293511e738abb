#include "cochain/eval_metrics.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "cochain/errors.hpp"
#include "cochain/text.hpp"

namespace cochain {

namespace {

using Tokens = std::vector<std::string>;

Tokens metric_tokens(const std::string& s, const char* side) {
    Tokens t = text::whitespace_tokens(s);
    if (t.empty()) {
        throw ValidationError(std::string("metric ") + side + " text has no tokens");
    }
    return t;
}

std::map<std::string, long> pooled_ngram_counts(const Tokens& toks, int max_n) {
    std::map<std::string, long> counts;
    const int n_toks = static_cast<int>(toks.size());
    for (int n = 1; n <= max_n; ++n) {
        for (int i = 0; i + n <= n_toks; ++i) {
            std::string gram = std::to_string(n);
            for (int k = 0; k < n; ++k) {
                gram.push_back('\x1f');
                gram += toks[static_cast<size_t>(i + k)];
            }
            ++counts[gram];
        }
    }
    return counts;
}

}  // namespace

double gleu(const std::string& candidate, const std::string& reference, int max_n) {
    if (max_n < 1) throw ValidationError("gleu needs max_n >= 1");
    Tokens cand = metric_tokens(candidate, "candidate");
    Tokens ref = metric_tokens(reference, "reference");

    auto cand_counts = pooled_ngram_counts(cand, max_n);
    auto ref_counts = pooled_ngram_counts(ref, max_n);

    long cand_total = 0, ref_total = 0, matched = 0;
    for (const auto& [gram, c] : cand_counts) {
        cand_total += c;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched += std::min(c, it->second);
    }
    for (const auto& [gram, c] : ref_counts) ref_total += c;

    double precision = static_cast<double>(matched) / static_cast<double>(cand_total);
    double recall = static_cast<double>(matched) / static_cast<double>(ref_total);
    return std::min(precision, recall);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    Tokens cand = metric_tokens(candidate, "candidate");
    Tokens ref = metric_tokens(reference, "reference");

    const size_t n = cand.size(), m = ref.size();
    std::vector<long> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            if (cand[i - 1] == ref[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    long lcs = prev[m];
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(n);
    double r = static_cast<double>(lcs) / static_cast<double>(m);
    return 2.0 * p * r / (p + r);
}

}  // namespace cochain
