#pragma once

#include <string>

namespace cochain {

// Both metrics tokenize by lowercasing and splitting on whitespace, and both
// raise ValidationError when either side has no tokens. Values lie in [0, 1]
// and identical texts score 1.0.

// Pooled n-gram overlap for orders 1..max_n: clipped multiset matches over
// the pooled n-gram counts, then min(precision, recall).
double gleu(const std::string& candidate, const std::string& reference, int max_n = 4);

// Longest-common-subsequence F-measure: P = LCS/|cand|, R = LCS/|ref|,
// F = 2PR/(P+R), 0 when the LCS is empty.
double rouge_l(const std::string& candidate, const std::string& reference);

}  // namespace cochain
