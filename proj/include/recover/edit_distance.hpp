#pragma once

// Character-level Levenshtein distance and the normalized similarity
// derived from it. Used by fuzzy retrieval and by the guardrail
// similarity check.

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

namespace recover {

// Unit-cost insert/delete/substitute edit distance.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return n;
  std::vector<std::size_t> row(m + 1);
  for (std::size_t i = 0; i <= m; ++i) row[i] = i;
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t prev_diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= m; ++i) {
      const std::size_t del = row[i] + 1;
      const std::size_t ins = row[i - 1] + 1;
      const std::size_t sub = prev_diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      prev_diag = row[i];
      row[i] = std::min({del, ins, sub});
    }
  }
  return row[m];
}

// 1 - d(a,b) / max(|a|, |b|), in [0,1]. Two empty strings are identical.
inline double normalized_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

}  // namespace recover
