#pragma once

// Token-sequence alignment, used twice with different objectives:
//   - align_global: Needleman-Wunsch similarity alignment (+1 match,
//     -1 mismatch, -1 gap) for ROVER voting against a pivot;
//   - align_words: minimum-edit-distance alignment for scoring, from
//     which C/S/D/I counts are read off.
// Both have a fixed traceback preference so results are deterministic.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace recover {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

enum class AlignOpType { Match, Substitute, Delete, Insert };

// a is the pivot/reference sequence, b the other/hypothesis sequence.
// Delete consumes only a; Insert consumes only b.
struct AlignOp {
  AlignOpType type;
  std::size_t a_index = kNoIndex;
  std::size_t b_index = kNoIndex;
};

struct AlignmentPath {
  std::vector<AlignOp> ops;
  int score = 0;           // align_global objective
  std::size_t distance = 0;  // align_words objective
};

// Needleman-Wunsch with match +1, mismatch -1, gap -1. Traceback prefers
// diagonal, then a gap in b (a-token unmatched), then a gap in a.
inline AlignmentPath align_global(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i) dp[i][0] = -static_cast<int>(i);
  for (std::size_t j = 1; j <= m; ++j) dp[0][j] = -static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 1 : -1);
      const int up = dp[i - 1][j] - 1;
      const int left = dp[i][j - 1] - 1;
      dp[i][j] = std::max({diag, up, left});
    }
  }

  AlignmentPath path;
  path.score = dp[n][m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dp[i][j] == dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 1 : -1)) {
      path.ops.push_back(AlignOp{a[i - 1] == b[j - 1] ? AlignOpType::Match
                                                      : AlignOpType::Substitute,
                                 i - 1, j - 1});
      --i; --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] - 1) {
      path.ops.push_back(AlignOp{AlignOpType::Delete, i - 1, kNoIndex});
      --i;
    } else {
      path.ops.push_back(AlignOp{AlignOpType::Insert, kNoIndex, j - 1});
      --j;
    }
  }
  std::reverse(path.ops.begin(), path.ops.end());
  return path;
}

// Minimum unit-cost edit alignment. Traceback prefers match/substitute,
// then deletion, then insertion.
inline AlignmentPath align_words(const std::vector<std::string>& ref,
                                 const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t del = dp[i - 1][j] + 1;
      const std::size_t ins = dp[i][j - 1] + 1;
      dp[i][j] = std::min({diag, del, ins});
    }
  }

  AlignmentPath path;
  path.distance = dp[n][m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dp[i][j] == dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      path.ops.push_back(AlignOp{ref[i - 1] == hyp[j - 1] ? AlignOpType::Match
                                                          : AlignOpType::Substitute,
                                 i - 1, j - 1});
      --i; --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      path.ops.push_back(AlignOp{AlignOpType::Delete, i - 1, kNoIndex});
      --i;
    } else {
      path.ops.push_back(AlignOp{AlignOpType::Insert, kNoIndex, j - 1});
      --j;
    }
  }
  std::reverse(path.ops.begin(), path.ops.end());
  return path;
}

}  // namespace recover
