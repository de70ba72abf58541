#pragma once

// Candidate entity retrieval. Every lexicon phrase is scored against the
// unified token pool of all hypotheses with three signals:
//
//   score = n_exact * w_exact + f_best * w_fuzzy + p_hit * w_phonetic
//
// where n_exact counts phrase words present verbatim in the pool, f_best
// is the best normalized Levenshtein similarity between any phrase word
// and any pool token of comparable length, and p_hit flags a phonetic
// key prefix collision. The top-K phrases by score form the candidate
// set handed to fusion and to the correction proposer.

#include <algorithm>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "recover/edit_distance.hpp"
#include "recover/lexicon.hpp"
#include "recover/phonetic.hpp"
#include "recover/text.hpp"

namespace recover {

struct RetrievalWeights {
  double w_exact = 1.0;
  double w_fuzzy = 1.2;
  double w_phonetic = 0.6;
  std::size_t fuzzy_len_window = 3;   // max character-length difference for fuzzy pairs
  std::size_t phonetic_prefix_len = 5;
  std::size_t top_k = 200;
};

// Unique normalized tokens across all hypotheses, with cached phonetic
// keys. Token order is sorted, so downstream iteration is deterministic.
struct TokenPool {
  std::vector<std::string> tokens;
  std::vector<std::string> keys;
  std::unordered_set<std::string> index;

  bool contains(const std::string& norm) const { return index.count(norm) != 0; }
};

inline TokenPool build_token_pool(const std::vector<TokenStream>& hypotheses) {
  TokenPool pool;
  for (const auto& h : hypotheses) {
    for (const auto& t : h.tokens) pool.index.insert(t.norm);
  }
  pool.tokens.assign(pool.index.begin(), pool.index.end());
  std::sort(pool.tokens.begin(), pool.tokens.end());
  pool.keys.reserve(pool.tokens.size());
  for (const auto& t : pool.tokens) pool.keys.push_back(phonetic_key(t));
  return pool;
}

struct SignalBreakdown {
  double score = 0.0;
  std::size_t n_exact = 0;
  double f_best = 0.0;
  bool p_hit = false;
};

inline SignalBreakdown score_entity(const LexiconEntry& entry, const TokenPool& pool,
                                    const RetrievalWeights& w) {
  SignalBreakdown out;
  for (const auto& word : entry.norm_words) {
    if (pool.contains(word)) ++out.n_exact;
  }

  if (out.n_exact > 0) {
    out.f_best = 1.0;  // an exact hit is a similarity-1 pair inside any window
  } else {
    for (const auto& word : entry.norm_words) {
      for (const auto& tok : pool.tokens) {
        const std::size_t longer = std::max(word.size(), tok.size());
        const std::size_t shorter = std::min(word.size(), tok.size());
        if (longer - shorter > w.fuzzy_len_window) continue;
        out.f_best = std::max(out.f_best, normalized_similarity(word, tok));
        if (out.f_best == 1.0) break;
      }
      if (out.f_best == 1.0) break;
    }
  }

  for (const auto& word : entry.norm_words) {
    const std::string key = phonetic_key(word);
    if (key.empty()) continue;
    for (const auto& pool_key : pool.keys) {
      if (phonetic_prefix_hit(key, pool_key, w.phonetic_prefix_len)) {
        out.p_hit = true;
        break;
      }
    }
    if (out.p_hit) break;
  }

  out.score = static_cast<double>(out.n_exact) * w.w_exact + out.f_best * w.w_fuzzy +
              (out.p_hit ? w.w_phonetic : 0.0);
  return out;
}

struct Candidate {
  std::size_t phrase_index = 0;
  double score = 0.0;
  std::size_t n_exact = 0;
  double f_best = 0.0;
  bool p_hit = false;
};

struct CandidateSet {
  std::string segment_id;
  std::vector<Candidate> candidates;  // score-descending, length <= top_k
};

// Ties break toward the shorter normalized phrase, then lexicographic,
// so rankings are identical across runs and platforms.
inline CandidateSet retrieve_top_k(const EntityLexicon& lexicon,
                                   const std::vector<TokenStream>& hypotheses,
                                   const RetrievalWeights& weights,
                                   std::string segment_id = {}) {
  const TokenPool pool = build_token_pool(hypotheses);
  CandidateSet set;
  set.segment_id = std::move(segment_id);
  set.candidates.reserve(lexicon.size());
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const SignalBreakdown s = score_entity(lexicon.entry(i), pool, weights);
    set.candidates.push_back(Candidate{i, s.score, s.n_exact, s.f_best, s.p_hit});
  }
  std::sort(set.candidates.begin(), set.candidates.end(),
            [&lexicon](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              const auto& na = lexicon.entry(a.phrase_index).norm;
              const auto& nb = lexicon.entry(b.phrase_index).norm;
              if (na.size() != nb.size()) return na.size() < nb.size();
              return na < nb;
            });
  if (set.candidates.size() > weights.top_k) set.candidates.resize(weights.top_k);
  return set;
}

}  // namespace recover
