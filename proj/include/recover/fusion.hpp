#pragma once

// Hypothesis fusion (Tool 1). Four strategies produce the base
// transcript: pass through the greedy hypothesis, select the hypothesis
// with the most candidate-entity hits, merge all hypotheses ROVER-style
// around an entity-aware pivot, or delegate selection to the proposer
// backend (which may return entity edits in the same call).

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recover/alignment.hpp"
#include "recover/lexicon.hpp"
#include "recover/proposer.hpp"
#include "recover/retrieval.hpp"
#include "recover/text.hpp"

namespace recover {

enum class FusionStrategy { OneBest, EntityAwareSelect, RoverEnsemble, LlmSelect };

inline const char* fusion_strategy_name(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::OneBest: return "one-best";
    case FusionStrategy::EntityAwareSelect: return "entity-select";
    case FusionStrategy::RoverEnsemble: return "rover";
    case FusionStrategy::LlmSelect: return "llm-select";
  }
  return "unknown";
}

inline std::optional<FusionStrategy> parse_fusion_strategy(std::string_view name) {
  if (name == "one-best") return FusionStrategy::OneBest;
  if (name == "entity-select") return FusionStrategy::EntityAwareSelect;
  if (name == "rover") return FusionStrategy::RoverEnsemble;
  if (name == "llm-select") return FusionStrategy::LlmSelect;
  return std::nullopt;
}

struct FusionResult {
  std::string fused_text;
  std::optional<std::size_t> chosen_variant_index;  // absent for ROVER merges
  std::vector<std::size_t> per_variant_entity_hits;
  std::string provenance;
};

// Number of candidate phrases occurring as exact word-boundary
// substrings of the hypothesis; each candidate counts once.
inline std::size_t count_entity_hits(const TokenStream& hypothesis,
                                     const CandidateSet& candidates,
                                     const EntityLexicon& lexicon) {
  const auto norms = hypothesis.norms();
  std::size_t hits = 0;
  for (const auto& cand : candidates.candidates) {
    const auto& words = lexicon.entry(cand.phrase_index).norm_words;
    if (words.empty() || words.size() > norms.size()) continue;
    bool found = false;
    for (std::size_t i = 0; i + words.size() <= norms.size() && !found; ++i) {
      bool equal = true;
      for (std::size_t k = 0; k < words.size(); ++k) {
        if (norms[i + k] != words[k]) {
          equal = false;
          break;
        }
      }
      found = equal;
    }
    if (found) ++hits;
  }
  return hits;
}

namespace detail {

inline std::vector<std::size_t> entity_hits_per_variant(
    const std::vector<TokenStream>& hypotheses, const CandidateSet& candidates,
    const EntityLexicon& lexicon) {
  std::vector<std::size_t> hits;
  hits.reserve(hypotheses.size());
  for (const auto& h : hypotheses) hits.push_back(count_entity_hits(h, candidates, lexicon));
  return hits;
}

// argmax entity hits; ties go to the longer raw transcript, then the
// lower index.
inline std::size_t entity_aware_choice(const std::vector<std::size_t>& hits,
                                       const std::vector<TokenStream>& hypotheses) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < hypotheses.size(); ++i) {
    if (hits[i] > hits[best] ||
        (hits[i] == hits[best] &&
         hypotheses[i].raw.size() > hypotheses[best].raw.size())) {
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline FusionResult select_one_best(const std::vector<TokenStream>& hypotheses,
                                    const CandidateSet& candidates,
                                    const EntityLexicon& lexicon) {
  FusionResult r;
  r.fused_text = hypotheses.front().raw;
  r.chosen_variant_index = 0;
  r.provenance = fusion_strategy_name(FusionStrategy::OneBest);
  // hits reported for the chosen variant only
  r.per_variant_entity_hits.assign(hypotheses.size(), 0);
  r.per_variant_entity_hits[0] = count_entity_hits(hypotheses.front(), candidates, lexicon);
  return r;
}

inline FusionResult select_entity_aware(const std::vector<TokenStream>& hypotheses,
                                        const CandidateSet& candidates,
                                        const EntityLexicon& lexicon) {
  FusionResult r;
  r.per_variant_entity_hits = detail::entity_hits_per_variant(hypotheses, candidates, lexicon);
  const std::size_t chosen = detail::entity_aware_choice(r.per_variant_entity_hits, hypotheses);
  r.fused_text = hypotheses[chosen].raw;
  r.chosen_variant_index = chosen;
  r.provenance = fusion_strategy_name(FusionStrategy::EntityAwareSelect);
  return r;
}

// ROVER-style merge: entity-aware pivot, Needleman-Wunsch alignment of
// every other hypothesis onto it, then per-position plurality voting
// (ties favour the pivot). Insertion slots between pivot positions are
// emitted only when at least floor(N/2)+1 hypotheses insert the same
// normalized token at the same slot.
inline FusionResult fuse_rover(const std::vector<TokenStream>& hypotheses,
                               const CandidateSet& candidates,
                               const EntityLexicon& lexicon) {
  FusionResult r;
  r.per_variant_entity_hits = detail::entity_hits_per_variant(hypotheses, candidates, lexicon);
  r.provenance = fusion_strategy_name(FusionStrategy::RoverEnsemble);

  const std::size_t pivot_idx =
      detail::entity_aware_choice(r.per_variant_entity_hits, hypotheses);
  const TokenStream& pivot = hypotheses[pivot_idx];
  const std::size_t n = pivot.tokens.size();
  const std::size_t total = hypotheses.size();

  struct Vote {
    std::string norm;
    std::string surface;
    std::size_t hyp_index;
  };
  std::vector<std::vector<Vote>> position_votes(n);
  std::vector<std::vector<Vote>> slot_inserts(n + 1);

  const auto pivot_norms = pivot.norms();
  for (std::size_t h = 0; h < total; ++h) {
    if (h == pivot_idx) continue;
    const AlignmentPath path = align_global(pivot_norms, hypotheses[h].norms());
    std::size_t consumed = 0;
    for (const AlignOp& op : path.ops) {
      switch (op.type) {
        case AlignOpType::Match:
        case AlignOpType::Substitute:
          position_votes[op.a_index].push_back(
              Vote{hypotheses[h].tokens[op.b_index].norm,
                   hypotheses[h].tokens[op.b_index].surface, h});
          consumed = op.a_index + 1;
          break;
        case AlignOpType::Delete:
          consumed = op.a_index + 1;  // pivot token unmatched: no vote
          break;
        case AlignOpType::Insert:
          slot_inserts[consumed].push_back(
              Vote{hypotheses[h].tokens[op.b_index].norm,
                   hypotheses[h].tokens[op.b_index].surface, h});
          break;
      }
    }
  }

  const std::size_t insert_threshold = total / 2 + 1;

  std::vector<std::string> merged;
  bool differs_from_pivot = false;

  auto emit_slot = [&](std::size_t slot) {
    const auto& ins = slot_inserts[slot];
    if (ins.empty()) return;
    // Support is counted per (norm, occurrence ordinal): a hypothesis
    // inserting the token k+1 times at this slot supports ordinals 0..k.
    // The j-th sighting of a norm while scanning votes in (hyp, run)
    // order is exactly ordinal j, so one pass emits the right copies in
    // first-appearance order.
    std::map<std::string, std::map<std::size_t, std::size_t>> copies_by_hyp;
    for (const Vote& v : ins) copies_by_hyp[v.norm][v.hyp_index]++;
    std::map<std::string, std::size_t> sightings;
    for (const Vote& v : ins) {
      const std::size_t ordinal = sightings[v.norm]++;
      std::size_t supporters = 0;
      for (const auto& [hyp, copies] : copies_by_hyp[v.norm]) {
        (void)hyp;
        if (copies > ordinal) ++supporters;
      }
      if (supporters >= insert_threshold) {
        merged.push_back(v.surface);
        differs_from_pivot = true;
      }
    }
  };

  for (std::size_t pos = 0; pos <= n; ++pos) {
    emit_slot(pos);
    if (pos == n) break;

    const std::string& pivot_norm = pivot.tokens[pos].norm;
    std::map<std::string, std::size_t> counts;
    counts[pivot_norm] = 1;  // the pivot votes for itself
    for (const Vote& v : position_votes[pos]) counts[v.norm]++;
    std::size_t max_count = 0;
    for (const auto& [norm, c] : counts) {
      (void)norm;
      max_count = std::max(max_count, c);
    }
    if (counts[pivot_norm] == max_count) {
      merged.push_back(pivot.tokens[pos].surface);
    } else {
      // earliest hypothesis voting for a max-count token decides
      for (const Vote& v : position_votes[pos]) {
        if (counts[v.norm] == max_count) {
          merged.push_back(v.surface);
          differs_from_pivot = true;
          break;
        }
      }
    }
  }

  if (!differs_from_pivot) {
    r.fused_text = pivot.raw;  // unanimous merge is the identity on the pivot
  } else {
    r.fused_text = join_with_spaces(merged);
  }
  return r;
}

// Outcome of the fusion dispatcher. LLM-Select may carry entity edits
// proposed in the same backend call; they are forwarded to guardrails.
struct FuseOutcome {
  FusionResult result;
  std::vector<EditProposal> edits;
  std::optional<ProposeResult> proposer;  // set only for LLM-Select
  std::vector<std::string> warnings;
  bool backend_failed = false;
};

struct LlmSelectOptions {
  RetryPolicy retry;
};

// candidates_for_prompt renders the candidate set as (phrase, type)
// pairs in rank order.
inline std::vector<CandidatePhrase> candidate_phrases(const CandidateSet& candidates,
                                                      const EntityLexicon& lexicon) {
  std::vector<CandidatePhrase> out;
  out.reserve(candidates.candidates.size());
  for (const auto& c : candidates.candidates) {
    const auto& e = lexicon.entry(c.phrase_index);
    out.push_back(CandidatePhrase{e.phrase, e.entity_type});
  }
  return out;
}

inline FuseOutcome fuse(FusionStrategy strategy,
                        const std::vector<TokenStream>& hypotheses,
                        const CandidateSet& candidates, const EntityLexicon& lexicon,
                        Backend* proposer = nullptr,
                        const LlmSelectOptions& options = {}) {
  FuseOutcome out;
  switch (strategy) {
    case FusionStrategy::OneBest:
      out.result = select_one_best(hypotheses, candidates, lexicon);
      return out;
    case FusionStrategy::EntityAwareSelect:
      out.result = select_entity_aware(hypotheses, candidates, lexicon);
      return out;
    case FusionStrategy::RoverEnsemble:
      out.result = fuse_rover(hypotheses, candidates, lexicon);
      return out;
    case FusionStrategy::LlmSelect:
      break;
  }

  // LLM-Select: one call carries all variants and the candidate list;
  // the backend picks the base variant and may propose edits for it.
  ProposerRequest request;
  request.mode = ProposerMode::SelectAndCorrect;
  for (const auto& h : hypotheses) request.transcripts.push_back(h.raw);
  request.candidates = candidate_phrases(candidates, lexicon);

  out.result.per_variant_entity_hits =
      detail::entity_hits_per_variant(hypotheses, candidates, lexicon);
  out.result.provenance = fusion_strategy_name(FusionStrategy::LlmSelect);

  if (proposer == nullptr) {
    out.backend_failed = true;
    out.warnings.push_back("llm-select requires a proposer backend; falling back to variant 0");
    out.result.fused_text = hypotheses.front().raw;
    out.result.chosen_variant_index = 0;
    return out;
  }

  ProposeResult pr = propose(*proposer, request, options.retry);
  out.proposer = pr;
  for (const auto& w : pr.response.warnings) out.warnings.push_back(w);

  std::size_t chosen = 0;
  if (!pr.backend_ok) {
    out.backend_failed = true;
    out.warnings.push_back("proposer backend failed: " + pr.error +
                           "; falling back to variant 0 with no edits");
  } else {
    if (pr.response.chosen_variant.has_value()) {
      chosen = static_cast<std::size_t>(*pr.response.chosen_variant);
    }
    out.edits = pr.response.edits;
  }
  out.result.fused_text = hypotheses[chosen].raw;
  out.result.chosen_variant_index = chosen;
  return out;
}

}  // namespace recover
