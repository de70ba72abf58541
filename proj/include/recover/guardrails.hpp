#pragma once

// Verification and application of proposed edits (Tool 3). Five checks,
// in order: the replacement must be a lexicon phrase; case-only changes
// are discarded; wrong offsets are relocated to the nearest occurrence
// of the find span; the find/replace similarity must clear a threshold;
// and application skips edits overlapping an earlier one. All failures
// are verdicts, never exceptions.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recover/edit_distance.hpp"
#include "recover/lexicon.hpp"
#include "recover/proposer.hpp"
#include "recover/text.hpp"

namespace recover {

struct GuardrailConfig {
  double min_edit_similarity = 0.5;
  bool allow_case_only = false;
  bool lexicon_match_case_insensitive = true;
};

enum class RejectionCode { None, NotInLexicon, CaseOnly, SpanNotFound, LowSimilarity, Overlap };

inline const char* rejection_code_name(RejectionCode c) {
  switch (c) {
    case RejectionCode::None: return "none";
    case RejectionCode::NotInLexicon: return "not_in_lexicon";
    case RejectionCode::CaseOnly: return "case_only";
    case RejectionCode::SpanNotFound: return "span_not_found";
    case RejectionCode::LowSimilarity: return "low_similarity";
    case RejectionCode::Overlap: return "overlap";
  }
  return "unknown";
}

struct VerificationOutcome {
  EditProposal edit;  // replace canonicalized and offsets relocated when verified
  EditStatus verdict = EditStatus::Rejected;
  RejectionCode rejection_code = RejectionCode::None;
  bool relocated = false;
  double similarity = 0.0;  // check-4 value, recorded for the audit log
};

namespace detail {

inline std::vector<std::size_t> find_occurrences(std::string_view text,
                                                 std::string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty()) return out;
  std::size_t pos = text.find(needle);
  while (pos != std::string_view::npos) {
    out.push_back(pos);
    pos = text.find(needle, pos + 1);
  }
  return out;
}

inline std::vector<std::size_t> find_occurrences_ci(std::string_view text,
                                                    std::string_view needle) {
  const std::string lt = EntityLexicon::lowercase_ascii(text);
  const std::string ln = EntityLexicon::lowercase_ascii(needle);
  return find_occurrences(lt, ln);
}

inline std::size_t nearest_occurrence(const std::vector<std::size_t>& occurrences,
                                      std::size_t claimed) {
  std::size_t best = occurrences.front();
  for (std::size_t occ : occurrences) {
    const std::size_t d_occ = occ > claimed ? occ - claimed : claimed - occ;
    const std::size_t d_best = best > claimed ? best - claimed : claimed - best;
    if (d_occ < d_best) best = occ;  // ties keep the leftmost
  }
  return best;
}

}  // namespace detail

inline VerificationOutcome verify_edit(const EditProposal& proposal,
                                       std::string_view transcript,
                                       const EntityLexicon& lexicon,
                                       const GuardrailConfig& config) {
  VerificationOutcome out;
  out.edit = proposal;
  out.similarity =
      normalized_similarity(normalize_text(proposal.find), normalize_text(proposal.replace));

  auto reject = [&](RejectionCode code) {
    out.verdict = EditStatus::Rejected;
    out.rejection_code = code;
    out.edit.status = EditStatus::Rejected;
    return out;
  };

  if (proposal.find.empty()) return reject(RejectionCode::SpanNotFound);

  // (1) replacement must be a lexicon phrase; render canonical casing
  std::optional<std::size_t> phrase_index =
      config.lexicon_match_case_insensitive
          ? lexicon.find_case_insensitive(proposal.replace)
          : lexicon.find_exact(proposal.replace);
  if (!phrase_index.has_value()) return reject(RejectionCode::NotInLexicon);
  out.edit.replace = lexicon.entry(*phrase_index).phrase;

  // (2) case/punctuation-only rewrites are noise, not corrections
  if (!config.allow_case_only &&
      normalize_text(proposal.find) == normalize_text(out.edit.replace)) {
    return reject(RejectionCode::CaseOnly);
  }

  // (3) trust the claimed offsets only if they reproduce the find span;
  // otherwise relocate to the occurrence nearest the claim
  const std::size_t claimed_start = proposal.char_start;
  const bool claim_valid =
      proposal.char_end <= transcript.size() && proposal.char_start < proposal.char_end &&
      transcript.substr(proposal.char_start, proposal.char_end - proposal.char_start) ==
          proposal.find;
  if (claim_valid) {
    out.edit.char_end = proposal.char_start + proposal.find.size();
  } else {
    std::vector<std::size_t> occ = detail::find_occurrences(transcript, proposal.find);
    if (occ.empty()) occ = detail::find_occurrences_ci(transcript, proposal.find);
    if (occ.empty()) return reject(RejectionCode::SpanNotFound);
    const std::size_t start = detail::nearest_occurrence(occ, claimed_start);
    out.edit.char_start = start;
    out.edit.char_end = start + proposal.find.size();
    out.relocated = true;
  }

  // (4) unrelated substitutions fail the similarity floor
  if (out.similarity < config.min_edit_similarity) {
    return reject(RejectionCode::LowSimilarity);
  }

  out.verdict = EditStatus::Verified;
  out.edit.status = EditStatus::Verified;
  return out;
}

struct AppliedEdit {
  EditProposal edit;       // offsets into the original transcript
  std::size_t out_start = 0;  // offsets into the corrected transcript
  std::size_t out_end = 0;
};

struct ApplyResult {
  std::string corrected;
  std::vector<VerificationOutcome> outcomes;  // input outcomes, with overlap skips rejected
  std::vector<AppliedEdit> applied;
};

// (5) Verified edits sorted by start (ties: longer find first, then
// proposal order) are spliced left to right on the original offsets;
// any edit whose span intersects an already-applied one is skipped and
// recorded as an overlap rejection.
inline ApplyResult apply_edits(std::string_view transcript,
                               std::vector<VerificationOutcome> outcomes) {
  ApplyResult result;
  result.outcomes = std::move(outcomes);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    if (result.outcomes[i].verdict == EditStatus::Verified) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = result.outcomes[a].edit;
    const auto& eb = result.outcomes[b].edit;
    if (ea.char_start != eb.char_start) return ea.char_start < eb.char_start;
    return ea.find.size() > eb.find.size();
  });

  std::string corrected;
  corrected.reserve(transcript.size());
  std::size_t cursor = 0;       // position in the original transcript
  std::size_t applied_end = 0;  // exclusive end of the last applied span

  for (std::size_t idx : order) {
    auto& outcome = result.outcomes[idx];
    const auto& edit = outcome.edit;
    const bool overlaps = !result.applied.empty() && edit.char_start < applied_end;
    if (overlaps) {
      outcome.verdict = EditStatus::Rejected;
      outcome.rejection_code = RejectionCode::Overlap;
      outcome.edit.status = EditStatus::Rejected;
      continue;
    }
    corrected.append(transcript.substr(cursor, edit.char_start - cursor));
    const std::size_t out_start = corrected.size();
    corrected.append(edit.replace);
    result.applied.push_back(AppliedEdit{edit, out_start, corrected.size()});
    cursor = edit.char_end;
    applied_end = edit.char_end;
  }
  corrected.append(transcript.substr(cursor));
  result.corrected = std::move(corrected);
  return result;
}

}  // namespace recover
