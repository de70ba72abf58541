#pragma once

// End-to-end orchestration: per segment, retrieve candidates, fuse
// hypotheses, propose edits, verify and apply them, then score against
// the reference when one exists. Corpus runs use a bounded worker pool;
// results are aggregated in segment order so output bytes do not depend
// on the worker count. A failing backend degrades a segment to its fused
// text instead of aborting the run.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "recover/evaluation.hpp"
#include "recover/fusion.hpp"
#include "recover/guardrails.hpp"
#include "recover/io.hpp"
#include "recover/lexicon.hpp"
#include "recover/proposer.hpp"
#include "recover/retrieval.hpp"
#include "recover/segment.hpp"
#include "recover/text.hpp"

namespace recover {

enum class BackendKind { None, Mock, Remote };

inline std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  if (name == "none") return BackendKind::None;
  if (name == "mock") return BackendKind::Mock;
  if (name == "remote") return BackendKind::Remote;
  return std::nullopt;
}

struct ProposerSettings {
  BackendKind kind = BackendKind::Mock;
  std::string base_url = "https://api.openai.com";
  std::string model;
  double temperature = 0.0;
  int max_retries = 3;
  int backoff_base_ms = 250;
  int max_in_flight = 4;  // also the worker-pool size
  std::string mock_script_path;
  std::string api_key_env = "RECOVER_API_KEY";
};

struct RunConfig {
  FusionStrategy strategy = FusionStrategy::OneBest;
  RetrievalWeights retrieval;
  GuardrailConfig guardrails;
  ProposerSettings proposer;
  std::string segments_path;
  std::string lexicon_path;
  std::string output_dir;
  std::string baseline_label = "baseline";
  bool include_hypothesis_context = false;
};

struct SegmentResult {
  std::string segment_id;
  std::optional<std::string> reference;
  std::string fused_text;
  std::string corrected_text;
  std::optional<std::size_t> chosen_variant;
  std::string provenance;
  std::vector<std::size_t> per_variant_entity_hits;
  std::vector<VerificationOutcome> outcomes;  // every proposed edit with its verdict
  std::size_t applied_count = 0;
  std::string proposer_fingerprint;
  bool backend_degraded = false;
  double proposer_latency_ms = 0.0;
  int proposer_attempts = 0;
  long prompt_tokens = -1;
  long completion_tokens = -1;
  std::vector<std::string> warnings;
  std::optional<SegmentScore> baseline_score;  // reference vs hypothesis 0
  std::optional<SegmentScore> system_score;    // reference vs corrected text
};

// The Tool-2 request the pipeline will issue for a segment; exposed so
// hermetic tests can precompute fingerprints for mock scripts.
inline ProposerRequest make_correct_request(const std::string& fused_text,
                                            const std::vector<std::string>& hypotheses,
                                            const CandidateSet& candidates,
                                            const EntityLexicon& lexicon,
                                            bool include_hypothesis_context) {
  ProposerRequest req;
  req.mode = ProposerMode::Correct;
  req.transcripts.push_back(fused_text);
  if (include_hypothesis_context) {
    for (const auto& h : hypotheses) req.transcripts.push_back(h);
  }
  req.candidates = candidate_phrases(candidates, lexicon);
  return req;
}

inline SegmentScore score_texts(const std::string& segment_id, const TokenStream& ref,
                                const std::vector<EntitySpanTag>& ref_tags,
                                std::string_view hypothesis_text,
                                const EntityLexicon& lexicon) {
  SegmentScore s;
  s.segment_id = segment_id;
  const TokenStream hyp = tokenize(hypothesis_text);
  const AlignmentPath path = align_words(ref.norms(), hyp.norms());
  s.overall = counts_from_path(path, ref.size());
  s.entity = entity_scoped_counts(path, ref_tags, ref.size());
  s.prf = entity_occurrence_counts(ref_tags, tag_entity_tokens(hyp, lexicon));
  return s;
}

inline SegmentResult run_segment(const SegmentRecord& record, const EntityLexicon& lexicon,
                                 const RunConfig& config, Backend* backend) {
  SegmentResult result;
  result.segment_id = record.segment_id;
  result.reference = record.reference;

  std::vector<TokenStream> streams;
  streams.reserve(record.hypotheses.size());
  for (const auto& h : record.hypotheses) streams.push_back(tokenize(h));

  const CandidateSet candidates =
      retrieve_top_k(lexicon, streams, config.retrieval, record.segment_id);

  const RetryPolicy retry{config.proposer.max_retries, config.proposer.backoff_base_ms};
  Backend* fusion_backend =
      config.strategy == FusionStrategy::LlmSelect ? backend : nullptr;
  FuseOutcome fused =
      fuse(config.strategy, streams, candidates, lexicon, fusion_backend,
           LlmSelectOptions{retry});
  result.fused_text = fused.result.fused_text;
  result.chosen_variant = fused.result.chosen_variant_index;
  result.provenance = fused.result.provenance;
  result.per_variant_entity_hits = fused.result.per_variant_entity_hits;
  result.backend_degraded = fused.backend_failed;
  for (auto& w : fused.warnings) result.warnings.push_back(std::move(w));

  std::vector<EditProposal> proposals = std::move(fused.edits);
  if (fused.proposer.has_value()) {
    result.proposer_fingerprint = fused.proposer->fingerprint;
    result.proposer_latency_ms = fused.proposer->latency_ms;
    result.proposer_attempts = fused.proposer->attempts;
    result.prompt_tokens = fused.proposer->prompt_tokens;
    result.completion_tokens = fused.proposer->completion_tokens;
  }

  // Non-selecting strategies issue one Correct call on the fused text.
  if (config.strategy != FusionStrategy::LlmSelect && backend != nullptr) {
    const ProposerRequest req =
        make_correct_request(result.fused_text, record.hypotheses, candidates, lexicon,
                             config.include_hypothesis_context);
    ProposeResult pr = propose(*backend, req, retry);
    result.proposer_fingerprint = pr.fingerprint;
    result.proposer_latency_ms = pr.latency_ms;
    result.proposer_attempts = pr.attempts;
    result.prompt_tokens = pr.prompt_tokens;
    result.completion_tokens = pr.completion_tokens;
    for (auto& w : pr.response.warnings) result.warnings.push_back(std::move(w));
    if (!pr.backend_ok) {
      result.backend_degraded = true;
      result.warnings.push_back("proposer backend failed: " + pr.error +
                                "; keeping fused text unedited");
    } else {
      proposals = std::move(pr.response.edits);
    }
  }

  std::vector<VerificationOutcome> outcomes;
  outcomes.reserve(proposals.size());
  for (const auto& p : proposals) {
    outcomes.push_back(verify_edit(p, result.fused_text, lexicon, config.guardrails));
  }
  ApplyResult applied = apply_edits(result.fused_text, std::move(outcomes));
  result.corrected_text = std::move(applied.corrected);
  result.outcomes = std::move(applied.outcomes);
  result.applied_count = applied.applied.size();

  if (record.reference.has_value()) {
    const TokenStream ref = tokenize(*record.reference);
    if (ref.empty()) {
      // WER is undefined against an empty reference
      result.warnings.push_back("reference normalizes to nothing; segment not scored");
    } else {
      const auto ref_tags = tag_entity_tokens(ref, lexicon);
      result.baseline_score = score_texts(record.segment_id, ref, ref_tags,
                                          record.hypotheses.front(), lexicon);
      result.system_score =
          score_texts(record.segment_id, ref, ref_tags, result.corrected_text, lexicon);
    }
  }
  return result;
}

struct CorpusRunResult {
  std::vector<SegmentResult> segments;  // in corpus order
  std::optional<EvaluationReport> report;
  std::size_t scored_segments = 0;
  std::vector<std::string> warnings;
  bool interrupted = false;
};

// Cooperative stop flag checked between segments (SIGINT handling lives
// in the CLI); completed results are still aggregated and flushed.
inline std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline CorpusRunResult process_corpus(const std::vector<SegmentRecord>& records,
                                      const EntityLexicon& lexicon, const RunConfig& config,
                                      Backend* backend) {
  CorpusRunResult out;
  const std::size_t n = records.size();
  std::vector<std::optional<SegmentResult>> slots(n);

  const int workers =
      std::max(1, std::min(config.proposer.max_in_flight, static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        if (interrupt_flag().load(std::memory_order_relaxed)) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        slots[i] = run_segment(records[i], lexicon, config, backend);
      }
    });
  }
  for (auto& t : pool) t.join();

  out.interrupted = interrupt_flag().load(std::memory_order_relaxed);
  for (auto& slot : slots) {
    if (slot.has_value()) out.segments.push_back(std::move(*slot));
  }
  // order-stable aggregation: sort by segment_id
  std::sort(out.segments.begin(), out.segments.end(),
            [](const SegmentResult& a, const SegmentResult& b) {
              return a.segment_id < b.segment_id;
            });

  std::map<std::string, std::vector<SegmentScore>> per_system;
  std::string system_label = fusion_strategy_name(config.strategy);
  if (system_label == config.baseline_label) system_label += "-corrected";
  for (const auto& seg : out.segments) {
    for (const auto& w : seg.warnings) {
      out.warnings.push_back(seg.segment_id + ": " + w);
    }
    if (seg.baseline_score.has_value() && seg.system_score.has_value()) {
      per_system[config.baseline_label].push_back(*seg.baseline_score);
      per_system[system_label].push_back(*seg.system_score);
      ++out.scored_segments;
    }
  }
  if (out.scored_segments > 0) {
    out.report = aggregate_report(per_system, config.baseline_label);
  }
  return out;
}

// --- artifacts -----------------------------------------------------------

inline nlohmann::json segment_result_to_json(const SegmentResult& r) {
  nlohmann::json j;
  j["segment_id"] = r.segment_id;
  j["reference"] = r.reference.has_value() ? nlohmann::json(*r.reference) : nlohmann::json(nullptr);
  j["fused_text"] = r.fused_text;
  j["corrected_text"] = r.corrected_text;
  j["strategy"] = r.provenance;
  j["chosen_variant"] = r.chosen_variant.has_value()
                            ? nlohmann::json(*r.chosen_variant)
                            : nlohmann::json(nullptr);
  j["applied_edits"] = r.applied_count;
  j["rejected_edits"] = r.outcomes.size() - r.applied_count;
  j["proposer_fingerprint"] =
      r.proposer_fingerprint.empty() ? nlohmann::json(nullptr)
                                     : nlohmann::json(r.proposer_fingerprint);
  j["backend_degraded"] = r.backend_degraded;
  if (r.baseline_score.has_value() && r.system_score.has_value()) {
    const auto base_wer = wer(r.baseline_score->overall);
    const auto sys_wer = wer(r.system_score->overall);
    const auto base_ewer = wer(r.baseline_score->entity);
    const auto sys_ewer = wer(r.system_score->entity);
    j["baseline_wer"] = base_wer.has_value() ? nlohmann::json(*base_wer) : nlohmann::json(nullptr);
    j["wer"] = sys_wer.has_value() ? nlohmann::json(*sys_wer) : nlohmann::json(nullptr);
    j["baseline_e_wer"] =
        base_ewer.has_value() ? nlohmann::json(*base_ewer) : nlohmann::json(nullptr);
    j["e_wer"] = sys_ewer.has_value() ? nlohmann::json(*sys_ewer) : nlohmann::json(nullptr);
  }
  return j;
}

inline std::string corrected_jsonl(const CorpusRunResult& run) {
  std::string out;
  for (const auto& seg : run.segments) {
    out += segment_result_to_json(seg).dump();
    out += "\n";
  }
  return out;
}

inline std::string edits_jsonl(const CorpusRunResult& run) {
  std::string out;
  for (const auto& seg : run.segments) {
    for (const auto& o : seg.outcomes) {
      nlohmann::json j;
      j["segment_id"] = seg.segment_id;
      j["find"] = o.edit.find;
      j["replace"] = o.edit.replace;
      j["verdict"] = o.verdict == EditStatus::Verified ? "verified" : "rejected";
      j["rejection_code"] = o.verdict == EditStatus::Verified
                                ? nlohmann::json(nullptr)
                                : nlohmann::json(rejection_code_name(o.rejection_code));
      j["relocated"] = o.relocated;
      j["similarity"] = o.similarity;
      out += j.dump();
      out += "\n";
    }
  }
  return out;
}

// Write corrected.jsonl, edits.jsonl, report.json, report.txt and
// run_meta.json into the output directory. Timing and token usage go to
// run_meta.json only, keeping the compared artifacts byte-deterministic.
inline void write_run_artifacts(const CorpusRunResult& run, const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const auto join = [&](const char* name) {
    return (fs::path(config.output_dir) / name).string();
  };

  write_text_file(join("corrected.jsonl"), corrected_jsonl(run));
  write_text_file(join("edits.jsonl"), edits_jsonl(run));

  if (run.report.has_value()) {
    write_text_file(join("report.json"), report_to_json(*run.report).dump(2) + "\n");
    write_text_file(join("report.txt"), render_text_table(*run.report));
    write_text_file(join("report.csv"), render_csv(*run.report));
  }

  nlohmann::json meta;
  meta["segments_processed"] = run.segments.size();
  meta["segments_scored"] = run.scored_segments;
  meta["strategy"] = fusion_strategy_name(config.strategy);
  meta["interrupted"] = run.interrupted;
  meta["warnings"] = run.warnings;
  double total_latency = 0.0;
  long prompt_tokens = 0, completion_tokens = 0;
  int attempts = 0;
  for (const auto& seg : run.segments) {
    total_latency += seg.proposer_latency_ms;
    attempts += seg.proposer_attempts;
    if (seg.prompt_tokens > 0) prompt_tokens += seg.prompt_tokens;
    if (seg.completion_tokens > 0) completion_tokens += seg.completion_tokens;
  }
  meta["proposer_latency_ms_total"] = total_latency;
  meta["proposer_attempts_total"] = attempts;
  meta["prompt_tokens_total"] = prompt_tokens;
  meta["completion_tokens_total"] = completion_tokens;
  meta["max_in_flight"] = config.proposer.max_in_flight;
  write_text_file(join("run_meta.json"), meta.dump(2) + "\n");
}

// One-call corpus run: load the segment and lexicon files named in the
// config, process with the given backend, and write all artifacts into
// the output directory. Loader warnings are prepended to the run's.
inline CorpusRunResult run_corpus(const RunConfig& config, Backend* backend) {
  CorpusLoadResult corpus = load_corpus(config.segments_path);
  LexiconLoadResult lexicon = load_lexicon(config.lexicon_path);
  CorpusRunResult run = process_corpus(corpus.records, lexicon.lexicon, config, backend);
  std::vector<std::string> warnings = std::move(corpus.warnings);
  for (auto& w : lexicon.warnings) warnings.push_back(std::move(w));
  for (auto& w : run.warnings) warnings.push_back(std::move(w));
  run.warnings = std::move(warnings);
  write_run_artifacts(run, config);
  return run;
}

}  // namespace recover
