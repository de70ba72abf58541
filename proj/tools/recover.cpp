// recover: entity-aware correction of ASR transcripts.
//
//   recover run          correct a segment corpus end to end
//   recover score        score two previous runs against their references
//   recover check-tables validate the scorer against count fixtures
//
// Exit codes: 0 success, 1 failed checks or report errors, 2 hard errors.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recover/evaluation.hpp"
#include "recover/io.hpp"
#include "recover/pipeline.hpp"
#include "recover/remote_backend.hpp"

using namespace recover;
namespace fs = std::filesystem;

namespace {

void handle_interrupt(int) { interrupt_flag().store(true); }

struct RunOptions {
  RunConfig config;
  std::string strategy_name = "one-best";
  std::string backend_name = "mock";
};

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  switch (config.proposer.kind) {
    case BackendKind::None:
      return nullptr;
    case BackendKind::Mock: {
      if (config.proposer.mock_script_path.empty()) {
        return std::make_unique<MockBackend>();
      }
      MockScript script = load_mock_script(config.proposer.mock_script_path);
      return std::make_unique<MockBackend>(std::move(script.responses),
                                           std::move(script.default_response));
    }
    case BackendKind::Remote: {
      RemoteBackendConfig rc;
      rc.base_url = config.proposer.base_url;
      rc.model = config.proposer.model;
      rc.temperature = config.proposer.temperature;
      rc.api_key_env = config.proposer.api_key_env;
      auto backend = std::make_unique<RemoteBackend>(rc);
      if (!backend->has_api_key()) {
        throw std::runtime_error("remote backend requires " + config.proposer.api_key_env +
                                 " to be set");
      }
      if (rc.model.empty()) {
        throw std::runtime_error("remote backend requires --model");
      }
      return backend;
    }
  }
  return nullptr;
}

int cmd_run(RunOptions& opt) {
  const auto strategy = parse_fusion_strategy(opt.strategy_name);
  if (!strategy.has_value()) {
    std::cerr << "unknown strategy: " << opt.strategy_name << "\n";
    return 2;
  }
  opt.config.strategy = *strategy;
  const auto kind = parse_backend_kind(opt.backend_name);
  if (!kind.has_value()) {
    std::cerr << "unknown backend: " << opt.backend_name << "\n";
    return 2;
  }
  opt.config.proposer.kind = *kind;
  if (opt.config.strategy == FusionStrategy::LlmSelect &&
      opt.config.proposer.kind == BackendKind::None) {
    std::cerr << "llm-select needs a proposer backend (mock or remote)\n";
    return 2;
  }

  const CorpusLoadResult corpus = load_corpus(opt.config.segments_path);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  const LexiconLoadResult lexicon = load_lexicon(opt.config.lexicon_path);
  for (const auto& w : lexicon.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "loaded " << corpus.records.size() << " segments, "
            << lexicon.lexicon.size() << " lexicon phrases\n";

  std::unique_ptr<Backend> backend = make_backend(opt.config);

  std::signal(SIGINT, handle_interrupt);
  const CorpusRunResult run =
      process_corpus(corpus.records, lexicon.lexicon, opt.config, backend.get());
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";

  write_run_artifacts(run, opt.config);
  std::cerr << "processed " << run.segments.size() << " segments ("
            << run.scored_segments << " scored) -> " << opt.config.output_dir << "\n";
  if (run.report.has_value()) {
    std::cout << render_text_table(*run.report);
  }
  if (run.interrupted) {
    std::cerr << "interrupted: partial results flushed\n";
    return 130;
  }
  return 0;
}

struct ScoredRun {
  std::map<std::string, std::string> corrected;   // segment_id -> text
  std::map<std::string, std::string> references;  // segment_id -> reference
  std::string label;
};

ScoredRun load_run_file(const std::string& path, const std::string& fallback_label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file: " + path);
  ScoredRun run;
  run.label = fallback_label;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("segment_id") ||
        !j.contains("corrected_text")) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": not a corrected.jsonl line");
    }
    const std::string id = j["segment_id"].get<std::string>();
    run.corrected[id] = j["corrected_text"].get<std::string>();
    if (j.contains("reference") && j["reference"].is_string()) {
      run.references[id] = j["reference"].get<std::string>();
    }
    if (j.contains("strategy") && j["strategy"].is_string()) {
      run.label = j["strategy"].get<std::string>();
    }
  }
  if (run.corrected.empty()) throw std::runtime_error("no segments in " + path);
  return run;
}

int cmd_score(const std::string& ref_runs, const std::string& sys_runs,
              const std::string& lexicon_path, const std::string& out_dir) {
  const ScoredRun base = load_run_file(ref_runs, "baseline");
  const ScoredRun sys = load_run_file(sys_runs, "system");
  const LexiconLoadResult lexicon = load_lexicon(lexicon_path);

  std::string base_label = "baseline";
  std::string sys_label = sys.label == base_label ? sys.label + "-sys" : sys.label;

  std::map<std::string, std::vector<SegmentScore>> per_system;
  for (const auto& [id, text] : base.corrected) {
    const auto ref_it = base.references.find(id);
    if (ref_it == base.references.end()) continue;  // reference-free segment
    const TokenStream ref = tokenize(ref_it->second);
    const auto tags = tag_entity_tokens(ref, lexicon.lexicon);
    per_system[base_label].push_back(score_texts(id, ref, tags, text, lexicon.lexicon));
    const auto sys_it = sys.corrected.find(id);
    if (sys_it != sys.corrected.end()) {
      per_system[sys_label].push_back(
          score_texts(id, ref, tags, sys_it->second, lexicon.lexicon));
    }
  }
  // aggregate_report rejects mismatched segment sets with a hard error
  const EvaluationReport report = aggregate_report(per_system, base_label);
  std::cout << render_text_table(report);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "report.json").string(),
                    report_to_json(report).dump(2) + "\n");
    write_text_file((fs::path(out_dir) / "report.txt").string(),
                    render_text_table(report));
    write_text_file((fs::path(out_dir) / "report.csv").string(), render_csv(report));
  }
  return 0;
}

int cmd_check_tables(const std::string& fixtures_path) {
  const auto fixtures = parse_fixtures(load_json_file(fixtures_path));
  const auto checks = check_fixtures(fixtures);
  int failures = 0;
  for (const auto& c : checks) {
    const bool numeric = c.what != "consistency";
    std::printf("[%s] %s/%s %s: computed %.4f expected %.4f (tol %.2f)\n",
                c.pass ? "PASS" : "FAIL", c.dataset.c_str(), c.system.c_str(),
                c.what.c_str(), c.computed, c.expected, numeric ? c.tolerance : 0.0);
    if (!c.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d check(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu checks passed\n", checks.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity-aware correction of ASR transcripts"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML config file; subcommand options live in a [run] section "
                 "and command-line flags override them");

  // run ----------------------------------------------------------------
  RunOptions opt;
  CLI::App* run = app.add_subcommand("run", "correct a segment corpus");
  run->add_option("--segments", opt.config.segments_path, "segments JSONL file")
      ->required();
  run->add_option("--lexicon", opt.config.lexicon_path, "entity lexicon (text or JSONL)")
      ->required();
  run->add_option("--out", opt.config.output_dir, "output directory")->required();
  run->add_option("--strategy", opt.strategy_name,
                  "one-best | entity-select | rover | llm-select")
      ->capture_default_str();
  run->add_option("--backend", opt.backend_name, "none | mock | remote")
      ->capture_default_str();
  run->add_option("--top-k", opt.config.retrieval.top_k, "candidates per segment")
      ->capture_default_str();
  run->add_option("--w-exact", opt.config.retrieval.w_exact, "exact-hit weight")
      ->capture_default_str();
  run->add_option("--w-fuzzy", opt.config.retrieval.w_fuzzy, "fuzzy-similarity weight")
      ->capture_default_str();
  run->add_option("--w-phonetic", opt.config.retrieval.w_phonetic, "phonetic-hit weight")
      ->capture_default_str();
  run->add_option("--fuzzy-len-window", opt.config.retrieval.fuzzy_len_window,
                  "max token length difference for fuzzy pairs")
      ->capture_default_str();
  run->add_option("--phonetic-prefix-len", opt.config.retrieval.phonetic_prefix_len,
                  "phonetic key prefix length")
      ->capture_default_str();
  run->add_option("--min-edit-similarity", opt.config.guardrails.min_edit_similarity,
                  "guardrail similarity floor")
      ->capture_default_str();
  run->add_flag("--allow-case-only", opt.config.guardrails.allow_case_only,
                "let case-only edits through the guardrails");
  run->add_option("--model", opt.config.proposer.model, "remote model name");
  run->add_option("--base-url", opt.config.proposer.base_url, "remote API base URL")
      ->capture_default_str();
  run->add_option("--temperature", opt.config.proposer.temperature,
                  "remote sampling temperature")
      ->capture_default_str();
  run->add_option("--max-retries", opt.config.proposer.max_retries,
                  "proposer retry budget")
      ->capture_default_str();
  run->add_option("--max-in-flight", opt.config.proposer.max_in_flight,
                  "parallel segments / in-flight proposer calls")
      ->capture_default_str();
  run->add_option("--mock-script", opt.config.proposer.mock_script_path,
                  "JSON mock script: fingerprint -> canned response");
  run->add_option("--baseline-label", opt.config.baseline_label, "report baseline label")
      ->capture_default_str();
  run->add_flag("--with-hypothesis-context", opt.config.include_hypothesis_context,
                "include all hypotheses as context in correction prompts");

  // score --------------------------------------------------------------
  std::string ref_runs, sys_runs, score_lexicon, score_out;
  CLI::App* score = app.add_subcommand("score", "score two runs against references");
  score->add_option("--ref-runs", ref_runs, "baseline corrected.jsonl")->required();
  score->add_option("--sys-runs", sys_runs, "system corrected.jsonl")->required();
  score->add_option("--lexicon", score_lexicon, "entity lexicon")->required();
  score->add_option("--out", score_out, "optional directory for report files");

  // check-tables ---------------------------------------------------------
  std::string fixtures_path;
  CLI::App* check = app.add_subcommand("check-tables",
                                       "recompute entity rates from count fixtures");
  check->add_option("--fixtures", fixtures_path, "fixtures JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(opt);
    if (score->parsed()) return cmd_score(ref_runs, sys_runs, score_lexicon, score_out);
    if (check->parsed()) return cmd_check_tables(fixtures_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
