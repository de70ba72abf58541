#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "recover/io.hpp"
#include "recover/pipeline.hpp"

using namespace recover;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("recover_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(path / name, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }
};

EntityLexicon demo_lexicon() {
  EntityLexicon lex;
  lex.add("Cytiva", std::string("org"));
  lex.add("Lufthansa", std::string("org"));
  return lex;
}

SegmentRecord make_record(const std::string& id, const std::string& ref,
                          std::vector<std::string> hyps) {
  SegmentRecord r;
  r.segment_id = id;
  r.reference = ref;
  r.hypotheses = std::move(hyps);
  return r;
}

}  // namespace

TEST_CASE("load_corpus parses valid JSONL") {
  TempDir tmp;
  const std::string path = tmp.file(
      "segments.jsonl",
      R"({"segment_id": "s1", "reference": "we bought cytiva", "hypotheses": ["we bought sitiva"], "metadata": {"temp": "0.0"}})"
      "\n"
      R"({"segment_id": "s2", "reference": null, "hypotheses": ["hello world", "hello word"]})"
      "\n");
  const CorpusLoadResult r = load_corpus(path);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].segment_id == "s1");
  CHECK(r.records[0].reference == "we bought cytiva");
  CHECK(r.records[0].metadata.at("temp") == "0.0");
  CHECK_FALSE(r.records[1].reference.has_value());
  CHECK(r.records[1].hypotheses.size() == 2);
  CHECK(r.warnings.empty());
}

TEST_CASE("load_corpus skips malformed lines with line numbers") {
  TempDir tmp;
  std::string content;
  for (int i = 0; i < 200; ++i) {
    content += R"({"segment_id": "s)" + std::to_string(i) + R"(", "hypotheses": ["x"]})" + "\n";
  }
  content += "{this is not json}\n";
  const std::string path = tmp.file("segments.jsonl", content);
  const CorpusLoadResult r = load_corpus(path);
  CHECK(r.records.size() == 200);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find(":201:") != std::string::npos);
}

TEST_CASE("load_corpus hard errors") {
  TempDir tmp;
  CHECK_THROWS(load_corpus((tmp.path / "missing.jsonl").string()));
  const std::string empty = tmp.file("empty.jsonl", "");
  CHECK_THROWS(load_corpus(empty));
  // two bad lines out of three is way over the 1% budget
  const std::string mostly_bad = tmp.file(
      "bad.jsonl", "{bad}\n{also bad}\n" R"({"segment_id": "s", "hypotheses": ["x"]})" "\n");
  CHECK_THROWS(load_corpus(mostly_bad));
}

TEST_CASE("load_corpus rejects duplicate ids as malformed") {
  TempDir tmp;
  std::string content;
  for (int i = 0; i < 150; ++i) {
    content += R"({"segment_id": "s)" + std::to_string(i) + R"(", "hypotheses": ["x"]})" + "\n";
  }
  content += R"({"segment_id": "s0", "hypotheses": ["y"]})" "\n";
  const CorpusLoadResult r = load_corpus(tmp.file("dups.jsonl", content));
  CHECK(r.records.size() == 150);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("duplicate") != std::string::npos);
}

TEST_CASE("load_lexicon plain text and jsonl") {
  TempDir tmp;
  const std::string plain = tmp.file("lex.txt", "Cytiva\nLufthansa\n\ncytiva\n");
  const LexiconLoadResult p = load_lexicon(plain);
  CHECK(p.lexicon.size() == 2);
  CHECK(p.warnings.size() == 1);  // the duplicate

  const std::string jsonl = tmp.file(
      "lex.jsonl",
      R"({"phrase": "Cytiva", "type": "org"})" "\n" R"({"phrase": "linezolid", "type": null})" "\n");
  const LexiconLoadResult j = load_lexicon(jsonl);
  CHECK(j.lexicon.size() == 2);
  CHECK(j.lexicon.entry(0).entity_type == "org");
  CHECK_FALSE(j.lexicon.entry(1).entity_type.has_value());
}

TEST_CASE("run_segment applies a scripted near-miss fix") {
  const EntityLexicon lex = demo_lexicon();
  const SegmentRecord record =
      make_record("s1", "we bought cytiva", {"we bought sitiva"});

  RunConfig config;
  config.strategy = FusionStrategy::OneBest;

  // fingerprint the exact request the pipeline will issue
  std::vector<TokenStream> streams{tokenize(record.hypotheses[0])};
  const CandidateSet cands = retrieve_top_k(lex, streams, config.retrieval, "s1");
  const ProposerRequest req =
      make_correct_request(record.hypotheses[0], record.hypotheses, cands, lex, false);
  MockBackend backend({{fingerprint_request(req),
                        R"({"edits": [{"start": 10, "end": 16, "find": "sitiva",
                            "replace": "cytiva", "confidence": 0.95,
                            "reason": "near miss"}]})"}});

  const SegmentResult result = run_segment(record, lex, config, &backend);
  CHECK(result.fused_text == "we bought sitiva");
  CHECK(result.corrected_text == "we bought Cytiva");
  CHECK(result.applied_count == 1);
  CHECK(result.proposer_fingerprint == fingerprint_request(req));
  REQUIRE(result.system_score.has_value());
  CHECK(result.system_score->entity.substitutions == 0);
  CHECK(result.baseline_score->entity.substitutions == 1);
}

TEST_CASE("run_segment rover with identical hypotheses is a no-op") {
  const EntityLexicon lex = demo_lexicon();
  const SegmentRecord record = make_record(
      "s1", "same text here", {"same text here", "same text here", "same text here"});
  RunConfig config;
  config.strategy = FusionStrategy::RoverEnsemble;
  MockBackend backend;  // empty script: zero edits everywhere
  const SegmentResult result = run_segment(record, lex, config, &backend);
  CHECK(result.fused_text == "same text here");
  CHECK(result.corrected_text == "same text here");
}

TEST_CASE("run_segment degrades to fused text when the backend is down") {
  class DownBackend : public Backend {
   public:
    BackendResult complete(const std::string&) override {
      BackendResult r;
      r.retryable = true;
      r.error = "connection refused";
      return r;
    }
    std::string name() const override { return "down"; }
  } backend;

  const EntityLexicon lex = demo_lexicon();
  const SegmentRecord record = make_record("s1", "we bought cytiva", {"we bought sitiva"});
  RunConfig config;
  config.strategy = FusionStrategy::OneBest;
  config.proposer.max_retries = 1;
  config.proposer.backoff_base_ms = 0;

  const SegmentResult result = run_segment(record, lex, config, &backend);
  CHECK(result.corrected_text == result.fused_text);
  CHECK(result.backend_degraded);
  CHECK_FALSE(result.warnings.empty());
}

TEST_CASE("baseline mode: one-best with no proposer reproduces hypothesis 0") {
  const EntityLexicon lex = demo_lexicon();
  RunConfig config;
  config.strategy = FusionStrategy::OneBest;
  config.proposer.kind = BackendKind::None;
  for (const std::string hyp :
       {"Weird  spacing preserved", "punctuation, kept!", "plain"}) {
    const SegmentRecord record = make_record("s", "ref text", {hyp, "other hyp"});
    const SegmentResult result = run_segment(record, lex, config, nullptr);
    CHECK(result.corrected_text == hyp);
    CHECK(result.fused_text == hyp);
    CHECK(result.applied_count == 0);
  }
}

TEST_CASE("llm-select pipeline uses a single call for selection and edits") {
  class RecordingBackend : public Backend {
   public:
    int calls = 0;
    BackendResult complete(const std::string&) override {
      ++calls;
      BackendResult r;
      r.ok = true;
      r.content =
          R"({"chosen_variant": 1, "edits": [{"start": 10, "end": 16, "find": "sitiva",
              "replace": "cytiva", "confidence": 1.0, "reason": "fix"}]})";
      return r;
    }
    std::string name() const override { return "recording"; }
  } backend;

  const EntityLexicon lex = demo_lexicon();
  const SegmentRecord record = make_record(
      "s1", "we bought cytiva", {"we bought steve a", "we bought sitiva"});
  RunConfig config;
  config.strategy = FusionStrategy::LlmSelect;
  const SegmentResult result = run_segment(record, lex, config, &backend);
  CHECK(backend.calls == 1);
  CHECK(result.chosen_variant == 1);
  CHECK(result.fused_text == "we bought sitiva");
  CHECK(result.corrected_text == "we bought Cytiva");
}

TEST_CASE("process_corpus output is identical across worker counts") {
  const EntityLexicon lex = demo_lexicon();
  std::vector<SegmentRecord> records;
  for (int i = 0; i < 24; ++i) {
    records.push_back(make_record("seg" + std::to_string(100 + i), "we bought cytiva",
                                  {"we bought sitiva", "we bought cytiva"}));
  }
  MockBackend backend;

  RunConfig config;
  config.strategy = FusionStrategy::EntityAwareSelect;
  config.proposer.max_in_flight = 1;
  const CorpusRunResult serial = process_corpus(records, lex, config, &backend);
  config.proposer.max_in_flight = 8;
  const CorpusRunResult parallel = process_corpus(records, lex, config, &backend);

  CHECK(corrected_jsonl(serial) == corrected_jsonl(parallel));
  CHECK(edits_jsonl(serial) == edits_jsonl(parallel));
  REQUIRE(serial.report.has_value());
  REQUIRE(parallel.report.has_value());
  CHECK(report_to_json(*serial.report).dump() == report_to_json(*parallel.report).dump());
}

TEST_CASE("process_corpus aggregates baseline and system rows") {
  const EntityLexicon lex = demo_lexicon();
  std::vector<SegmentRecord> records = {
      make_record("a", "we bought cytiva", {"we bought sitiva", "we bought cytiva"}),
      make_record("b", "lufthansa flew home", {"left hansa flew home", "lufthansa flew home"}),
  };
  MockBackend backend;
  RunConfig config;
  config.strategy = FusionStrategy::EntityAwareSelect;
  const CorpusRunResult run = process_corpus(records, lex, config, &backend);
  REQUIRE(run.report.has_value());
  const auto& report = *run.report;
  REQUIRE(report.systems.count("baseline") == 1);
  REQUIRE(report.systems.count("entity-select") == 1);
  // entity-aware selection picked the clean variants: entity errors gone
  CHECK(*report.systems.at("entity-select").e_wer <
        *report.systems.at("baseline").e_wer);

  // the reported entity token total equals the tagged-token count over
  // all references
  std::size_t tagged = 0;
  for (const auto& rec : records) {
    tagged += total_tagged_tokens(tag_entity_tokens(tokenize(*rec.reference), lex));
  }
  CHECK(report.entity_reference_tokens == tagged);
}

TEST_CASE("hypothesis context flag adds read-only variants to the prompt") {
  const EntityLexicon lex = demo_lexicon();
  const std::vector<std::string> hyps = {"first decode", "second decode"};
  const CandidateSet cands =
      retrieve_top_k(lex, {tokenize(hyps[0]), tokenize(hyps[1])}, RetrievalWeights{});
  const ProposerRequest with_ctx =
      make_correct_request("first decode", hyps, cands, lex, true);
  const ProposerRequest without_ctx =
      make_correct_request("first decode", hyps, cands, lex, false);
  const std::string p_with = build_prompt(with_ctx);
  const std::string p_without = build_prompt(without_ctx);
  CHECK(p_with.find("context only") != std::string::npos);
  CHECK(p_with.find("second decode") != std::string::npos);
  CHECK(p_without.find("second decode") == std::string::npos);
  CHECK(fingerprint_request(with_ctx) != fingerprint_request(without_ctx));
}

TEST_CASE("empty reference is excluded from scoring") {
  const EntityLexicon lex = demo_lexicon();
  SegmentRecord record = make_record("s1", "...", {"some hypothesis"});
  RunConfig config;
  config.proposer.kind = BackendKind::None;
  const SegmentResult result = run_segment(record, lex, config, nullptr);
  CHECK_FALSE(result.baseline_score.has_value());
  CHECK_FALSE(result.system_score.has_value());
  CHECK_FALSE(result.warnings.empty());
}

TEST_CASE("reference-free segments are corrected but not scored") {
  const EntityLexicon lex = demo_lexicon();
  std::vector<SegmentRecord> records;
  SegmentRecord r;
  r.segment_id = "norf";
  r.hypotheses = {"we bought sitiva"};
  records.push_back(r);
  MockBackend backend;
  RunConfig config;
  const CorpusRunResult run = process_corpus(records, lex, config, &backend);
  CHECK(run.segments.size() == 1);
  CHECK(run.scored_segments == 0);
  CHECK_FALSE(run.report.has_value());
  CHECK(run.segments[0].corrected_text == "we bought sitiva");
}

TEST_CASE("write_run_artifacts produces the four artifact files") {
  TempDir tmp;
  const EntityLexicon lex = demo_lexicon();
  std::vector<SegmentRecord> records = {
      make_record("s1", "we bought cytiva", {"we bought sitiva"})};
  MockBackend backend;
  RunConfig config;
  config.output_dir = (tmp.path / "out").string();
  const CorpusRunResult run = process_corpus(records, lex, config, &backend);
  write_run_artifacts(run, config);

  CHECK(fs::exists(fs::path(config.output_dir) / "corrected.jsonl"));
  CHECK(fs::exists(fs::path(config.output_dir) / "edits.jsonl"));
  CHECK(fs::exists(fs::path(config.output_dir) / "report.json"));
  CHECK(fs::exists(fs::path(config.output_dir) / "report.txt"));
  CHECK(fs::exists(fs::path(config.output_dir) / "run_meta.json"));

  // corrected.jsonl lines parse and carry the schema fields
  std::ifstream in(fs::path(config.output_dir) / "corrected.jsonl");
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("segment_id") == "s1");
  CHECK(j.contains("fused_text"));
  CHECK(j.contains("corrected_text"));
  CHECK(j.contains("proposer_fingerprint"));
}

TEST_CASE("shipped demo corpus and mock script correct every seeded error") {
  const CorpusLoadResult corpus =
      load_corpus(std::string(RECOVER_DATA_DIR) + "/demo_segments.jsonl");
  const LexiconLoadResult lexicon =
      load_lexicon(std::string(RECOVER_DATA_DIR) + "/demo_lexicon.txt");
  MockScript script =
      load_mock_script(std::string(RECOVER_DATA_DIR) + "/demo_mock_script.json");
  MockBackend backend(std::move(script.responses), std::move(script.default_response));

  RunConfig config;
  config.strategy = FusionStrategy::OneBest;
  const CorpusRunResult run =
      process_corpus(corpus.records, lexicon.lexicon, config, &backend);
  REQUIRE(run.report.has_value());
  const auto& sys = run.report->systems.at("one-best");
  const auto& base = run.report->systems.at("baseline");
  CHECK(*base.e_wer > 0.0);
  CHECK(*sys.e_wer == 0.0);  // the script fixes every seeded near-miss
  CHECK(*sys.wer <= *base.wer);

  // fingerprints in the script stay in sync with the prompt version
  std::size_t scripted_segments = 0;
  for (const auto& seg : run.segments) {
    if (seg.applied_count > 0) ++scripted_segments;
  }
  CHECK(scripted_segments == 5);
}

TEST_CASE("interrupt flag stops dispatch but keeps completed results") {
  const EntityLexicon lex = demo_lexicon();
  std::vector<SegmentRecord> records = {
      make_record("s1", "we bought cytiva", {"we bought sitiva"})};
  MockBackend backend;
  RunConfig config;
  interrupt_flag().store(true);
  const CorpusRunResult run = process_corpus(records, lex, config, &backend);
  interrupt_flag().store(false);
  CHECK(run.interrupted);
  CHECK(run.segments.empty());  // flag was set before any dispatch
}

TEST_CASE("run_corpus loads, processes and writes artifacts in one call") {
  TempDir tmp;
  RunConfig config;
  config.segments_path = std::string(RECOVER_DATA_DIR) + "/demo_segments.jsonl";
  config.lexicon_path = std::string(RECOVER_DATA_DIR) + "/demo_lexicon.txt";
  config.output_dir = (tmp.path / "out").string();
  config.strategy = FusionStrategy::OneBest;
  config.proposer.kind = BackendKind::None;

  const CorpusRunResult run = run_corpus(config, nullptr);
  CHECK(run.segments.size() == 6);
  CHECK(run.scored_segments == 5);
  CHECK(fs::exists(fs::path(config.output_dir) / "corrected.jsonl"));
  CHECK(fs::exists(fs::path(config.output_dir) / "report.json"));

  RunConfig missing = config;
  missing.segments_path = (tmp.path / "nope.jsonl").string();
  CHECK_THROWS(run_corpus(missing, nullptr));
}

TEST_CASE("corrected text differs from fused text only by applied edits") {
  const EntityLexicon lex = demo_lexicon();
  const SegmentRecord record = make_record("s1", "we bought cytiva",
                                           {"we bought sitiva and sitiva"});
  RunConfig config;
  std::vector<TokenStream> streams{tokenize(record.hypotheses[0])};
  const CandidateSet cands = retrieve_top_k(lex, streams, config.retrieval, "s1");
  const ProposerRequest req =
      make_correct_request(record.hypotheses[0], record.hypotheses, cands, lex, false);
  MockBackend backend({{fingerprint_request(req),
                        R"({"edits": [{"start": 10, "end": 16, "find": "sitiva",
                            "replace": "cytiva", "confidence": 1.0, "reason": "r"},
                           {"start": 21, "end": 27, "find": "sitiva",
                            "replace": "cytiva", "confidence": 1.0, "reason": "r"}]})"}});
  const SegmentResult result = run_segment(record, lex, config, &backend);

  // rebuild corrected from fused plus the verified outcomes
  std::vector<VerificationOutcome> verified;
  for (const auto& o : result.outcomes) {
    if (o.verdict == EditStatus::Verified) verified.push_back(o);
  }
  const ApplyResult replay = apply_edits(result.fused_text, verified);
  CHECK(replay.corrected == result.corrected_text);
}
