#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "recover/evaluation.hpp"
#include "recover/io.hpp"
#include "recover/lexicon.hpp"
#include "recover/text.hpp"

using namespace recover;

namespace {

EntityLexicon demo_lexicon() {
  EntityLexicon lex;
  lex.add("cytiva");
  lex.add("max planck institute");
  lex.add("lufthansa");
  return lex;
}

SegmentScore score_pair(const std::string& id, const std::string& ref_text,
                        const std::string& hyp_text, const EntityLexicon& lex) {
  const TokenStream ref = tokenize(ref_text);
  const TokenStream hyp = tokenize(hyp_text);
  const auto tags = tag_entity_tokens(ref, lex);
  const AlignmentPath path = align_words(ref.norms(), hyp.norms());
  SegmentScore s;
  s.segment_id = id;
  s.overall = counts_from_path(path, ref.size());
  s.entity = entity_scoped_counts(path, tags, ref.size());
  s.prf = entity_occurrence_counts(tags, tag_entity_tokens(hyp, lex));
  return s;
}

}  // namespace

TEST_CASE("counts_from_path basics") {
  const auto ref = tokenize("a b c").norms();
  SECTION("identical") {
    const auto c = counts_from_path(align_words(ref, ref), 3);
    CHECK(c.correct == 3);
    CHECK(c.substitutions + c.deletions + c.insertions == 0);
  }
  SECTION("substitution") {
    const auto c = counts_from_path(align_words(ref, tokenize("a x c").norms()), 3);
    CHECK(c.correct == 2);
    CHECK(c.substitutions == 1);
  }
  SECTION("insertion") {
    const auto c =
        counts_from_path(align_words(tokenize("a b").norms(), tokenize("a b z").norms()), 2);
    CHECK(c.correct == 2);
    CHECK(c.insertions == 1);
  }
  SECTION("identity C+S+D == n_ref") {
    const auto c = counts_from_path(align_words(ref, tokenize("x y").norms()), 3);
    CHECK(c.correct + c.substitutions + c.deletions == 3);
  }
}

TEST_CASE("wer formula and undefined case") {
  AlignmentCounts c;
  c.n_ref = 10;
  c.correct = 10;
  CHECK(wer(c) == 0.0);
  c.substitutions = 2;
  c.deletions = 1;
  c.insertions = 1;
  c.correct = 7;
  CHECK(wer(c) == Catch::Approx(0.4));
  AlignmentCounts empty;
  CHECK_FALSE(wer(empty).has_value());
}

TEST_CASE("published entity counts reproduce the published rates") {
  // Earnings-21 baseline: (1248 + 293 + 15) / 6535 = 23.81%
  AlignmentCounts earnings_base;
  earnings_base.substitutions = 1248;
  earnings_base.deletions = 293;
  earnings_base.insertions = 15;
  earnings_base.correct = 4994;
  earnings_base.n_ref = 6535;
  CHECK(*wer(earnings_base) * 100.0 == Catch::Approx(23.81).margin(0.01));

  // ATCO2 baseline: (1694 + 644 + 119) / 4771 = 51.50%
  AlignmentCounts atco_base;
  atco_base.substitutions = 1694;
  atco_base.deletions = 644;
  atco_base.insertions = 119;
  atco_base.correct = 2433;
  atco_base.n_ref = 4771;
  CHECK(*wer(atco_base) * 100.0 == Catch::Approx(51.50).margin(0.01));

  // LLM-Select Earnings-21: (781 + 243 + 12) / 6535 = 15.85%
  AlignmentCounts earnings_llm;
  earnings_llm.substitutions = 781;
  earnings_llm.deletions = 243;
  earnings_llm.insertions = 12;
  earnings_llm.correct = 5511;
  earnings_llm.n_ref = 6535;
  CHECK(*wer(earnings_llm) * 100.0 == Catch::Approx(15.85).margin(0.01));
}

TEST_CASE("rwerr formula") {
  CHECK(*rwerr(23.81, 15.85) == Catch::Approx(33.4).margin(0.1));
  CHECK(*rwerr(25.57, 13.88) == Catch::Approx(45.7).margin(0.1));
  CHECK(*rwerr(20.0, 20.0) == 0.0);
  CHECK_FALSE(rwerr(0.0, 5.0).has_value());
}

TEST_CASE("entity_scoped_counts restricts to tagged tokens") {
  EntityLexicon lex = demo_lexicon();
  const TokenStream ref = tokenize("we visited the max planck institute yesterday");
  const auto tags = tag_entity_tokens(ref, lex);
  REQUIRE(tags.size() == 1);

  SECTION("all entity tokens correct") {
    const TokenStream hyp = tokenize("we visited a max planck institute yesterday");
    const auto path = align_words(ref.norms(), hyp.norms());
    const auto c = entity_scoped_counts(path, tags, ref.size());
    CHECK(c.n_ref == 3);
    CHECK(c.correct == 3);
    CHECK(c.substitutions == 0);
  }
  SECTION("entity substitution counted, non-entity ignored") {
    const TokenStream hyp = tokenize("we visited the max black institute yesterday");
    const auto path = align_words(ref.norms(), hyp.norms());
    const auto c = entity_scoped_counts(path, tags, ref.size());
    CHECK(c.substitutions == 1);
    CHECK(c.correct == 2);
  }
  SECTION("no tags means undefined entity rate") {
    const TokenStream plain = tokenize("no entities at all");
    const auto path = align_words(plain.norms(), plain.norms());
    const auto c = entity_scoped_counts(path, {}, plain.size());
    CHECK(c.n_ref == 0);
    CHECK_FALSE(wer(c).has_value());
  }
}

TEST_CASE("insertions attribute to entity scope only when adjacent") {
  EntityLexicon lex = demo_lexicon();
  const TokenStream ref = tokenize("we like cytiva products");
  const auto tags = tag_entity_tokens(ref, lex);  // token 2

  SECTION("insertion next to the entity token") {
    const TokenStream hyp = tokenize("we like cytiva extra products");
    const auto path = align_words(ref.norms(), hyp.norms());
    const auto c = entity_scoped_counts(path, tags, ref.size());
    CHECK(c.insertions == 1);
  }
  SECTION("insertion far from the entity token") {
    const TokenStream hyp = tokenize("we really like cytiva products");
    const auto path = align_words(ref.norms(), hyp.norms());
    const auto c = entity_scoped_counts(path, tags, ref.size());
    CHECK(c.insertions == 0);
  }
}

TEST_CASE("entity precision recall f1") {
  EntityLexicon lex = demo_lexicon();
  const TokenStream ref = tokenize("cytiva and lufthansa rose");
  const auto tags = tag_entity_tokens(ref, lex);
  REQUIRE(tags.size() == 2);

  SECTION("exact reproduction gives P=R=F1=1") {
    const Prf p = entity_prf(tags, "cytiva and lufthansa rose", lex);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);
  }
  SECTION("near-miss is a recall loss") {
    const Prf p = entity_prf(tags, "sitiva and lufthansa rose", lex);
    CHECK(p.recall == 0.5);
    CHECK(p.precision == 1.0);
  }
  SECTION("hallucinated entity is a precision loss") {
    const Prf p = entity_prf(tags, "cytiva and lufthansa with cytiva rose", lex);
    CHECK(p.recall == 1.0);
    CHECK(p.precision < 1.0);
  }
  SECTION("no entities anywhere gives zero F1") {
    const Prf p = entity_prf({}, "plain words", lex);
    CHECK(p.f1 == 0.0);
  }
}

TEST_CASE("aggregate_report pools counts and computes rwerr") {
  EntityLexicon lex = demo_lexicon();
  std::map<std::string, std::vector<SegmentScore>> per_system;
  per_system["baseline"] = {
      score_pair("s1", "we bought cytiva", "we bought sitiva", lex),
      score_pair("s2", "lufthansa flew", "lufthansa flew", lex),
  };
  per_system["fixed"] = {
      score_pair("s1", "we bought cytiva", "we bought cytiva", lex),
      score_pair("s2", "lufthansa flew", "lufthansa flew", lex),
  };
  const EvaluationReport report = aggregate_report(per_system, "baseline");
  CHECK(report.segments == 2);
  const auto& base = report.systems.at("baseline");
  const auto& fixed = report.systems.at("fixed");
  CHECK(*base.e_wer > 0.0);
  CHECK(*fixed.e_wer == 0.0);
  CHECK(*fixed.rwerr_vs_baseline == Catch::Approx(100.0));
  CHECK(*base.rwerr_vs_baseline == Catch::Approx(0.0));
  CHECK(report.entity_reference_tokens == 2);
}

TEST_CASE("aggregate_report rejects mismatched segment sets") {
  EntityLexicon lex = demo_lexicon();
  std::map<std::string, std::vector<SegmentScore>> per_system;
  per_system["baseline"] = {score_pair("s1", "a b", "a b", lex)};
  per_system["other"] = {score_pair("s2", "a b", "a b", lex)};
  CHECK_THROWS_WITH(aggregate_report(per_system, "baseline"),
                    Catch::Matchers::ContainsSubstring("s1") &&
                        Catch::Matchers::ContainsSubstring("s2"));
}

TEST_CASE("aggregate_report empty input is a hard error") {
  CHECK_THROWS(aggregate_report({}, "baseline"));
}

TEST_CASE("wer is invariant under casing and punctuation") {
  EntityLexicon lex = demo_lexicon();
  const auto a = score_pair("s", "We bought Cytiva, today.", "we bought cytiva today", lex);
  CHECK(a.overall.substitutions + a.overall.deletions + a.overall.insertions == 0);
}

TEST_CASE("fixture file reproduces all published entity rates") {
  const auto fixtures =
      parse_fixtures(load_json_file(std::string(RECOVER_DATA_DIR) + "/table_fixtures.json"));
  REQUIRE(fixtures.size() == 5);
  const auto checks = check_fixtures(fixtures);
  std::size_t e_wer_checks = 0, rwerr_checks = 0;
  for (const auto& c : checks) {
    INFO(c.dataset << " " << c.system << " " << c.what << " computed=" << c.computed
                   << " expected=" << c.expected);
    CHECK(c.pass);
    if (c.what == "e_wer") ++e_wer_checks;
    if (c.what == "rwerr") ++rwerr_checks;
  }
  CHECK(e_wer_checks == 10);  // baseline + llm-select on five datasets
  CHECK(rwerr_checks == 5);
}

TEST_CASE("fixture deltas match the published differences") {
  const auto fixtures =
      parse_fixtures(load_json_file(std::string(RECOVER_DATA_DIR) + "/table_fixtures.json"));
  for (const auto& ds : fixtures) {
    if (ds.name != "earnings21") continue;
    REQUIRE(ds.systems.size() == 2);
    const auto& base = ds.systems[0].counts;
    const auto& llm = ds.systems[1].counts;
    CHECK(static_cast<long>(llm.correct) - static_cast<long>(base.correct) == 517);
    CHECK(static_cast<long>(llm.substitutions) - static_cast<long>(base.substitutions) ==
          -467);
    CHECK(static_cast<long>(llm.deletions) - static_cast<long>(base.deletions) == -50);
    CHECK(static_cast<long>(llm.insertions) - static_cast<long>(base.insertions) == -3);
  }
}

TEST_CASE("entity-scoped counts never exceed overall counts") {
  EntityLexicon lex = demo_lexicon();
  std::mt19937 rng(31337);
  const std::vector<std::string> vocab = {"we",  "bought", "cytiva", "lufthansa",
                                          "max", "planck", "today",  "institute",
                                          "and", "stock"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len_dist(0, 8);
  auto random_text = [&]() {
    std::string s;
    const int len = len_dist(rng);
    for (int i = 0; i < len; ++i) {
      if (i) s.push_back(' ');
      s += vocab[pick(rng)];
    }
    return s;
  };
  for (int iter = 0; iter < 500; ++iter) {
    const std::string ref_text = random_text();
    const TokenStream ref = tokenize(ref_text);
    if (ref.empty()) continue;
    const auto s = score_pair("s", ref_text, random_text(), lex);
    CHECK(s.entity.substitutions <= s.overall.substitutions);
    CHECK(s.entity.deletions <= s.overall.deletions);
    CHECK(s.entity.correct <= s.overall.correct);
    CHECK(s.entity.insertions <= s.overall.insertions);
    CHECK(s.entity.n_ref <= s.overall.n_ref);
    CHECK(s.entity.correct + s.entity.substitutions + s.entity.deletions ==
          s.entity.n_ref);
    CHECK(s.overall.correct + s.overall.substitutions + s.overall.deletions ==
          s.overall.n_ref);
  }
}

TEST_CASE("csv export carries one row per system") {
  EntityLexicon lex = demo_lexicon();
  std::map<std::string, std::vector<SegmentScore>> per_system;
  per_system["baseline"] = {score_pair("s1", "we bought cytiva", "we bought sitiva", lex)};
  per_system["one-best"] = {score_pair("s1", "we bought cytiva", "we bought cytiva", lex)};
  const EvaluationReport report = aggregate_report(per_system, "baseline");
  const std::string csv = render_csv(report);
  CHECK(csv.find("system,wer,e_wer") == 0);
  CHECK(csv.find("\nbaseline,") != std::string::npos);
  CHECK(csv.find("\none-best,") != std::string::npos);
  // undefined rwerr cells stay empty, defined ones are numeric
  CHECK(csv.find(",100.0000,") != std::string::npos);  // one-best rwerr vs baseline
}

TEST_CASE("report render and json are stable") {
  EntityLexicon lex = demo_lexicon();
  std::map<std::string, std::vector<SegmentScore>> per_system;
  per_system["baseline"] = {score_pair("s1", "we bought cytiva", "we bought sitiva", lex)};
  per_system["one-best"] = {score_pair("s1", "we bought cytiva", "we bought cytiva", lex)};
  const EvaluationReport report = aggregate_report(per_system, "baseline");

  const auto j1 = report_to_json(report).dump(2);
  const auto j2 = report_to_json(report).dump(2);
  CHECK(j1 == j2);
  const std::string table = render_text_table(report);
  CHECK(table.find("baseline") != std::string::npos);
  CHECK(table.find("one-best") != std::string::npos);
  CHECK(table.find("E-WER%") != std::string::npos);
}
