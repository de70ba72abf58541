#pragma once

// Scoring: word alignment counts, WER, entity-scoped WER, relative
// entity error reduction, and occurrence-level entity precision/recall.
// Corpus rates are micro-averages over pooled counts, so corpus numbers
// reconstruct exactly from the summed C/S/D/I tables.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recover/alignment.hpp"
#include "recover/lexicon.hpp"
#include "recover/text.hpp"

namespace recover {

struct AlignmentCounts {
  std::size_t correct = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t n_ref = 0;

  AlignmentCounts& operator+=(const AlignmentCounts& o) {
    correct += o.correct;
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    n_ref += o.n_ref;
    return *this;
  }
};

inline AlignmentCounts counts_from_path(const AlignmentPath& path, std::size_t n_ref) {
  AlignmentCounts c;
  c.n_ref = n_ref;
  for (const auto& op : path.ops) {
    switch (op.type) {
      case AlignOpType::Match: ++c.correct; break;
      case AlignOpType::Substitute: ++c.substitutions; break;
      case AlignOpType::Delete: ++c.deletions; break;
      case AlignOpType::Insert: ++c.insertions; break;
    }
  }
  return c;
}

// (S + D + I) / N; undefined when the reference is empty.
inline std::optional<double> wer(const AlignmentCounts& c) {
  if (c.n_ref == 0) return std::nullopt;
  return static_cast<double>(c.substitutions + c.deletions + c.insertions) /
         static_cast<double>(c.n_ref);
}

// Relative entity-error reduction versus a baseline, in percent. Inputs
// may be rates or percentages; the ratio is scale-invariant.
inline std::optional<double> rwerr(double e_wer_base, double e_wer_sys) {
  if (e_wer_base <= 0.0) return std::nullopt;
  return (e_wer_base - e_wer_sys) / e_wer_base * 100.0;
}

// Restrict alignment counts to reference tokens inside entity tags.
// Insertions are attributed to entity scope when either neighbouring
// reference token (the one before or after the insertion point) is
// entity-tagged. This attribution rule is deliberately local to this
// function so it can be swapped.
inline AlignmentCounts entity_scoped_counts(const AlignmentPath& path,
                                            const std::vector<EntitySpanTag>& tags,
                                            std::size_t ref_token_count) {
  std::vector<bool> tagged(ref_token_count, false);
  std::size_t total_tagged = 0;
  for (const auto& t : tags) {
    for (std::size_t i = t.token_start; i < t.token_end && i < ref_token_count; ++i) {
      if (!tagged[i]) ++total_tagged;
      tagged[i] = true;
    }
  }

  AlignmentCounts c;
  c.n_ref = total_tagged;
  std::size_t consumed = 0;  // reference tokens consumed so far
  for (const auto& op : path.ops) {
    switch (op.type) {
      case AlignOpType::Match:
        if (tagged[op.a_index]) ++c.correct;
        consumed = op.a_index + 1;
        break;
      case AlignOpType::Substitute:
        if (tagged[op.a_index]) ++c.substitutions;
        consumed = op.a_index + 1;
        break;
      case AlignOpType::Delete:
        if (tagged[op.a_index]) ++c.deletions;
        consumed = op.a_index + 1;
        break;
      case AlignOpType::Insert: {
        const bool prev_entity = consumed > 0 && tagged[consumed - 1];
        const bool next_entity = consumed < ref_token_count && tagged[consumed];
        if (prev_entity || next_entity) ++c.insertions;
        break;
      }
    }
  }
  return c;
}

struct PrfCounts {
  std::size_t matched = 0;
  std::size_t reference = 0;
  std::size_t predicted = 0;

  PrfCounts& operator+=(const PrfCounts& o) {
    matched += o.matched;
    reference += o.reference;
    predicted += o.predicted;
    return *this;
  }
};

// Occurrence-level matching: each predicted entity occurrence pairs with
// the first unmatched reference occurrence of the same phrase.
inline PrfCounts entity_occurrence_counts(const std::vector<EntitySpanTag>& ref_tags,
                                          const std::vector<EntitySpanTag>& hyp_tags) {
  PrfCounts c;
  c.reference = ref_tags.size();
  c.predicted = hyp_tags.size();
  std::vector<bool> used(ref_tags.size(), false);
  for (const auto& h : hyp_tags) {
    for (std::size_t i = 0; i < ref_tags.size(); ++i) {
      if (!used[i] && ref_tags[i].phrase_index == h.phrase_index) {
        used[i] = true;
        ++c.matched;
        break;
      }
    }
  }
  return c;
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf prf_from_counts(const PrfCounts& c) {
  Prf p;
  p.precision = c.predicted == 0 ? 0.0
                                 : static_cast<double>(c.matched) /
                                       static_cast<double>(c.predicted);
  p.recall = c.reference == 0
                 ? 0.0
                 : static_cast<double>(c.matched) / static_cast<double>(c.reference);
  p.f1 = (p.precision + p.recall) == 0.0
             ? 0.0
             : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

// Convenience scorer: occurrence-level P/R/F1 of a hypothesis text
// against pre-computed reference tags.
inline Prf entity_prf(const std::vector<EntitySpanTag>& ref_tags,
                      std::string_view hypothesis, const EntityLexicon& lexicon) {
  const TokenStream hyp = tokenize(hypothesis);
  return prf_from_counts(entity_occurrence_counts(ref_tags, tag_entity_tokens(hyp, lexicon)));
}

// Per-segment scoring bundle for one system.
struct SegmentScore {
  std::string segment_id;
  AlignmentCounts overall;
  AlignmentCounts entity;
  PrfCounts prf;
};

struct SystemRow {
  AlignmentCounts overall;
  AlignmentCounts entity;
  PrfCounts prf_counts;
  Prf prf;
  std::optional<double> wer;
  std::optional<double> e_wer;
  std::optional<double> rwerr_vs_baseline;
  std::size_t segments = 0;
};

struct EvaluationReport {
  std::map<std::string, SystemRow> systems;
  std::string baseline_label;
  std::size_t segments = 0;
  std::size_t entity_reference_tokens = 0;
};

// Pool per-segment counts into corpus rows and compute RWERR versus the
// designated baseline. Systems must cover the same segment set.
inline EvaluationReport aggregate_report(
    const std::map<std::string, std::vector<SegmentScore>>& per_system,
    const std::string& baseline_label) {
  if (per_system.empty()) throw std::runtime_error("no systems to aggregate");

  std::set<std::string> reference_ids;
  bool first = true;
  for (const auto& [label, scores] : per_system) {
    std::set<std::string> ids;
    for (const auto& s : scores) ids.insert(s.segment_id);
    if (ids.size() != scores.size()) {
      throw std::runtime_error("duplicate segment ids for system " + label);
    }
    if (first) {
      reference_ids = std::move(ids);
      first = false;
      continue;
    }
    if (ids != reference_ids) {
      std::ostringstream msg;
      msg << "segment sets differ for system " << label << ":";
      for (const auto& id : reference_ids) {
        if (!ids.count(id)) msg << " missing:" << id;
      }
      for (const auto& id : ids) {
        if (!reference_ids.count(id)) msg << " extra:" << id;
      }
      throw std::runtime_error(msg.str());
    }
  }

  EvaluationReport report;
  report.baseline_label = baseline_label;
  for (const auto& [label, scores] : per_system) {
    SystemRow row;
    for (const auto& s : scores) {
      row.overall += s.overall;
      row.entity += s.entity;
      row.prf_counts += s.prf;
    }
    row.segments = scores.size();
    row.wer = wer(row.overall);
    row.e_wer = wer(row.entity);
    row.prf = prf_from_counts(row.prf_counts);
    report.systems[label] = row;
    report.segments = scores.size();
  }

  auto base = report.systems.find(baseline_label);
  if (base != report.systems.end()) {
    report.entity_reference_tokens = base->second.entity.n_ref;
    if (base->second.e_wer.has_value()) {
      for (auto& [label, row] : report.systems) {
        if (label == baseline_label) {
          row.rwerr_vs_baseline = row.e_wer.has_value() ? rwerr(*base->second.e_wer, *row.e_wer)
                                                        : std::nullopt;
        } else if (row.e_wer.has_value()) {
          row.rwerr_vs_baseline = rwerr(*base->second.e_wer, *row.e_wer);
        }
      }
    }
  } else if (!report.systems.empty()) {
    report.entity_reference_tokens = report.systems.begin()->second.entity.n_ref;
  }
  return report;
}

inline nlohmann::json counts_to_json(const AlignmentCounts& c) {
  return nlohmann::json{{"correct", c.correct},
                        {"substitutions", c.substitutions},
                        {"deletions", c.deletions},
                        {"insertions", c.insertions},
                        {"n_ref", c.n_ref}};
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json systems = nlohmann::json::object();
  for (const auto& [label, row] : report.systems) {
    nlohmann::json r;
    r["wer"] = row.wer.has_value() ? nlohmann::json(*row.wer) : nlohmann::json(nullptr);
    r["e_wer"] = row.e_wer.has_value() ? nlohmann::json(*row.e_wer) : nlohmann::json(nullptr);
    r["rwerr_vs_baseline"] = row.rwerr_vs_baseline.has_value()
                                 ? nlohmann::json(*row.rwerr_vs_baseline)
                                 : nlohmann::json(nullptr);
    r["precision"] = row.prf.precision;
    r["recall"] = row.prf.recall;
    r["f1"] = row.prf.f1;
    r["overall_counts"] = counts_to_json(row.overall);
    r["entity_counts"] = counts_to_json(row.entity);
    r["segments"] = row.segments;
    systems[label] = std::move(r);
  }
  return nlohmann::json{{"baseline", report.baseline_label},
                        {"segments", report.segments},
                        {"entity_reference_tokens", report.entity_reference_tokens},
                        {"systems", std::move(systems)}};
}

namespace detail {
inline std::string fmt_rate(std::optional<double> rate, bool percent = true) {
  if (!rate.has_value()) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", percent ? *rate * 100.0 : *rate);
  return buf;
}
inline std::string fmt_pct(std::optional<double> value) {
  if (!value.has_value()) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *value);
  return buf;
}
}  // namespace detail

// Fixed-width table of the corpus rows, baseline first.
inline std::string render_text_table(const EvaluationReport& report) {
  std::vector<std::string> labels;
  if (report.systems.count(report.baseline_label)) labels.push_back(report.baseline_label);
  for (const auto& [label, row] : report.systems) {
    (void)row;
    if (label != report.baseline_label) labels.push_back(label);
  }

  std::ostringstream out;
  out << "segments: " << report.segments
      << "  entity reference tokens: " << report.entity_reference_tokens << "\n";
  char header[160];
  std::snprintf(header, sizeof(header), "%-16s %8s %8s %8s %8s %8s %8s\n", "system",
                "WER%", "E-WER%", "RWERR%", "P%", "R%", "F1%");
  out << header;
  out << std::string(70, '-') << "\n";
  for (const auto& label : labels) {
    const SystemRow& row = report.systems.at(label);
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %8s %8s %8s %8s %8s %8s\n", label.c_str(),
                  detail::fmt_rate(row.wer).c_str(), detail::fmt_rate(row.e_wer).c_str(),
                  detail::fmt_pct(row.rwerr_vs_baseline).c_str(),
                  detail::fmt_rate(row.prf.precision).c_str(),
                  detail::fmt_rate(row.prf.recall).c_str(),
                  detail::fmt_rate(row.prf.f1).c_str());
    out << line;
  }
  out << "\n";
  char cheader[160];
  std::snprintf(cheader, sizeof(cheader), "%-16s %10s %10s %10s %10s %10s\n", "system",
                "entC", "entS", "entD", "entI", "entRef");
  out << cheader;
  out << std::string(70, '-') << "\n";
  for (const auto& label : labels) {
    const SystemRow& row = report.systems.at(label);
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %10zu %10zu %10zu %10zu %10zu\n",
                  label.c_str(), row.entity.correct, row.entity.substitutions,
                  row.entity.deletions, row.entity.insertions, row.entity.n_ref);
    out << line;
  }
  return out.str();
}

// CSV rows mirror the JSON report: one line per system, rates in
// percent, empty cells for undefined values.
inline std::string render_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "system,wer,e_wer,rwerr_vs_baseline,precision,recall,f1,"
         "entity_correct,entity_substitutions,entity_deletions,entity_insertions,"
         "entity_n_ref,overall_n_ref,segments\n";
  auto cell = [](std::optional<double> v, double scale) {
    if (!v.has_value()) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v * scale);
    return std::string(buf);
  };
  for (const auto& [label, row] : report.systems) {
    out << label << ',' << cell(row.wer, 100.0) << ',' << cell(row.e_wer, 100.0) << ','
        << cell(row.rwerr_vs_baseline, 1.0) << ',' << cell(row.prf.precision, 100.0)
        << ',' << cell(row.prf.recall, 100.0) << ',' << cell(row.prf.f1, 100.0) << ','
        << row.entity.correct << ',' << row.entity.substitutions << ','
        << row.entity.deletions << ',' << row.entity.insertions << ','
        << row.entity.n_ref << ',' << row.overall.n_ref << ',' << row.segments << "\n";
  }
  return out.str();
}

// --- published-count fixtures ------------------------------------------

// Externally supplied entity alignment counts with the rates they are
// expected to reproduce; used to validate the scorer's arithmetic.
struct FixtureSystem {
  std::string label;
  AlignmentCounts counts;  // n_ref filled from the dataset total
  std::optional<double> expected_e_wer;   // percent
  std::optional<double> expected_rwerr;   // percent, vs the dataset baseline
};

struct FixtureDataset {
  std::string name;
  std::size_t entity_reference_tokens = 0;
  std::vector<FixtureSystem> systems;  // first entry is the baseline
};

inline std::vector<FixtureDataset> parse_fixtures(const nlohmann::json& j) {
  std::vector<FixtureDataset> out;
  if (!j.contains("datasets") || !j["datasets"].is_array()) {
    throw std::runtime_error("fixture file must contain a datasets array");
  }
  for (const auto& d : j["datasets"]) {
    FixtureDataset ds;
    ds.name = d.at("name").get<std::string>();
    ds.entity_reference_tokens = d.at("entity_reference_tokens").get<std::size_t>();
    for (const auto& s : d.at("systems")) {
      FixtureSystem fs;
      fs.label = s.at("label").get<std::string>();
      const auto& c = s.at("counts");
      fs.counts.correct = c.at("correct").get<std::size_t>();
      fs.counts.substitutions = c.at("substitutions").get<std::size_t>();
      fs.counts.deletions = c.at("deletions").get<std::size_t>();
      fs.counts.insertions = c.at("insertions").get<std::size_t>();
      fs.counts.n_ref = ds.entity_reference_tokens;
      if (s.contains("expected_e_wer") && s["expected_e_wer"].is_number()) {
        fs.expected_e_wer = s["expected_e_wer"].get<double>();
      }
      if (s.contains("expected_rwerr") && s["expected_rwerr"].is_number()) {
        fs.expected_rwerr = s["expected_rwerr"].get<double>();
      }
      ds.systems.push_back(std::move(fs));
    }
    if (ds.systems.empty()) throw std::runtime_error("dataset without systems: " + ds.name);
    out.push_back(std::move(ds));
  }
  return out;
}

struct FixtureCheck {
  std::string dataset;
  std::string system;
  std::string what;  // consistency | e_wer | rwerr
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Recompute E-WER and RWERR from the fixture counts and compare against
// the expected published values.
inline std::vector<FixtureCheck> check_fixtures(const std::vector<FixtureDataset>& datasets,
                                                double e_wer_tolerance_pp = 0.01,
                                                double rwerr_tolerance_pp = 0.1) {
  std::vector<FixtureCheck> checks;
  for (const auto& ds : datasets) {
    std::optional<double> baseline_e_wer;
    for (std::size_t i = 0; i < ds.systems.size(); ++i) {
      const auto& sys = ds.systems[i];
      FixtureCheck consistency;
      consistency.dataset = ds.name;
      consistency.system = sys.label;
      consistency.what = "consistency";
      consistency.computed = static_cast<double>(
          sys.counts.correct + sys.counts.substitutions + sys.counts.deletions);
      consistency.expected = static_cast<double>(ds.entity_reference_tokens);
      consistency.tolerance = 0.0;
      consistency.pass = consistency.computed == consistency.expected;
      checks.push_back(consistency);

      const std::optional<double> rate = wer(sys.counts);
      const double e_wer_pct = rate.has_value() ? *rate * 100.0 : 0.0;
      if (i == 0) baseline_e_wer = e_wer_pct;

      if (sys.expected_e_wer.has_value()) {
        FixtureCheck c;
        c.dataset = ds.name;
        c.system = sys.label;
        c.what = "e_wer";
        c.computed = e_wer_pct;
        c.expected = *sys.expected_e_wer;
        c.tolerance = e_wer_tolerance_pp;
        c.pass = std::fabs(c.computed - c.expected) <= c.tolerance;
        checks.push_back(c);
      }
      if (sys.expected_rwerr.has_value() && baseline_e_wer.has_value()) {
        const auto r = rwerr(*baseline_e_wer, e_wer_pct);
        FixtureCheck c;
        c.dataset = ds.name;
        c.system = sys.label;
        c.what = "rwerr";
        c.computed = r.value_or(0.0);
        c.expected = *sys.expected_rwerr;
        c.tolerance = rwerr_tolerance_pp;
        c.pass = r.has_value() && std::fabs(c.computed - c.expected) <= c.tolerance;
        checks.push_back(c);
      }
    }
  }
  return checks;
}

}  // namespace recover
