#pragma once

// File formats: JSONL segment corpora, entity lexicons (plain text or
// JSONL), and the run artifacts (corrected.jsonl, edits.jsonl,
// report.json, report.txt). Hard errors throw; recoverable problems are
// returned as warnings with line numbers.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "recover/evaluation.hpp"
#include "recover/guardrails.hpp"
#include "recover/lexicon.hpp"
#include "recover/segment.hpp"

namespace recover {

struct CorpusLoadResult {
  std::vector<SegmentRecord> records;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<SegmentRecord> parse_segment_line(const nlohmann::json& j,
                                                       std::string* error) {
  if (!j.is_object()) {
    *error = "line is not a JSON object";
    return std::nullopt;
  }
  SegmentRecord rec;
  if (!j.contains("segment_id") || !j["segment_id"].is_string()) {
    *error = "missing segment_id";
    return std::nullopt;
  }
  rec.segment_id = j["segment_id"].get<std::string>();
  if (rec.segment_id.empty()) {
    *error = "empty segment_id";
    return std::nullopt;
  }
  if (!j.contains("hypotheses") || !j["hypotheses"].is_array() || j["hypotheses"].empty()) {
    *error = "missing or empty hypotheses";
    return std::nullopt;
  }
  for (const auto& h : j["hypotheses"]) {
    if (!h.is_string()) {
      *error = "hypothesis is not a string";
      return std::nullopt;
    }
    rec.hypotheses.push_back(h.get<std::string>());
  }
  if (j.contains("reference") && j["reference"].is_string()) {
    rec.reference = j["reference"].get<std::string>();
  }
  if (j.contains("metadata") && j["metadata"].is_object()) {
    for (const auto& [k, v] : j["metadata"].items()) {
      if (v.is_string()) rec.metadata[k] = v.get<std::string>();
    }
  }
  return rec;
}

}  // namespace detail

// JSONL corpus, one segment per line. Malformed lines are skipped with a
// line-numbered warning; more than 1% malformed is a hard error, as is
// an empty corpus.
inline CorpusLoadResult load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open segments file: " + path);

  CorpusLoadResult out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  std::size_t content_lines = 0;
  std::size_t malformed = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++content_lines;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    std::string error;
    std::optional<SegmentRecord> rec;
    if (j.is_discarded()) {
      error = "invalid JSON";
    } else {
      rec = detail::parse_segment_line(j, &error);
    }
    if (rec.has_value() && !seen_ids.insert(rec->segment_id).second) {
      rec.reset();
      error = "duplicate segment_id";
    }
    if (!rec.has_value()) {
      ++malformed;
      out.warnings.push_back(path + ":" + std::to_string(line_no) + ": skipped (" + error + ")");
      continue;
    }
    out.records.push_back(std::move(*rec));
  }

  if (content_lines == 0) throw std::runtime_error("empty corpus: " + path);
  if (malformed * 100 > content_lines) {
    throw std::runtime_error("more than 1% of lines malformed in " + path + " (" +
                             std::to_string(malformed) + "/" +
                             std::to_string(content_lines) + ")");
  }
  if (out.records.empty()) throw std::runtime_error("no valid segments in " + path);
  return out;
}

struct LexiconLoadResult {
  EntityLexicon lexicon;
  std::vector<std::string> warnings;
};

// Plain text (one phrase per line) or JSONL {"phrase": ..., "type": ...};
// sniffed from the first non-blank line. Duplicate normalized phrases
// keep the first occurrence.
inline LexiconLoadResult load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);

  LexiconLoadResult out;
  std::string line;
  std::size_t line_no = 0;
  bool jsonl = false;
  bool sniffed = false;

  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (!sniffed) {
      jsonl = line[first] == '{';
      sniffed = true;
    }

    std::string phrase;
    std::optional<std::string> type;
    if (jsonl) {
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("phrase") ||
          !j["phrase"].is_string()) {
        out.warnings.push_back(path + ":" + std::to_string(line_no) +
                               ": skipped (bad lexicon entry)");
        continue;
      }
      phrase = j["phrase"].get<std::string>();
      if (j.contains("type") && j["type"].is_string()) type = j["type"].get<std::string>();
    } else {
      const std::size_t last = line.find_last_not_of(" \t\r");
      phrase = line.substr(first, last - first + 1);
    }

    if (!out.lexicon.add(phrase, type)) {
      out.warnings.push_back(path + ":" + std::to_string(line_no) +
                             ": skipped (empty after normalization or duplicate): " + phrase);
    }
  }
  if (out.lexicon.empty()) throw std::runtime_error("no usable lexicon phrases in " + path);
  return out;
}

// Mock script file: {"responses": {"<fingerprint>": "<raw reply>"},
// "default": "<raw reply>"} -- fingerprints are printed per segment in
// corrected.jsonl, so a script can be authored from a previous run.
struct MockScript {
  std::map<std::string, std::string> responses;
  std::string default_response = R"({"edits": []})";
};

inline MockScript load_mock_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("mock script is not a JSON object: " + path);
  }
  MockScript s;
  if (j.contains("responses") && j["responses"].is_object()) {
    for (const auto& [k, v] : j["responses"].items()) {
      if (v.is_string()) s.responses[k] = v.get<std::string>();
    }
  }
  if (j.contains("default") && j["default"].is_string()) {
    s.default_response = j["default"].get<std::string>();
  }
  return s;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("invalid JSON in " + path);
  return j;
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace recover
