#pragma once

// Correction proposal (Tool 2): render the constrained prompt, call a
// pluggable backend, and parse the edit JSON it returns. Backends are
// the pipeline's only I/O; everything else here is pure. Parse and
// backend failures never throw -- a segment that cannot be proposed for
// simply proceeds with zero edits.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "recover/prompt_template.hpp"

namespace recover {

enum class EditStatus { Proposed, Verified, Rejected };

struct EditProposal {
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string find;
  std::string replace;
  std::optional<std::string> entity_type;
  double confidence = 1.0;
  std::string reason;
  EditStatus status = EditStatus::Proposed;
};

enum class ProposerMode { Correct, SelectAndCorrect };

struct CandidatePhrase {
  std::string phrase;
  std::optional<std::string> entity_type;
};

struct ProposerRequest {
  ProposerMode mode = ProposerMode::Correct;
  // Correct mode: transcripts[0] is the edit target, the rest are
  // read-only context. SelectAndCorrect: the N variants to choose from.
  std::vector<std::string> transcripts;
  std::vector<CandidatePhrase> candidates;
};

struct ProposerResponse {
  std::optional<int> chosen_variant;
  std::vector<EditProposal> edits;
  std::string raw;                 // verbatim backend output, for audit
  bool parse_ok = true;            // false when no JSON object was found
  std::vector<std::string> warnings;
};

// Pure: identical requests render byte-identical prompts.
inline std::string build_prompt(const ProposerRequest& request) {
  std::string p;
  p += kPromptRoleLine;
  p += "\n\n";
  p += kPromptRules;
  p += "\n";

  if (request.mode == ProposerMode::Correct) {
    p += "Transcript:\n<<<\n";
    p += request.transcripts.empty() ? std::string() : request.transcripts.front();
    p += "\n>>>\n";
    if (request.transcripts.size() > 1) {
      p += "\nAlternative decodings of the same audio, for context only (do "
           "not edit these):\n";
      for (std::size_t i = 1; i < request.transcripts.size(); ++i) {
        p += "  context " + std::to_string(i - 1) + ": " + request.transcripts[i] + "\n";
      }
    }
  } else {
    p += "Transcript variants of the same audio:\n";
    for (std::size_t i = 0; i < request.transcripts.size(); ++i) {
      p += "  variant " + std::to_string(i) + ": " + request.transcripts[i] + "\n";
    }
    p += "Pick the variant with the most faithful entity phrases as the base "
         "transcript.\n";
  }

  p += "\n";
  if (request.candidates.empty()) {
    p += kPromptNoCandidates;
  } else {
    p += "Candidate entity phrases:\n";
    for (std::size_t i = 0; i < request.candidates.size(); ++i) {
      p += "  " + std::to_string(i + 1) + ". " + request.candidates[i].phrase;
      if (request.candidates[i].entity_type.has_value()) {
        p += " (" + *request.candidates[i].entity_type + ")";
      }
      p += "\n";
    }
  }

  p += "\n";
  p += request.mode == ProposerMode::Correct ? kPromptSchemaCorrect : kPromptSchemaSelect;
  return p;
}

namespace detail {

// First parseable top-level JSON object in the text; tolerates prose and
// code fences around it.
inline std::optional<nlohmann::json> extract_json_object(std::string_view text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        --depth;
        if (depth == 0) {
          auto parsed = nlohmann::json::parse(text.substr(start, i - start + 1),
                                              nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;  // balanced but unparseable; try the next '{'
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// variant_count bounds chosen_variant in SelectAndCorrect mode (pass the
// request's transcript count); ignored in Correct mode.
inline ProposerResponse parse_response(std::string_view raw, ProposerMode mode,
                                       std::size_t variant_count = 0) {
  ProposerResponse out;
  out.raw.assign(raw);

  auto obj = detail::extract_json_object(raw);
  if (!obj.has_value()) {
    out.parse_ok = false;
    out.warnings.push_back("no JSON object found in backend output");
    return out;
  }
  const nlohmann::json& j = *obj;

  if (mode == ProposerMode::SelectAndCorrect) {
    if (j.contains("chosen_variant") && j["chosen_variant"].is_number_integer()) {
      const auto v = j["chosen_variant"].get<std::int64_t>();
      if (v >= 0 && static_cast<std::size_t>(v) < variant_count) {
        out.chosen_variant = static_cast<int>(v);
      } else {
        out.warnings.push_back("chosen_variant " + std::to_string(v) +
                               " out of range; falling back to variant 0");
        out.chosen_variant = 0;
      }
    } else {
      out.warnings.push_back("missing chosen_variant; falling back to variant 0");
      out.chosen_variant = 0;
    }
  }

  if (!j.contains("edits")) {
    out.warnings.push_back("response has no edits array");
    return out;
  }
  if (!j["edits"].is_array()) {
    out.warnings.push_back("edits is not an array; ignoring");
    return out;
  }

  for (const auto& e : j["edits"]) {
    if (!e.is_object()) {
      out.warnings.push_back("dropped non-object edit entry");
      continue;
    }
    EditProposal p;
    if (!e.contains("find") || !e["find"].is_string() || e["find"].get<std::string>().empty() ||
        !e.contains("replace") || !e["replace"].is_string() ||
        e["replace"].get<std::string>().empty()) {
      out.warnings.push_back("dropped edit with missing find/replace");
      continue;
    }
    p.find = e["find"].get<std::string>();
    p.replace = e["replace"].get<std::string>();
    if (e.contains("start") && e["start"].is_number_integer() && e["start"].get<std::int64_t>() >= 0) {
      p.char_start = static_cast<std::size_t>(e["start"].get<std::int64_t>());
    }
    if (e.contains("end") && e["end"].is_number_integer() && e["end"].get<std::int64_t>() >= 0) {
      p.char_end = static_cast<std::size_t>(e["end"].get<std::int64_t>());
    }
    if (p.char_end < p.char_start) {
      out.warnings.push_back("edit end precedes start; clamping");
      p.char_end = p.char_start;
    }
    if (e.contains("entity_type") && e["entity_type"].is_string()) {
      p.entity_type = e["entity_type"].get<std::string>();
    }
    if (e.contains("confidence") && e["confidence"].is_number()) {
      p.confidence = std::min(1.0, std::max(0.0, e["confidence"].get<double>()));
    }
    if (e.contains("reason") && e["reason"].is_string()) {
      p.reason = e["reason"].get<std::string>();
    }
    out.edits.push_back(std::move(p));
  }
  return out;
}

// Backend abstraction. retryable marks transport-level failures worth
// retrying (timeouts, 5xx); schema problems are not retryable.
struct BackendResult {
  bool ok = false;
  bool retryable = false;
  std::string content;
  std::string error;
  long prompt_tokens = -1;
  long completion_tokens = -1;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResult complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

// FNV-1a over the rendered prompt. The prompt is a pure function of the
// request, so this doubles as a request fingerprint for scripting mocks.
inline std::string fingerprint_prompt(std::string_view prompt) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string fingerprint_request(const ProposerRequest& request) {
  return fingerprint_prompt(build_prompt(request));
}

// Deterministic scripted backend for hermetic tests and offline runs.
// Unknown fingerprints get the default response (an empty edit list).
class MockBackend : public Backend {
 public:
  MockBackend() = default;
  explicit MockBackend(std::map<std::string, std::string> script,
                       std::string default_response = R"({"edits": []})")
      : script_(std::move(script)), default_response_(std::move(default_response)) {}

  BackendResult complete(const std::string& prompt) override {
    BackendResult r;
    r.ok = true;
    auto it = script_.find(fingerprint_prompt(prompt));
    r.content = it != script_.end() ? it->second : default_response_;
    return r;
  }

  std::string name() const override { return "mock"; }

 private:
  std::map<std::string, std::string> script_;
  std::string default_response_ = R"({"edits": []})";
};

struct RetryPolicy {
  int max_retries = 3;        // additional attempts after the first
  int backoff_base_ms = 250;  // doubled per retry
};

struct ProposeResult {
  ProposerResponse response;
  bool backend_ok = true;  // false after exhausting retries
  std::string error;
  int attempts = 0;
  double latency_ms = 0.0;
  long prompt_tokens = -1;
  long completion_tokens = -1;
  std::string fingerprint;
};

// build_prompt -> backend -> parse_response with bounded retries and
// exponential backoff on transport failures.
inline ProposeResult propose(Backend& backend, const ProposerRequest& request,
                             const RetryPolicy& policy = {}) {
  ProposeResult out;
  const std::string prompt = build_prompt(request);
  out.fingerprint = fingerprint_prompt(prompt);

  const auto t0 = std::chrono::steady_clock::now();
  BackendResult br;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    ++out.attempts;
    br = backend.complete(prompt);
    if (br.ok || !br.retryable) break;
    if (attempt < policy.max_retries && policy.backoff_base_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(policy.backoff_base_ms << attempt));
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  if (!br.ok) {
    out.backend_ok = false;
    out.error = br.error.empty() ? "backend failed" : br.error;
    out.response.parse_ok = false;
    return out;
  }
  out.prompt_tokens = br.prompt_tokens;
  out.completion_tokens = br.completion_tokens;
  out.response = parse_response(br.content, request.mode, request.transcripts.size());
  return out;
}

}  // namespace recover
