#pragma once

// Text normalization and whitespace tokenization shared by every stage of
// the pipeline. All matching (retrieval, fusion voting, guardrails,
// scoring) happens on the normalized forms produced here; original
// surfaces and character offsets are preserved so edits can be applied to
// the raw transcript.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace recover {

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// ASCII alphanumerics plus any non-ASCII byte count as word characters.
// Multi-byte UTF-8 sequences pass through normalization untouched.
inline bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Apostrophes and hyphens survive normalization only between two word
// characters ("don't", "wi-fi"); everywhere else they are punctuation.
inline bool is_kept_joiner(std::string_view raw, std::size_t i) {
  const char c = raw[i];
  if (c != '\'' && c != '-') return false;
  if (i == 0 || i + 1 >= raw.size()) return false;
  return is_word_byte(static_cast<unsigned char>(raw[i - 1])) &&
         is_word_byte(static_cast<unsigned char>(raw[i + 1]));
}

// Lowercase, strip punctuation (keeping intra-word apostrophes/hyphens),
// collapse whitespace runs to single spaces, trim. Idempotent.
inline std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (c < 0x80 && is_space_byte(c)) {
      pending_space = true;
      continue;
    }
    char mapped;
    if (is_word_byte(c)) {
      mapped = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                      : static_cast<char>(c);
    } else if (is_kept_joiner(raw, i)) {
      mapped = static_cast<char>(c);
    } else {
      continue;  // punctuation
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(mapped);
  }
  return out;
}

struct Token {
  std::string surface;     // raw[char_start, char_end)
  std::string norm;        // normalize_text(surface), never empty
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct TokenStream {
  std::string raw;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  std::vector<std::string> norms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.norm);
    return out;
  }
};

// Whitespace-delimited runs become tokens; runs that normalize to nothing
// (pure punctuation) are dropped. Joining the norms with single spaces
// equals normalize_text(raw).
inline TokenStream tokenize(std::string_view raw) {
  TokenStream ts;
  ts.raw.assign(raw);
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    while (i < n && static_cast<unsigned char>(raw[i]) < 0x80 &&
           is_space_byte(static_cast<unsigned char>(raw[i]))) {
      ++i;
    }
    const std::size_t start = i;
    while (i < n && !(static_cast<unsigned char>(raw[i]) < 0x80 &&
                      is_space_byte(static_cast<unsigned char>(raw[i])))) {
      ++i;
    }
    if (i == start) break;
    std::string_view run = raw.substr(start, i - start);
    std::string norm = normalize_text(run);
    if (!norm.empty()) {
      ts.tokens.push_back(Token{std::string(run), std::move(norm), start, i});
    }
  }
  return ts;
}

inline std::string join_with_spaces(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(' ');
    out += parts[i];
  }
  return out;
}

}  // namespace recover
