#pragma once

// Entity phrase lexicon. Canonical casing is kept for rendering
// replacements; all matching runs on normalized forms. Tagging finds
// entity occurrences in a token stream by greedy longest match, left to
// right, which also defines the reference-token scope of the entity
// error rate.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recover/text.hpp"

namespace recover {

struct LexiconEntry {
  std::string phrase;                       // canonical casing
  std::optional<std::string> entity_type;
  std::string norm;                         // normalize_text(phrase)
  std::vector<std::string> norm_words;
};

class EntityLexicon {
 public:
  // Returns false (and adds nothing) for phrases that normalize to the
  // empty string or collide with an already-present normalized phrase.
  bool add(std::string phrase, std::optional<std::string> entity_type = std::nullopt) {
    TokenStream ts = tokenize(phrase);
    if (ts.tokens.empty()) return false;
    std::string norm = join_with_spaces(ts.norms());
    if (by_norm_.count(norm)) return false;

    LexiconEntry entry;
    entry.phrase = std::move(phrase);
    entry.entity_type = std::move(entity_type);
    entry.norm = norm;
    entry.norm_words = ts.norms();

    const std::size_t index = entries_.size();
    by_norm_.emplace(std::move(norm), index);
    std::string lowered = lowercase_ascii(entry.phrase);
    by_lowercase_.emplace(std::move(lowered), index);

    auto& bucket = by_first_word_[entry.norm_words.front()];
    bucket.push_back(index);
    // longest phrases first so greedy tagging can take the first full match
    std::stable_sort(bucket.begin(), bucket.end(), [this](std::size_t a, std::size_t b) {
      return entries_[a].norm_words.size() > entries_[b].norm_words.size();
    });

    entries_.push_back(std::move(entry));
    return true;
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const LexiconEntry& entry(std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> find_normalized(std::string_view norm) const {
    auto it = by_norm_.find(std::string(norm));
    if (it == by_norm_.end()) return std::nullopt;
    return it->second;
  }

  // Case-insensitive exact phrase lookup (punctuation still significant).
  std::optional<std::size_t> find_case_insensitive(std::string_view phrase) const {
    auto it = by_lowercase_.find(lowercase_ascii(phrase));
    if (it == by_lowercase_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_exact(std::string_view phrase) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].phrase == phrase) return i;
    }
    return std::nullopt;
  }

  const std::vector<std::size_t>* phrases_starting_with(const std::string& first_norm_word) const {
    auto it = by_first_word_.find(first_norm_word);
    if (it == by_first_word_.end()) return nullptr;
    return &it->second;
  }

  static std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
  }

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_norm_;
  std::unordered_map<std::string, std::size_t> by_lowercase_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_word_;
};

// Token-index range [token_start, token_end) matching one lexicon phrase.
struct EntitySpanTag {
  std::size_t phrase_index = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;

  std::size_t token_count() const { return token_end - token_start; }
};

// Greedy longest-match left-to-right; tagged tokens are consumed, so the
// returned ranges never overlap.
inline std::vector<EntitySpanTag> tag_entity_tokens(const TokenStream& stream,
                                                    const EntityLexicon& lexicon) {
  std::vector<EntitySpanTag> tags;
  const auto& tokens = stream.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::vector<std::size_t>* bucket = lexicon.phrases_starting_with(tokens[i].norm);
    bool matched = false;
    if (bucket) {
      for (std::size_t phrase_index : *bucket) {
        const auto& words = lexicon.entry(phrase_index).norm_words;
        if (i + words.size() > tokens.size()) continue;
        bool all_equal = true;
        for (std::size_t k = 0; k < words.size(); ++k) {
          if (tokens[i + k].norm != words[k]) {
            all_equal = false;
            break;
          }
        }
        if (all_equal) {
          tags.push_back(EntitySpanTag{phrase_index, i, i + words.size()});
          i += words.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  return tags;
}

inline std::size_t total_tagged_tokens(const std::vector<EntitySpanTag>& tags) {
  std::size_t n = 0;
  for (const auto& t : tags) n += t.token_count();
  return n;
}

}  // namespace recover
