#pragma once

// Metaphone-style phonetic key for normalized tokens. The encoding below
// is a fixed, documented variant of the classic Metaphone consonant
// skeleton; retrieval only compares key prefixes, so the exact code
// alphabet matters less than stable collisions between homophones
// ("kilo"/"killo", "cytiva"/"sitiva").
//
// Rules (applied to the letters a-z of the input, everything else dropped):
//   - initial "ae","gn","kn","pn","wr" drop the first letter;
//     initial "wh" -> W; initial "x" -> S
//   - duplicate adjacent letters collapse (except "cc")
//   - vowels are emitted only in initial position, as themselves
//   - b -> B, silent in final "mb"
//   - c -> X before "ia"/"h" ("sch" -> K), S before i/e/y, else K
//   - d -> J before "ge"/"gy"/"gi" (consuming the g), else T
//   - g -> J before e/i/y, K otherwise; "gh" is K at word start and
//     silent elsewhere; silent in final "gn"/"gne"
//   - h -> silent between a vowel and a non-vowel, else H
//   - k silent after c; p -> F before h; q -> K; v -> F; z -> S; x -> KS
//   - s/t -> X before "io"/"ia"; "sh" -> X; "th" -> 0; "tch": t silent
//   - w/y emitted only before a vowel
//
// Same input always yields the same key; empty input yields an empty key.

#include <string>
#include <string_view>

namespace recover {

namespace detail {
inline bool is_ph_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}
}  // namespace detail

inline std::string phonetic_key(std::string_view word) {
  using detail::is_ph_vowel;
  std::string s;
  s.reserve(word.size());
  for (char c : word) {
    if (c >= 'a' && c <= 'z') s.push_back(c);
    else if (c >= 'A' && c <= 'Z') s.push_back(static_cast<char>(c - 'A' + 'a'));
  }
  if (s.empty()) return {};

  std::string key;
  std::size_t i = 0;
  if (s.size() >= 2) {
    const std::string_view head = std::string_view(s).substr(0, 2);
    if (head == "ae" || head == "gn" || head == "kn" || head == "pn" || head == "wr") {
      i = 1;
    } else if (head == "wh") {
      key.push_back('W');
      i = 2;
    }
  }
  if (i == 0 && s[0] == 'x') {
    key.push_back('S');
    i = 1;
  }

  for (; i < s.size(); ++i) {
    const char c = s[i];
    const char prev = i > 0 ? s[i - 1] : '\0';
    const char next = i + 1 < s.size() ? s[i + 1] : '\0';
    const char next2 = i + 2 < s.size() ? s[i + 2] : '\0';
    if (c == prev && c != 'c') continue;

    switch (c) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        if (i == 0) key.push_back(static_cast<char>(c - 'a' + 'A'));
        break;
      case 'b':
        if (!(i + 1 == s.size() && prev == 'm')) key.push_back('B');
        break;
      case 'c':
        if (next == 'i' && next2 == 'a') {
          key.push_back('X');
        } else if (next == 'h') {
          key.push_back(prev == 's' ? 'K' : 'X');
          ++i;
        } else if (next == 'i' || next == 'e' || next == 'y') {
          key.push_back('S');
        } else {
          key.push_back('K');
        }
        break;
      case 'd':
        if (next == 'g' && (next2 == 'e' || next2 == 'y' || next2 == 'i')) {
          key.push_back('J');
          ++i;
        } else {
          key.push_back('T');
        }
        break;
      case 'f': key.push_back('F'); break;
      case 'g':
        if (next == 'h') {
          if (i == 0) key.push_back('K');
          ++i;  // gh is silent past the first letter
        } else if (next == 'n' && (i + 2 == s.size() || (next2 == 'e' && i + 3 == s.size()))) {
          // final gn / gne
        } else if (next == 'e' || next == 'i' || next == 'y') {
          key.push_back('J');
        } else {
          key.push_back('K');
        }
        break;
      case 'h':
        if (is_ph_vowel(prev) && !is_ph_vowel(next)) break;
        key.push_back('H');
        break;
      case 'j': key.push_back('J'); break;
      case 'k':
        if (prev != 'c') key.push_back('K');
        break;
      case 'l': key.push_back('L'); break;
      case 'm': key.push_back('M'); break;
      case 'n': key.push_back('N'); break;
      case 'p':
        if (next == 'h') {
          key.push_back('F');
          ++i;
        } else {
          key.push_back('P');
        }
        break;
      case 'q': key.push_back('K'); break;
      case 'r': key.push_back('R'); break;
      case 's':
        if (next == 'h') {
          key.push_back('X');
          ++i;
        } else if (next == 'i' && (next2 == 'o' || next2 == 'a')) {
          key.push_back('X');
        } else {
          key.push_back('S');
        }
        break;
      case 't':
        if (next == 'c' && next2 == 'h') break;  // watch -> WX
        if (next == 'h') {
          key.push_back('0');
          ++i;
        } else if (next == 'i' && (next2 == 'o' || next2 == 'a')) {
          key.push_back('X');
        } else {
          key.push_back('T');
        }
        break;
      case 'v': key.push_back('F'); break;
      case 'w':
        if (is_ph_vowel(next)) key.push_back('W');
        break;
      case 'x':
        key.push_back('K');
        key.push_back('S');
        break;
      case 'y':
        if (is_ph_vowel(next)) key.push_back('Y');
        break;
      case 'z': key.push_back('S'); break;
      default: break;  // non-letters already stripped
    }
  }
  return key;
}

// Prefix collision test used by retrieval: the keys must agree on a
// common prefix of min(prefix_len, shorter key length), and that shared
// length must be at least 3 code characters.
inline bool phonetic_prefix_hit(std::string_view key_a, std::string_view key_b,
                                std::size_t prefix_len) {
  const std::size_t need = std::min({prefix_len, key_a.size(), key_b.size()});
  if (need < 3) return false;
  return key_a.substr(0, need) == key_b.substr(0, need);
}

}  // namespace recover
