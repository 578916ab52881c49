// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace podtile {

/// ASCII whitespace: space, \t, \n, \v, \f, \r.
constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

/// Token character for the lexical analyzer. Bytes >= 0x80 are kept so that
/// UTF-8 words are not split apart.
constexpr bool is_token_char(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

constexpr char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

inline std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

/// Number of maximal non-whitespace runs.
inline std::size_t count_words(std::string_view text) noexcept {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

/// Words joined by single spaces; leading/trailing whitespace removed.
inline std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (auto w : split_whitespace(text)) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

/// First `n` words of `text`, single-space joined.
inline std::string first_words(std::string_view text, std::size_t n) {
  std::string out;
  std::size_t taken = 0;
  for (auto w : split_whitespace(text)) {
    if (taken == n) break;
    if (!out.empty()) out.push_back(' ');
    out.append(w);
    ++taken;
  }
  return out;
}

/// Lowercased whitespace tokens; the unit for ROUGE scoring of titles.
inline std::vector<std::string> lower_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto w : split_whitespace(text)) out.push_back(to_lower(w));
  return out;
}

/// Lexical analyzer shared by retrieval, cohesion and keyword extraction:
/// splits on anything that is not a token character and lowercases.
inline std::vector<std::string> analyze(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && is_token_char(text[i])) ++i;
    if (i > start) out.push_back(to_lower(text.substr(start, i - start)));
  }
  return out;
}

/// Case-insensitive search for `term` in `text` where the match is bounded on
/// both sides by a non-token character or the string edge.
inline bool contains_word(std::string_view text, std::string_view term) {
  if (term.empty()) return false;
  const std::string hay = to_lower(text);
  const std::string needle = to_lower(term);
  std::size_t pos = hay.find(needle);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_token_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == hay.size() || !is_token_char(hay[end]);
    if (left_ok && right_ok) return true;
    pos = hay.find(needle, pos + 1);
  }
  return false;
}

}  // namespace podtile
