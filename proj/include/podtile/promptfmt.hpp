// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Generator wire format.
///
/// Input (context block, blank line, indexed sentences):
///
///     Episode title: <title>
///     Episode description: <description>
///     Previous chapters: <t1> | <t2> | ...      (only when titles exist)
///
///     <i>: <sentence i>
///     <i+1>: <sentence i+1>
///
/// Target / output: "<index> := <title>" entries joined by " | ", or the
/// sentinel "No chapter boundaries were found." when the chunk has none.
///
/// Context fields are rendered whitespace-normalized. The context block is
/// kept within ChunkBudget::context_words (labels and separators count as
/// words) by trimming the description tail, then dropping the oldest previous
/// titles, and only as a last resort cutting the episode title. When the
/// budget cannot hold even the four label words, the block is omitted.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "podtile/chunking.hpp"
#include "podtile/corpus.hpp"
#include "podtile/text.hpp"

namespace podtile {

inline constexpr std::string_view kNoBoundariesSentinel = "No chapter boundaries were found.";
inline constexpr std::string_view kTitleLabel = "Episode title: ";
inline constexpr std::string_view kDescriptionLabel = "Episode description: ";
inline constexpr std::string_view kPreviousLabel = "Previous chapters: ";
inline constexpr std::string_view kEntrySeparator = " | ";
inline constexpr std::string_view kEntryDelimiter = ":=";

struct StaticContext {
  std::string title;
  std::string description;
};

struct DynamicContext {
  std::vector<std::string> previous_titles;  // oldest first
};

/// Inclusive range of sentence indices a chunk covers.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
  bool operator==(const IndexRange&) const = default;
};

struct ChunkPrediction {
  std::vector<Chapter> entries;  // strictly increasing start_index
  bool is_empty_sentinel = false;

  bool operator==(const ChunkPrediction&) const = default;
};

struct ParseResult {
  ChunkPrediction prediction;
  std::vector<std::string> warnings;
};

/// Makes a title safe for the output grammar: '|' becomes '/', ":=" becomes
/// '=', whitespace is normalized.
inline std::string sanitize_title(std::string_view title) {
  std::string s(title);
  std::replace(s.begin(), s.end(), '|', '/');
  for (auto pos = s.find(kEntryDelimiter); pos != std::string::npos; pos = s.find(kEntryDelimiter)) {
    s.replace(pos, kEntryDelimiter.size(), "=");
  }
  return normalize_whitespace(s);
}

inline std::string render_target(const std::vector<Chapter>& chapters_in_chunk) {
  if (chapters_in_chunk.empty()) return std::string(kNoBoundariesSentinel);
  std::string out;
  for (std::size_t i = 0; i < chapters_in_chunk.size(); ++i) {
    if (i) out += kEntrySeparator;
    out += std::to_string(chapters_in_chunk[i].start_index);
    out += " := ";
    out += sanitize_title(chapters_in_chunk[i].title);
  }
  return out;
}

inline std::string render_context_block(const StaticContext& static_ctx,
                                        const DynamicContext& dynamic_ctx,
                                        std::size_t context_words) {
  constexpr std::size_t kLabelWords = 4;  // "Episode title:" + "Episode description:"
  if (context_words < kLabelWords) return {};

  std::string title = normalize_whitespace(static_ctx.title);
  std::string description = normalize_whitespace(static_ctx.description);
  std::vector<std::string> previous;
  for (const auto& t : dynamic_ctx.previous_titles) {
    auto s = sanitize_title(t);
    if (!s.empty()) previous.push_back(std::move(s));
  }

  // "Previous chapters:" label + title words + one "|" between titles.
  auto previous_cost = [](const std::vector<std::string>& titles, std::size_t from) {
    if (from >= titles.size()) return std::size_t{0};
    std::size_t cost = 2 + (titles.size() - from - 1);
    for (std::size_t i = from; i < titles.size(); ++i) cost += count_words(titles[i]);
    return cost;
  };

  std::size_t title_words = count_words(title);
  if (kLabelWords + title_words > context_words) {
    title_words = context_words - kLabelWords;
    title = first_words(title, title_words);
  }
  const std::size_t fixed = kLabelWords + title_words;

  std::size_t drop = 0;  // oldest previous titles removed
  const std::size_t desc_words = count_words(description);
  if (fixed + desc_words + previous_cost(previous, 0) > context_words) {
    const std::size_t prev = previous_cost(previous, 0);
    const std::size_t room = fixed + prev < context_words ? context_words - fixed - prev : 0;
    description = first_words(description, room);
    while (drop < previous.size() && fixed + previous_cost(previous, drop) > context_words) ++drop;
  }

  std::string out;
  out += kTitleLabel;
  out += title;
  out += '\n';
  out += kDescriptionLabel;
  out += description;
  if (drop < previous.size()) {
    out += '\n';
    out += kPreviousLabel;
    for (std::size_t i = drop; i < previous.size(); ++i) {
      if (i != drop) out += kEntrySeparator;
      out += previous[i];
    }
  }
  return out;
}

inline std::string render_input(std::string_view chunk_text, const StaticContext& static_ctx,
                                 const DynamicContext& dynamic_ctx, const ChunkBudget& budget) {
  std::string context = render_context_block(static_ctx, dynamic_ctx, budget.context_words);
  if (context.empty()) return std::string(chunk_text);
  context += "\n\n";
  context += chunk_text;
  return context;
}

namespace detail {

inline bool parse_index(std::string_view digits, std::size_t& out) {
  if (digits.empty()) return false;
  for (char c : digits) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  return ec == std::errc{} && ptr == digits.data() + digits.size();
}

inline std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 60;
  std::string out(s.substr(0, kMax));
  for (auto& c : out) {
    if (static_cast<unsigned char>(c) < 0x20) c = ' ';
  }
  if (s.size() > kMax) out += "...";
  return out;
}

}  // namespace detail

/// Lenient inverse of render_target. Never throws: unusable fragments are
/// dropped with a warning, duplicate indices keep their first occurrence and
/// entries come back sorted.
inline ParseResult parse_output(std::string_view text, IndexRange valid_range) {
  ParseResult result;
  if (trim(text) == kNoBoundariesSentinel) {
    result.prediction.is_empty_sentinel = true;
    return result;
  }

  auto& entries = result.prediction.entries;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('|', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view fragment = text.substr(begin, end - begin);
    begin = end + 1;

    const auto delim = fragment.find(kEntryDelimiter);
    std::size_t index = 0;
    const std::string_view title =
        delim == std::string_view::npos ? std::string_view{} : trim(fragment.substr(delim + 2));
    if (delim == std::string_view::npos || title.empty() ||
        !detail::parse_index(trim(fragment.substr(0, delim)), index)) {
      result.warnings.push_back("unparseable fragment dropped: \"" + detail::excerpt(fragment) + "\"");
      continue;
    }
    if (!valid_range.contains(index)) {
      result.warnings.push_back("index " + std::to_string(index) + " outside chunk range [" +
                                std::to_string(valid_range.first) + ", " +
                                std::to_string(valid_range.last) + "] dropped");
      continue;
    }
    const bool duplicate = std::any_of(entries.begin(), entries.end(),
                                       [&](const Chapter& c) { return c.start_index == index; });
    if (duplicate) {
      result.warnings.push_back("duplicate index " + std::to_string(index) + " dropped");
      continue;
    }
    entries.push_back({index, normalize_whitespace(title)});
  }

  if (!std::is_sorted(entries.begin(), entries.end(),
                      [](const Chapter& a, const Chapter& b) { return a.start_index < b.start_index; })) {
    result.warnings.push_back("entries out of order; sorted");
    std::stable_sort(entries.begin(), entries.end(), [](const Chapter& a, const Chapter& b) {
      return a.start_index < b.start_index;
    });
  }
  return result;
}

}  // namespace podtile
