// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Domain types for chapterized episodes, JSONL corpus IO, dataset filters
/// and descriptive statistics.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "podtile/error.hpp"
#include "podtile/stats.hpp"
#include "podtile/text.hpp"

namespace podtile {

using json = nlohmann::json;

struct Sentence {
  std::string text;
  std::size_t word_count = 0;
  std::optional<double> start_s;
  std::optional<double> end_s;

  static Sentence make(std::string text, std::optional<double> start_s = std::nullopt,
                       std::optional<double> end_s = std::nullopt) {
    Sentence s;
    s.word_count = count_words(text);
    s.text = std::move(text);
    s.start_s = start_s;
    s.end_s = end_s;
    return s;
  }

  bool operator==(const Sentence&) const = default;
};

struct Transcript {
  std::vector<Sentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }

  std::size_t total_words() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.word_count;
    return n;
  }

  bool operator==(const Transcript&) const = default;
};

struct EpisodeMetadata {
  std::string episode_id;
  std::optional<std::string> show_id;
  std::string title;
  std::string description;

  bool operator==(const EpisodeMetadata&) const = default;
};

struct Chapter {
  std::size_t start_index = 0;
  std::string title;

  bool operator==(const Chapter&) const = default;
};

/// Chapters ordered by strictly increasing start_index. A chapter runs until
/// the next one starts; the last one runs to the end of the transcript.
using ChapterSet = std::vector<Chapter>;

struct Episode {
  EpisodeMetadata metadata;
  Transcript transcript;
  std::optional<ChapterSet> reference_chapters;

  const std::string& id() const noexcept { return metadata.episode_id; }
  bool operator==(const Episode&) const = default;
};

/// Returns a description of the first violated ChapterSet invariant, if any.
inline std::optional<std::string> chapter_set_violation(const ChapterSet& chapters,
                                                        std::size_t n_sentences) {
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    const auto& c = chapters[i];
    if (c.start_index >= n_sentences) {
      return "chapter " + std::to_string(i) + " start_index " + std::to_string(c.start_index) +
             " out of range (transcript has " + std::to_string(n_sentences) + " sentences)";
    }
    if (trim(c.title).empty()) return "chapter " + std::to_string(i) + " has an empty title";
    if (i > 0 && c.start_index <= chapters[i - 1].start_index) {
      return "chapter start indices not strictly increasing at chapter " + std::to_string(i);
    }
  }
  return std::nullopt;
}

/// Sentence index ranges [begin, end) of each chapter.
inline std::vector<std::pair<std::size_t, std::size_t>> chapter_spans(const ChapterSet& chapters,
                                                                      std::size_t n_sentences) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  spans.reserve(chapters.size());
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    const std::size_t end = i + 1 < chapters.size() ? chapters[i + 1].start_index : n_sentences;
    spans.emplace_back(chapters[i].start_index, end);
  }
  return spans;
}

/// Throws DataError naming the episode and the violated invariant.
inline void validate_episode(const Episode& ep) {
  auto fail = [&](const std::string& what) {
    throw DataError("episode " + ep.id() + ": " + what);
  };
  if (ep.transcript.empty()) fail("transcript is empty");
  std::optional<double> last_time;
  for (std::size_t i = 0; i < ep.transcript.size(); ++i) {
    const auto& s = ep.transcript.sentences[i];
    const std::string where = "sentence " + std::to_string(i);
    if (trim(s.text).empty()) fail(where + " has empty text");
    if (s.text.find('\n') != std::string::npos) fail(where + " contains a newline");
    if (s.word_count != count_words(s.text)) fail(where + " word_count does not match its text");
    if (s.start_s && *s.start_s < 0.0) fail(where + " has negative start_s");
    if (s.start_s && s.end_s && *s.end_s < *s.start_s) fail(where + " has end_s before start_s");
    for (const auto& t : {s.start_s, s.end_s}) {
      if (!t) continue;
      if (last_time && *t < *last_time) fail(where + " timestamps are decreasing");
      last_time = t;
    }
  }
  if (ep.reference_chapters) {
    if (auto v = chapter_set_violation(*ep.reference_chapters, ep.transcript.size())) fail(*v);
  }
}

inline json to_json(const Episode& ep) {
  json j;
  j["episode_id"] = ep.metadata.episode_id;
  if (ep.metadata.show_id) j["show_id"] = *ep.metadata.show_id;
  j["title"] = ep.metadata.title;
  j["description"] = ep.metadata.description;
  json sentences = json::array();
  for (const auto& s : ep.transcript.sentences) {
    json js;
    js["text"] = s.text;
    if (s.start_s) js["start_s"] = *s.start_s;
    if (s.end_s) js["end_s"] = *s.end_s;
    sentences.push_back(std::move(js));
  }
  j["sentences"] = std::move(sentences);
  if (ep.reference_chapters) {
    json chapters = json::array();
    for (const auto& c : *ep.reference_chapters) {
      chapters.push_back({{"start_index", c.start_index}, {"title", c.title}});
    }
    j["chapters"] = std::move(chapters);
  }
  return j;
}

namespace detail {

inline std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline const json& require(const json& obj, const char* key, const std::string& label,
                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(line_prefix(line) + "missing field " + label);
  return *it;
}

inline std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, key, line);
  if (!v.is_string()) throw DataError(line_prefix(line) + "field " + key + " must be a string");
  return v.get<std::string>();
}

inline std::optional<double> optional_number(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(line_prefix(line) + "field " + key + " must be a number");
  return it->get<double>();
}

}  // namespace detail

/// Parses one corpus record. `line` is used in error messages only.
inline Episode episode_from_json(const json& j, std::size_t line) {
  using detail::line_prefix;
  if (!j.is_object()) throw DataError(line_prefix(line) + "expected a JSON object");
  Episode ep;
  ep.metadata.episode_id = detail::require_string(j, "episode_id", line);
  if (auto it = j.find("show_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError(line_prefix(line) + "field show_id must be a string");
    ep.metadata.show_id = it->get<std::string>();
  }
  ep.metadata.title = detail::require_string(j, "title", line);
  ep.metadata.description = detail::require_string(j, "description", line);

  const auto& sentences = detail::require(j, "sentences", "transcript (\"sentences\")", line);
  if (!sentences.is_array()) throw DataError(line_prefix(line) + "field sentences must be an array");
  for (const auto& js : sentences) {
    if (!js.is_object()) throw DataError(line_prefix(line) + "sentence entries must be objects");
    ep.transcript.sentences.push_back(Sentence::make(detail::require_string(js, "text", line),
                                                     detail::optional_number(js, "start_s", line),
                                                     detail::optional_number(js, "end_s", line)));
  }

  if (auto it = j.find("chapters"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(line_prefix(line) + "field chapters must be an array");
    ChapterSet chapters;
    for (const auto& jc : *it) {
      if (!jc.is_object()) throw DataError(line_prefix(line) + "chapter entries must be objects");
      const auto& idx = detail::require(jc, "start_index", "start_index", line);
      if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0) {
        throw DataError(line_prefix(line) + "chapter start_index must be a non-negative integer");
      }
      chapters.push_back({idx.get<std::size_t>(), detail::require_string(jc, "title", line)});
    }
    ep.reference_chapters = std::move(chapters);
  }
  return ep;
}

/// Reads a JSONL corpus. Blank lines are ignored; episode ids must be unique.
inline std::vector<Episode> read_corpus(std::istream& in) {
  std::vector<Episode> episodes;
  std::vector<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(detail::line_prefix(line_no) + "malformed JSON (" + e.what() + ")");
    }
    Episode ep = episode_from_json(j, line_no);
    validate_episode(ep);
    if (std::find(seen.begin(), seen.end(), ep.id()) != seen.end()) {
      throw DataError("episode " + ep.id() + ": duplicate episode_id");
    }
    seen.push_back(ep.id());
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

inline std::vector<Episode> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const std::vector<Episode>& episodes) {
  for (const auto& ep : episodes) out << to_json(ep).dump() << '\n';
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<Episode>& episodes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, episodes);
}

// ---------------------------------------------------------------------------
// Dataset filters

struct FilterConfig {
  double min_chapter_seconds = 30.0;
  double max_chapter_seconds = 30.0 * 60.0;
  /// Titles must have strictly fewer words than this.
  std::size_t max_title_words = 15;
};

struct FilterResult {
  bool passed = true;
  std::vector<std::string> violations;
  std::vector<std::string> notes;
};

inline FilterResult passes_filters(const Episode& ep, const FilterConfig& cfg = {}) {
  FilterResult r;
  if (!ep.reference_chapters || ep.reference_chapters->empty()) {
    r.passed = false;
    r.violations.push_back("episode has no reference chapters");
    return r;
  }
  const auto& chapters = *ep.reference_chapters;
  const auto& sents = ep.transcript.sentences;
  bool duration_unevaluable = false;
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    const auto& c = chapters[i];
    std::vector<std::string> problems;

    const std::size_t words = count_words(c.title);
    if (words >= cfg.max_title_words) {
      problems.push_back("title has " + std::to_string(words) + " words (limit < " +
                         std::to_string(cfg.max_title_words) + ")");
    }

    std::optional<double> begin;
    if (c.start_index < sents.size()) begin = sents[c.start_index].start_s;
    std::optional<double> end;
    if (i + 1 < chapters.size()) {
      if (chapters[i + 1].start_index < sents.size()) end = sents[chapters[i + 1].start_index].start_s;
    } else if (!sents.empty()) {
      end = sents.back().end_s;
    }
    if (begin && end) {
      const double duration = *end - *begin;
      if (duration < cfg.min_chapter_seconds || duration > cfg.max_chapter_seconds) {
        std::ostringstream os;
        os << "duration " << duration << " s outside [" << cfg.min_chapter_seconds << ", "
           << cfg.max_chapter_seconds << "]";
        problems.push_back(os.str());
      }
    } else {
      duration_unevaluable = true;
    }

    if (!problems.empty()) {
      r.passed = false;
      std::string msg = "chapter " + std::to_string(i) + ": ";
      for (std::size_t p = 0; p < problems.size(); ++p) msg += (p ? "; " : "") + problems[p];
      r.violations.push_back(std::move(msg));
    }
  }
  if (duration_unevaluable) r.notes.push_back("duration not evaluable: missing timestamps");
  return r;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

struct CorpusStats {
  std::size_t n_episodes = 0;
  MeanStd chapters_per_episode;
  MeanStd segment_sentences;  // pooled over all chapters of the corpus
  MeanStd title_words;        // pooled over all titles of the corpus
  MeanStd document_words;
};

inline CorpusStats corpus_stats(const std::vector<Episode>& corpus) {
  if (corpus.empty()) throw DataError("corpus_stats: empty corpus");
  std::vector<double> chapters, segments, titles, words;
  for (const auto& ep : corpus) {
    if (!ep.reference_chapters) {
      throw DataError("corpus_stats: episode " + ep.id() + " has no reference chapters");
    }
    const auto& cs = *ep.reference_chapters;
    chapters.push_back(static_cast<double>(cs.size()));
    for (auto [b, e] : chapter_spans(cs, ep.transcript.size())) {
      segments.push_back(static_cast<double>(e - b));
    }
    for (const auto& c : cs) titles.push_back(static_cast<double>(count_words(c.title)));
    words.push_back(static_cast<double>(ep.transcript.total_words()));
  }
  CorpusStats s;
  s.n_episodes = corpus.size();
  s.chapters_per_episode = mean_std(chapters);
  s.segment_sentences = mean_std(segments);
  s.title_words = mean_std(titles);
  s.document_words = mean_std(words);
  return s;
}

/// Seeded shuffle-and-cut split. The permutation depends only on `seed` and
/// the corpus size.
inline std::pair<std::vector<Episode>, std::vector<Episode>> split_corpus(
    std::vector<Episode> corpus, double first_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = corpus.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(corpus[i - 1], corpus[j]);
  }
  const double f = std::clamp(first_fraction, 0.0, 1.0);
  const auto cut = static_cast<std::ptrdiff_t>(std::llround(f * static_cast<double>(corpus.size())));
  std::vector<Episode> first(std::make_move_iterator(corpus.begin()),
                             std::make_move_iterator(corpus.begin() + cut));
  std::vector<Episode> second(std::make_move_iterator(corpus.begin() + cut),
                              std::make_move_iterator(corpus.end()));
  return {std::move(first), std::move(second)};
}

}  // namespace podtile
