// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "podtile/chunking.hpp"
#include "podtile/corpus.hpp"
#include "podtile/generate.hpp"
#include "podtile/promptfmt.hpp"
#include "podtile/text.hpp"

namespace podtile {

struct PipelineConfig {
  ChunkBudget budget;
  bool use_static_context = true;
  bool use_dynamic_context = true;
  std::optional<std::filesystem::path> blocklist_path;
};

struct ChapterizeResult {
  ChapterSet chapters;
  std::vector<std::string> warnings;
};

/// Merges per-chunk predictions: sorted by start index, the earliest chunk
/// wins on duplicate indices.
inline ChapterSet stitch(std::span<const ChunkPrediction> predictions) {
  ChapterSet merged;
  for (const auto& p : predictions) merged.insert(merged.end(), p.entries.begin(), p.entries.end());
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Chapter& a, const Chapter& b) { return a.start_index < b.start_index; });
  merged.erase(std::unique(merged.begin(), merged.end(),
                           [](const Chapter& a, const Chapter& b) { return a.start_index == b.start_index; }),
               merged.end());
  return merged;
}

struct TitleRemoval {
  std::size_t chapter = 0;  // position in the chapter set
  std::string original_title;
  std::string matched_term;
};

struct SanitizeResult {
  ChapterSet chapters;
  std::vector<TitleRemoval> removals;
};

/// Titles containing a blocklisted term (case-insensitive, whole words) are
/// replaced by "Chapter <ordinal>". Boundaries are kept.
inline SanitizeResult sanitize_titles(ChapterSet chapters, std::span<const std::string> blocklist) {
  SanitizeResult r;
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    for (const auto& term : blocklist) {
      if (contains_word(chapters[i].title, term)) {
        r.removals.push_back({i, chapters[i].title, term});
        chapters[i].title = "Chapter " + std::to_string(i + 1);
        break;
      }
    }
  }
  r.chapters = std::move(chapters);
  return r;
}

/// One lowercase term per line; blank lines and lines starting with '#' are skipped.
inline std::vector<std::string> load_blocklist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open blocklist " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = normalize_whitespace(line);
    if (t.empty() || t.front() == '#') continue;
    terms.push_back(to_lower(t));
  }
  return terms;
}

/// Chunk, render with context, generate, parse and stitch one episode.
inline ChapterizeResult chapterize_episode(const Episode& episode, Generator& generator,
                                           const PipelineConfig& config,
                                           std::span<const std::string> blocklist = {}) {
  if (episode.transcript.empty()) throw DataError("episode " + episode.id() + ": empty transcript");
  ChapterizeResult result;
  StaticContext static_ctx;
  if (config.use_static_context) {
    static_ctx.title = episode.metadata.title;
    static_ctx.description = episode.metadata.description;
  }
  DynamicContext dynamic_ctx;
  std::vector<ChunkPrediction> predictions;

  const auto chunks = chunk_transcript(episode.transcript, config.budget);
  for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
    const Chunk& chunk = chunks[ci];
    const IndexRange range{chunk.first_index, chunk.last_index};
    GeneratorRequest request{
        episode.id(),
        render_input(render_indexed_sentences(episode.transcript, chunk), static_ctx,
                     config.use_dynamic_context ? dynamic_ctx : DynamicContext{}, config.budget),
        range};
    const std::string output = generator.generate(request);
    ParseResult parsed = parse_output(output, range);
    for (auto& w : parsed.warnings) result.warnings.push_back("chunk " + std::to_string(ci) + ": " + w);
    for (const auto& e : parsed.prediction.entries) dynamic_ctx.previous_titles.push_back(e.title);
    predictions.push_back(std::move(parsed.prediction));
  }

  result.chapters = stitch(predictions);
  if (!blocklist.empty()) {
    auto sanitized = sanitize_titles(std::move(result.chapters), blocklist);
    for (const auto& r : sanitized.removals) {
      result.warnings.push_back("chapter " + std::to_string(r.chapter) + ": title removed by blocklist term \"" +
                                r.matched_term + "\"");
    }
    result.chapters = std::move(sanitized.chapters);
  }
  if (result.chapters.empty()) {
    std::string title = normalize_whitespace(episode.metadata.title);
    if (title.empty()) title = "Chapter 1";
    result.chapters.push_back({0, std::move(title)});
    result.warnings.push_back("no chapters predicted; emitted a single fallback chapter");
  }
  return result;
}

struct EpisodeOutcome {
  std::optional<ChapterizeResult> result;
  std::string error;  // set when result is empty
};

/// Episode-level worker pool. Chunks within an episode stay sequential; the
/// output order matches the input order.
inline std::vector<EpisodeOutcome> chapterize_corpus(const std::vector<Episode>& corpus,
                                                     Generator& generator, const PipelineConfig& config,
                                                     std::span<const std::string> blocklist = {},
                                                     std::size_t workers = 1) {
  std::vector<EpisodeOutcome> outcomes(corpus.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      try {
        outcomes[i].result = chapterize_episode(corpus[i], generator, config, blocklist);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(corpus.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  return outcomes;
}

/// One line of the predictions JSONL file.
inline nlohmann::json prediction_to_json(const Episode& episode, const ChapterizeResult& result) {
  nlohmann::json chapters = nlohmann::json::array();
  for (const auto& c : result.chapters) {
    nlohmann::json jc{{"start_index", c.start_index}, {"title", c.title}};
    if (c.start_index < episode.transcript.size()) {
      if (const auto& t = episode.transcript.sentences[c.start_index].start_s) jc["start_s"] = *t;
    }
    chapters.push_back(std::move(jc));
  }
  return {{"episode_id", episode.id()}, {"chapters", std::move(chapters)}, {"warnings", result.warnings}};
}

/// Reads a predictions JSONL file (one prediction_to_json line per episode)
/// into episode id -> chapters. Extra keys such as "warnings" and "run" are
/// ignored.
inline std::map<std::string, ChapterSet> read_predictions(std::istream& in) {
  std::map<std::string, ChapterSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "predictions line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    }
    if (!j.is_object() || !j.contains("episode_id") || !j["episode_id"].is_string()) {
      throw DataError(where + "missing string field episode_id");
    }
    const auto id = j["episode_id"].get<std::string>();
    auto it = j.find("chapters");
    if (it == j.end() || !it->is_array()) throw DataError(where + "missing array field chapters");
    ChapterSet chapters;
    for (const auto& jc : *it) {
      if (!jc.is_object() || !jc.contains("start_index") || !jc["start_index"].is_number_unsigned() ||
          !jc.contains("title") || !jc["title"].is_string()) {
        throw DataError(where + "chapter entries need a non-negative start_index and a string title");
      }
      chapters.push_back({jc["start_index"].get<std::size_t>(), jc["title"].get<std::string>()});
    }
    if (!out.emplace(id, std::move(chapters)).second) throw DataError(where + "duplicate episode_id " + id);
  }
  return out;
}

inline std::map<std::string, ChapterSet> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions file " + path.string());
  return read_predictions(in);
}

}  // namespace podtile
