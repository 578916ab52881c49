// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "podtile/corpus.hpp"
#include "podtile/error.hpp"

namespace podtile {

/// Word budget of one generator call. The document body gets whatever the
/// context block does not reserve.
struct ChunkBudget {
  std::size_t total_words = 8000;
  std::size_t context_words = 1000;

  std::size_t body_words() const noexcept { return total_words - context_words; }

  void validate() const {
    if (total_words == 0) throw Error("ChunkBudget: total_words must be positive");
    if (context_words >= total_words) {
      throw Error("ChunkBudget: context_words must be smaller than total_words");
    }
  }
};

/// Inclusive sentence range [first_index, last_index].
struct Chunk {
  std::size_t first_index = 0;
  std::size_t last_index = 0;
  std::size_t body_word_count = 0;

  std::size_t size() const noexcept { return last_index - first_index + 1; }
  bool contains(std::size_t i) const noexcept { return i >= first_index && i <= last_index; }
  bool operator==(const Chunk&) const = default;
};

/// Greedy left-to-right packing on sentence boundaries. A sentence is never
/// split; one that alone exceeds the body budget becomes its own chunk.
inline std::vector<Chunk> chunk_transcript(const Transcript& transcript, const ChunkBudget& budget) {
  budget.validate();
  const std::size_t limit = budget.body_words();
  std::vector<Chunk> chunks;
  const auto& sents = transcript.sentences;
  std::size_t i = 0;
  while (i < sents.size()) {
    Chunk c{i, i, sents[i].word_count};
    ++i;
    while (i < sents.size() && c.body_word_count + sents[i].word_count <= limit) {
      c.body_word_count += sents[i].word_count;
      c.last_index = i;
      ++i;
    }
    chunks.push_back(c);
  }
  return chunks;
}

/// "<global_index>: <text>" per sentence, newline separated. Indices are
/// episode-global so chapter starts stay unambiguous across chunks.
inline std::string render_indexed_sentences(const Transcript& transcript, const Chunk& chunk) {
  if (chunk.last_index >= transcript.size() || chunk.first_index > chunk.last_index) {
    throw Error("render_indexed_sentences: chunk outside transcript");
  }
  std::string out;
  for (std::size_t i = chunk.first_index; i <= chunk.last_index; ++i) {
    if (i != chunk.first_index) out.push_back('\n');
    out += std::to_string(i);
    out += ": ";
    out += transcript.sentences[i].text;
  }
  return out;
}

}  // namespace podtile
