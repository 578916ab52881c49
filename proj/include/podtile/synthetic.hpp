// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Seeded synthetic corpora. The podcast profile targets the published
/// dataset shape: ~11.8k transcript words, ~11.3 chapters of ~81 sentences,
/// ~6.2-word titles, ~102-word descriptions, ~1.75 chunks per episode under
/// the default 7000-word body budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "podtile/corpus.hpp"

namespace podtile {

/// Small deterministic RNG facade; only mt19937_64 raw output is used so
/// streams are identical across standard library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [lo, hi].
  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1));
  }
  /// Uniform real in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Pronounceable pseudo-word for an integer id; distinct ids give distinct
/// words and none of them is a stopword.
inline std::string synthetic_word(std::size_t id) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                            "s", "t", "v", "z", "br", "dr", "gl", "kr", "pl", "st"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};
  constexpr std::size_t kSyllables = std::size(kOnsets) * std::size(kVowels);  // 160
  std::string w;
  std::size_t v = id;
  do {
    const std::size_t s = v % kSyllables;
    w += kOnsets[s / std::size(kVowels)];
    w += kVowels[s % std::size(kVowels)];
    v /= kSyllables;
  } while (v > 0);
  w += "x";  // terminal consonant keeps every word at >= 3 characters
  return w;
}

struct SyntheticProfile {
  std::size_t n_episodes = 100;
  std::uint64_t seed = 2024;
  /// Every `short_period`-th episode fits in one chunk; the rest need two.
  std::size_t short_period = 4;
  std::size_t short_min_words = 6500, short_max_words = 6990;
  std::size_t long_min_words = 13200, long_max_words = 13960;
  double words_per_chapter = 1050.0;
  std::size_t min_sentence_words = 6, max_sentence_words = 20;
  std::size_t min_title_words = 2, max_title_words = 10;
  double extra_title_word_chance = 0.2;
  std::size_t description_words = 102;
  std::size_t episode_title_words = 11;
  std::size_t min_segment_sentences = 12;
  double words_per_second = 2.5;
  double max_chapter_seconds = 1700.0;
  std::size_t topic_vocabulary = 60000;
  std::size_t topic_size = 250;
  std::size_t common_vocabulary = 1500;
};

namespace detail {

inline std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

inline std::vector<std::size_t> segment_lengths(SeededRng& rng, std::size_t n_sentences, std::size_t n_segments,
                                                std::size_t min_len) {
  std::vector<double> w(n_segments);
  double total = 0.0;
  for (auto& x : w) {
    x = 0.3 - std::log(1.0 - rng.unit());  // shifted exponential
    total += x;
  }
  const std::size_t free = n_sentences - min_len * n_segments;
  std::vector<std::size_t> len(n_segments);
  std::size_t used = 0;
  for (std::size_t i = 0; i < n_segments; ++i) {
    len[i] = min_len + static_cast<std::size_t>(std::floor(static_cast<double>(free) * w[i] / total));
    used += len[i];
  }
  for (std::size_t i = 0; used < n_sentences; i = (i + 1) % n_segments, ++used) ++len[i];
  return len;
}

}  // namespace detail

/// Corpus with the podcast dataset profile. Every episode is valid and passes
/// the default dataset filters.
inline std::vector<Episode> synthetic_podcast_corpus(const SyntheticProfile& profile = {}) {
  SeededRng rng(profile.seed);
  std::vector<Episode> corpus;
  const std::vector<std::string> fillers = {"the", "and", "so", "we", "you", "that", "is", "it", "of", "to", "in", "was"};

  for (std::size_t e = 0; e < profile.n_episodes; ++e) {
    Episode ep;
    ep.metadata.episode_id = "ep" + std::to_string(100000 + e);
    ep.metadata.show_id = "show" + std::to_string(e % 17);

    const bool is_short = profile.short_period > 0 && e % profile.short_period == profile.short_period - 1;
    const std::size_t target = is_short ? rng.uniform(profile.short_min_words, profile.short_max_words)
                                        : rng.uniform(profile.long_min_words, profile.long_max_words);
    std::vector<std::size_t> sentence_words;
    std::size_t words = 0;
    while (true) {
      std::size_t w = rng.uniform(profile.min_sentence_words, profile.max_sentence_words);
      if (words + w > target) {
        if (target - words >= profile.min_sentence_words) sentence_words.push_back(target - words), words = target;
        break;
      }
      sentence_words.push_back(w);
      words += w;
    }
    const std::size_t n = sentence_words.size();

    const double expected = static_cast<double>(words) / profile.words_per_chapter;
    std::size_t n_chapters = static_cast<std::size_t>(std::max(1.0, std::round(expected + (rng.unit() * 3.0 - 1.5))));
    n_chapters = std::min(n_chapters, n / profile.min_segment_sentences);

    std::vector<std::size_t> lengths;
    for (int attempt = 0;; ++attempt) {
      lengths = detail::segment_lengths(rng, n, n_chapters, profile.min_segment_sentences);
      bool ok = true;
      std::size_t s = 0;
      for (auto len : lengths) {
        std::size_t seg_words = 0;
        for (std::size_t i = s; i < s + len; ++i) seg_words += sentence_words[i];
        s += len;
        if (static_cast<double>(seg_words) / profile.words_per_second > profile.max_chapter_seconds) ok = false;
      }
      if (ok || attempt > 50) break;
    }

    // topics: each chapter draws a private slice of the topic vocabulary
    std::vector<std::vector<std::string>> topics(n_chapters);
    for (auto& t : topics) {
      const std::size_t base = rng.uniform(0, profile.topic_vocabulary - profile.topic_size);
      for (std::size_t i = 0; i < profile.topic_size; ++i) t.push_back(synthetic_word(profile.common_vocabulary + base + i));
    }
    auto common_word = [&] {
      // skewed toward low ids
      const double u = rng.unit();
      return synthetic_word(static_cast<std::size_t>(u * u * static_cast<double>(profile.common_vocabulary)));
    };

    ChapterSet chapters;
    double clock = 0.0;
    std::size_t s = 0;
    for (std::size_t c = 0; c < n_chapters; ++c) {
      const auto& topic = topics[c];
      std::string title;
      std::size_t tw = rng.uniform(profile.min_title_words, profile.max_title_words);
      if (rng.chance(profile.extra_title_word_chance)) ++tw;
      for (std::size_t i = 0; i < tw; ++i) {
        std::string w = topic[rng.uniform(0, 24)];
        title += (i ? " " : "") + (i == 0 ? detail::capitalize(w) : w);
      }
      chapters.push_back({s, title});
      for (std::size_t i = s; i < s + lengths[c]; ++i) {
        std::string text;
        for (std::size_t k = 0; k < sentence_words[i]; ++k) {
          const double u = rng.unit();
          std::string w = u < 0.55 ? topic[rng.uniform(0, topic.size() - 1)]
                          : u < 0.85 ? common_word()
                                     : fillers[rng.uniform(0, fillers.size() - 1)];
          if (k == 0) w = detail::capitalize(w);
          text += (k ? " " : "") + w;
        }
        text += ".";
        const double duration = static_cast<double>(sentence_words[i]) / profile.words_per_second;
        ep.transcript.sentences.push_back(Sentence::make(std::move(text), clock, clock + duration));
        clock += duration;
      }
      s += lengths[c];
    }
    ep.reference_chapters = std::move(chapters);

    std::string title;
    for (std::size_t i = 0; i < profile.episode_title_words; ++i) {
      title += (i ? " " : "") + (i == 0 ? detail::capitalize(common_word()) : common_word());
    }
    ep.metadata.title = title;
    std::string description;
    for (std::size_t i = 0; i < profile.description_words; ++i) {
      const auto& topic = topics[rng.uniform(0, n_chapters - 1)];
      std::string w = rng.chance(0.5) ? topic[rng.uniform(0, topic.size() - 1)] : common_word();
      description += (i ? " " : "") + w;
    }
    ep.metadata.description = description + ".";
    corpus.push_back(std::move(ep));
  }
  return corpus;
}

/// Episodes made of equal-length segments, for k estimation checks.
inline std::vector<Episode> uniform_segment_corpus(std::size_t n_episodes, std::size_t segments_per_episode,
                                                   std::size_t segment_sentences, std::uint64_t seed = 1) {
  SeededRng rng(seed);
  std::vector<Episode> corpus;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    Episode ep;
    ep.metadata.episode_id = "u" + std::to_string(e);
    ep.metadata.title = "Episode " + std::to_string(e);
    ChapterSet chapters;
    for (std::size_t c = 0; c < segments_per_episode; ++c) {
      chapters.push_back({c * segment_sentences, "Part " + synthetic_word(c)});
      for (std::size_t i = 0; i < segment_sentences; ++i) {
        ep.transcript.sentences.push_back(
            Sentence::make(synthetic_word(rng.uniform(0, 5000)) + " " + synthetic_word(rng.uniform(0, 5000)) + "."));
      }
    }
    ep.reference_chapters = std::move(chapters);
    corpus.push_back(std::move(ep));
  }
  return corpus;
}

}  // namespace podtile
