// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "podtile/corpus.hpp"
#include "podtile/error.hpp"
#include "podtile/promptfmt.hpp"
#include "podtile/text.hpp"

namespace podtile {

struct GeneratorRequest {
  std::string episode_id;
  std::string input_text;
  IndexRange valid_range;
};

/// Maps a rendered chunk to an output string in the chapter grammar. Callers
/// must not assume the output is well formed. Implementations must tolerate
/// concurrent calls.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const GeneratorRequest& request) = 0;
};

/// Replays reference chapters. Exact by construction; used to test the
/// pipeline and the metrics end to end.
class OracleGenerator final : public Generator {
 public:
  explicit OracleGenerator(const std::vector<Episode>& corpus) {
    for (const auto& ep : corpus) {
      if (ep.reference_chapters) references_[ep.id()] = *ep.reference_chapters;
    }
  }

  std::string generate(const GeneratorRequest& request) override {
    auto it = references_.find(request.episode_id);
    std::vector<Chapter> in_range;
    if (it != references_.end()) {
      for (const auto& c : it->second) {
        if (request.valid_range.contains(c.start_index)) in_range.push_back(c);
      }
    }
    return render_target(in_range);
  }

 private:
  std::unordered_map<std::string, ChapterSet> references_;
};

// ---------------------------------------------------------------------------
// Lexical cohesion baseline

struct CohesionParams {
  std::size_t block_size = 10;
  std::size_t smoothing_width = 2;
  double boundary_depth_cutoff = 0.5;  // in standard deviations of the depth scores
  std::size_t min_segment_sentences = 5;

  void validate() const {
    if (block_size == 0 || smoothing_width == 0 || min_segment_sentences == 0) {
      throw Error("CohesionParams: sizes must be positive");
    }
    if (!(boundary_depth_cutoff > 0.0 && boundary_depth_cutoff <= 3.0)) {
      throw Error("CohesionParams: boundary_depth_cutoff must be in (0, 3]");
    }
  }
};

inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
      "but", "by", "can", "could", "did", "do", "does", "doing", "don", "down", "during", "each",
      "even", "few", "for", "from", "further", "get", "got", "had", "has", "have", "having", "he",
      "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "know", "like", "ll", "me", "more", "most", "my",
      "myself", "no", "nor", "not", "now", "of", "off", "oh", "ok", "okay", "on", "once", "only",
      "or", "other", "our", "ours", "ourselves", "out", "over", "own", "re", "really", "right",
      "s", "said", "same", "say", "she", "should", "so", "some", "such", "t", "than", "that",
      "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "thing",
      "things", "think", "this", "those", "through", "to", "too", "um", "uh", "under", "until",
      "up", "ve", "very", "was", "we", "well", "were", "what", "when", "where", "which", "while",
      "who", "whom", "why", "will", "with", "would", "yeah", "you", "your", "yours", "yourself",
      "yourselves"};
  return words;
}

inline bool is_content_term(const std::string& term) {
  return term.size() > 1 && !stopwords().contains(term);
}

namespace detail {

using TermCounts = std::map<std::string, double>;

inline double cosine(const TermCounts& a, const TermCounts& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, v] : a) {
    na += v * v;
    if (auto it = b.find(t); it != b.end()) dot += v * it->second;
  }
  for (const auto& [t, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

/// Gap-similarity curve: entry g-1 holds the cosine between the term vectors
/// of the block ending before sentence g and the block starting at g.
inline std::vector<double> gap_similarities(std::span<const Sentence> sentences,
                                            std::size_t block_size) {
  const std::size_t n = sentences.size();
  std::vector<detail::TermCounts> tf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& t : analyze(sentences[i].text)) {
      if (is_content_term(t)) tf[i][t] += 1.0;
    }
  }
  std::vector<double> sims;
  for (std::size_t g = 1; g < n; ++g) {
    detail::TermCounts left, right;
    for (std::size_t i = g > block_size ? g - block_size : 0; i < g; ++i) {
      for (const auto& [t, v] : tf[i]) left[t] += v;
    }
    for (std::size_t i = g; i < std::min(n, g + block_size); ++i) {
      for (const auto& [t, v] : tf[i]) right[t] += v;
    }
    sims.push_back(detail::cosine(left, right));
  }
  return sims;
}

/// Centered moving average with half-width `width`, clipped at the edges.
inline std::vector<double> smooth(std::span<const double> values, std::size_t width) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i > width ? i - width : 0;
    const std::size_t hi = std::min(values.size() - 1, i + width);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Valley depth: climb to the nearest peak on each side and sum the rises.
/// Positions that are not local minima get depth 0.
inline std::vector<double> depth_scores(std::span<const double> sims) {
  const std::size_t n = sims.size();
  std::vector<double> depth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || sims[i] <= sims[i - 1];
    const bool right_ok = i + 1 == n || sims[i] <= sims[i + 1];
    if (!left_ok || !right_ok) continue;
    double left_peak = sims[i];
    for (std::size_t j = i; j > 0 && sims[j - 1] >= left_peak; --j) left_peak = sims[j - 1];
    double right_peak = sims[i];
    for (std::size_t j = i + 1; j < n && sims[j] >= right_peak; ++j) right_peak = sims[j];
    depth[i] = (left_peak - sims[i]) + (right_peak - sims[i]);
  }
  return depth;
}

/// TextTiling-style boundaries, returned as positions relative to
/// `sentences` (a boundary g sits before sentence g).
inline std::vector<std::size_t> cohesion_boundaries(std::span<const Sentence> sentences,
                                                    const CohesionParams& params = {}) {
  params.validate();
  if (sentences.size() < 2 * params.block_size) return {};

  const auto sims = smooth(gap_similarities(sentences, params.block_size), params.smoothing_width);
  const auto depth = depth_scores(sims);
  // The transcript ends act as fixed boundaries: truncated edge blocks make
  // spurious valleys there, and no segment may be shorter than
  // min_segment_sentences anyway.
  const std::size_t n = sentences.size();
  std::vector<std::size_t> valleys;  // indices into depth, gap = index + 1
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const std::size_t gap = i + 1;
    if (gap < params.min_segment_sentences || n - gap < params.min_segment_sentences) continue;
    if (depth[i] > 0.0) valleys.push_back(i);
  }
  if (valleys.empty()) return {};
  // Threshold from the valleys only; the zero depths of non-minima would let
  // every shallow dip through.
  std::vector<double> valley_depths;
  for (std::size_t i : valleys) valley_depths.push_back(depth[i]);
  const MeanStd stats = mean_std(valley_depths);
  const double threshold = stats.mean + params.boundary_depth_cutoff * stats.std;

  std::vector<std::size_t> candidates;
  for (std::size_t i : valleys) {
    if (depth[i] >= threshold) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });

  std::vector<std::size_t> accepted;
  for (std::size_t c : candidates) {
    const std::size_t gap = c + 1;
    const bool far_enough = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t g) {
      const std::size_t d = g > gap ? g - gap : gap - g;
      return d >= params.min_segment_sentences;
    });
    if (far_enough) accepted.push_back(gap);
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

/// Inverse sentence frequency over a reference collection of sentences,
/// smoothed so that ubiquitous terms keep a small positive weight.
class TermWeights {
 public:
  explicit TermWeights(std::span<const Sentence> collection) : n_docs_(collection.size()) {
    for (const auto& s : collection) {
      auto terms = analyze(s.text);
      std::sort(terms.begin(), terms.end());
      terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
      for (auto& t : terms) ++df_[t];
    }
  }

  double idf(const std::string& term) const {
    auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log(1.0 + static_cast<double>(n_docs_) / (df + 1.0));
  }

 private:
  std::size_t n_docs_;
  std::unordered_map<std::string, std::size_t> df_;
};

/// Top terms by tf-idf, emitted in order of first appearance with the casing
/// of that appearance. "Chapter" when the segment has no content terms.
inline std::string keyword_title(std::span<const Sentence> segment, const TermWeights& weights,
                                 std::size_t max_words = 6) {
  struct Term {
    std::string surface;
    std::size_t first_pos;
    double tf = 0.0;
  };
  std::unordered_map<std::string, Term> terms;
  std::size_t pos = 0;
  for (const auto& s : segment) {
    std::string_view text = s.text;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && !is_token_char(text[i])) ++i;
      const std::size_t start = i;
      while (i < text.size() && is_token_char(text[i])) ++i;
      if (i == start) continue;
      const std::string_view surface = text.substr(start, i - start);
      std::string key = to_lower(surface);
      if (!is_content_term(key)) continue;
      auto [it, inserted] = terms.try_emplace(key, Term{std::string(surface), pos, 0.0});
      it->second.tf += 1.0;
      ++pos;
    }
  }
  if (terms.empty() || max_words == 0) return "Chapter";

  struct Scored {
    double score;
    const Term* term;
  };
  std::vector<Scored> scored;
  for (const auto& [key, t] : terms) scored.push_back({t.tf * weights.idf(key), &t});
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term->first_pos < b.term->first_pos;
  });
  if (scored.size() > max_words) scored.resize(max_words);
  std::sort(scored.begin(), scored.end(),
            [](const Scored& a, const Scored& b) { return a.term->first_pos < b.term->first_pos; });
  std::string title;
  for (const auto& s : scored) {
    if (!title.empty()) title.push_back(' ');
    title += s.term->surface;
  }
  return title;
}

inline std::string keyword_title(std::span<const Sentence> segment, std::size_t max_words = 6) {
  return keyword_title(segment, TermWeights(segment), max_words);
}

/// Unsupervised baseline: cohesion valleys inside the chunk become chapter
/// starts, titled by keyword extraction against the whole episode. The first
/// sentence of the episode always opens a chapter.
class CohesionGenerator final : public Generator {
 public:
  CohesionGenerator(const std::vector<Episode>& corpus, CohesionParams params = {},
                    std::size_t title_words = 6)
      : params_(params), title_words_(title_words) {
    params_.validate();
    for (const auto& ep : corpus) episodes_.emplace(ep.id(), &ep);
  }

  std::string generate(const GeneratorRequest& request) override {
    auto it = episodes_.find(request.episode_id);
    if (it == episodes_.end()) return std::string(kNoBoundariesSentinel);
    const auto& sents = it->second->transcript.sentences;
    const IndexRange r = request.valid_range;
    if (r.first > r.last || r.last >= sents.size()) return std::string(kNoBoundariesSentinel);

    const std::span<const Sentence> chunk(sents.data() + r.first, r.last - r.first + 1);
    std::vector<std::size_t> starts;
    if (r.first == 0) starts.push_back(0);
    for (std::size_t g : cohesion_boundaries(chunk, params_)) starts.push_back(g);

    const TermWeights weights(sents);
    std::vector<Chapter> chapters;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : chunk.size();
      chapters.push_back({r.first + starts[i],
                          keyword_title(chunk.subspan(starts[i], end - starts[i]), weights,
                                        title_words_)});
    }
    return render_target(chapters);
  }

 private:
  CohesionParams params_;
  std::size_t title_words_;
  std::unordered_map<std::string, const Episode*> episodes_;
};

}  // namespace podtile
