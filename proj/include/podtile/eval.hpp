// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Intrinsic chapterization metrics: WindowDiff on boundary sets, overlap
/// alignment of chapters, aligned ROUGE-L, embedding precision/recall/F1 and
/// title-length coefficient of variation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "podtile/corpus.hpp"
#include "podtile/embedder.hpp"
#include "podtile/error.hpp"
#include "podtile/stats.hpp"
#include "podtile/text.hpp"

namespace podtile {

/// Boundary gaps g in [1, n_sentences - 1]; gap g sits before sentence g.
struct BoundarySeq {
  std::size_t n_sentences = 0;
  std::vector<std::size_t> gaps;  // sorted, unique

  static BoundarySeq from_chapters(const ChapterSet& chapters, std::size_t n_sentences) {
    BoundarySeq b;
    b.n_sentences = n_sentences;
    for (const auto& c : chapters) {
      if (c.start_index > 0 && c.start_index < n_sentences) b.gaps.push_back(c.start_index);
    }
    std::sort(b.gaps.begin(), b.gaps.end());
    b.gaps.erase(std::unique(b.gaps.begin(), b.gaps.end()), b.gaps.end());
    return b;
  }

  static BoundarySeq from_gaps(std::size_t n_sentences, std::vector<std::size_t> gaps) {
    std::sort(gaps.begin(), gaps.end());
    gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
    for (auto g : gaps) {
      if (g == 0 || g >= n_sentences) throw Error("BoundarySeq: gap " + std::to_string(g) + " out of range");
    }
    return {n_sentences, std::move(gaps)};
  }
};

/// WindowDiff: share of the N-k windows (sentences i..i+k) whose boundary
/// counts differ between reference and hypothesis.
inline double window_diff(const BoundarySeq& reference, const BoundarySeq& hypothesis, std::size_t k) {
  const std::size_t n = reference.n_sentences;
  if (hypothesis.n_sentences != n) throw Error("window_diff: sequences differ in length");
  if (k < 1 || k >= n) {
    throw Error("window_diff: k=" + std::to_string(k) + " must be in [1, " + std::to_string(n) + ")");
  }
  // prefix[g] = number of boundaries at gaps <= g
  auto prefix = [n](const BoundarySeq& b) {
    std::vector<std::size_t> p(n, 0);
    for (auto g : b.gaps) ++p[g];
    for (std::size_t g = 1; g < n; ++g) p[g] += p[g - 1];
    return p;
  };
  const auto pr = prefix(reference);
  const auto ph = prefix(hypothesis);
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i + k < n; ++i) {
    if (pr[i + k] - pr[i] != ph[i + k] - ph[i]) ++disagreements;
  }
  return static_cast<double>(disagreements) / static_cast<double>(n - k);
}

/// Half the mean reference segment length (sentences), rounded, at least 2.
inline std::size_t estimate_k(const std::vector<Episode>& corpus) {
  if (corpus.empty()) throw DataError("estimate_k: empty corpus");
  double total = 0.0;
  std::size_t segments = 0;
  for (const auto& ep : corpus) {
    if (!ep.reference_chapters) throw DataError("estimate_k: episode " + ep.id() + " has no reference chapters");
    for (auto [b, e] : chapter_spans(*ep.reference_chapters, ep.transcript.size())) {
      total += static_cast<double>(e - b);
      ++segments;
    }
  }
  if (segments == 0) throw DataError("estimate_k: corpus has no reference segments");
  const auto k = static_cast<std::size_t>(std::llround(0.5 * total / static_cast<double>(segments)));
  return std::max<std::size_t>(k, 2);
}

struct MatchPair {
  std::size_t ref_index = 0;
  std::size_t pred_index = 0;
  std::string ref_title;
  std::string pred_title;

  bool operator==(const MatchPair&) const = default;
};

struct Matches {
  std::vector<MatchPair> pred_matches;  // one per predicted chapter
  std::vector<MatchPair> ref_matches;   // one per reference chapter

  /// Multiset union: a pair found from both sides appears twice.
  std::vector<MatchPair> all_matches() const {
    std::vector<MatchPair> all = pred_matches;
    all.insert(all.end(), ref_matches.begin(), ref_matches.end());
    return all;
  }
};

/// Pairs every chapter of each set with the chapter of the other set it
/// overlaps most (in sentences); ties go to the earlier chapter.
inline Matches align_chapters(const ChapterSet& reference, const ChapterSet& prediction,
                              std::size_t n_sentences) {
  const auto ref_spans = chapter_spans(reference, n_sentences);
  const auto pred_spans = chapter_spans(prediction, n_sentences);
  auto overlap = [](std::pair<std::size_t, std::size_t> a, std::pair<std::size_t, std::size_t> b) {
    const std::size_t lo = std::max(a.first, b.first);
    const std::size_t hi = std::min(a.second, b.second);
    return hi > lo ? hi - lo : std::size_t{0};
  };
  auto best = [&](std::pair<std::size_t, std::size_t> span,
                  const std::vector<std::pair<std::size_t, std::size_t>>& others) {
    std::size_t best_index = 0, best_overlap = 0;
    for (std::size_t j = 0; j < others.size(); ++j) {
      const std::size_t o = overlap(span, others[j]);
      if (o > best_overlap) {
        best_overlap = o;
        best_index = j;
      }
    }
    return best_index;
  };

  Matches m;
  if (reference.empty() || prediction.empty()) return m;
  for (std::size_t p = 0; p < prediction.size(); ++p) {
    const std::size_t r = best(pred_spans[p], ref_spans);
    m.pred_matches.push_back({r, p, reference[r].title, prediction[p].title});
  }
  for (std::size_t r = 0; r < reference.size(); ++r) {
    const std::size_t p = best(ref_spans[r], pred_spans);
    m.ref_matches.push_back({r, p, reference[r].title, prediction[p].title});
  }
  return m;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double f1_from_counts(double overlap, double reference_len, double candidate_len) {
  if (overlap == 0.0 || reference_len == 0.0 || candidate_len == 0.0) return 0.0;
  const double p = overlap / candidate_len;
  const double r = overlap / reference_len;
  return 2.0 * p * r / (p + r);
}

/// ROUGE-L F1 over lowercased whitespace tokens; `reference` is t, `candidate` is t'.
inline double rouge_l_f1(std::string_view reference, std::string_view candidate) {
  const auto a = lower_tokens(reference);
  const auto b = lower_tokens(candidate);
  return f1_from_counts(static_cast<double>(lcs_length(a, b)), static_cast<double>(a.size()),
                        static_cast<double>(b.size()));
}

/// Clipped unigram-overlap F1 between token sequences.
inline double rouge1_f1_tokens(const std::vector<std::string>& reference,
                               const std::vector<std::string>& candidate) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& t : reference) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : candidate) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return f1_from_counts(static_cast<double>(overlap), static_cast<double>(reference.size()),
                        static_cast<double>(candidate.size()));
}

inline double rouge1_f1(std::string_view a, std::string_view b) {
  return rouge1_f1_tokens(lower_tokens(a), lower_tokens(b));
}

/// Mean ROUGE-L F1 over the multiset union of both alignment directions.
/// Empty when either chapter set is empty.
inline std::optional<double> aligned_rouge_l(const ChapterSet& reference, const ChapterSet& prediction,
                                             std::size_t n_sentences) {
  const auto all = align_chapters(reference, prediction, n_sentences).all_matches();
  if (all.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& m : all) sum += rouge_l_f1(m.ref_title, m.pred_title);
  return sum / static_cast<double>(all.size());
}

struct EmbeddingScores {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;  // geometric mean of precision and recall
};

inline EmbeddingScores embedding_prf(const ChapterSet& reference, const ChapterSet& prediction,
                                     const Embedder& embedder, std::size_t n_sentences) {
  const Matches m = align_chapters(reference, prediction, n_sentences);
  auto mean_cos = [&](const std::vector<MatchPair>& pairs) -> std::optional<double> {
    if (pairs.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& p : pairs) sum += unit_cosine(embedder.embed(p.ref_title), embedder.embed(p.pred_title));
    return sum / static_cast<double>(pairs.size());
  };
  EmbeddingScores s;
  s.precision = mean_cos(m.pred_matches);
  s.recall = mean_cos(m.ref_matches);
  if (s.precision && s.recall) s.f1 = std::sqrt(*s.precision * *s.recall);
  return s;
}

/// Population std of title word counts over their mean; 0 for one chapter.
inline double title_length_cv(const ChapterSet& chapters) {
  if (chapters.empty()) throw Error("title_length_cv: no chapters");
  std::vector<double> lengths;
  for (const auto& c : chapters) lengths.push_back(static_cast<double>(count_words(c.title)));
  const MeanStd s = mean_std(lengths);
  if (s.mean == 0.0) throw Error("title_length_cv: mean title length is zero");
  return s.std / s.mean;
}

inline double corpus_title_cv(const std::vector<ChapterSet>& episodes) {
  if (episodes.empty()) throw Error("corpus_title_cv: no episodes");
  double sum = 0.0;
  for (const auto& cs : episodes) sum += title_length_cv(cs);
  return sum / static_cast<double>(episodes.size());
}

// ---------------------------------------------------------------------------
// Reports

struct EpisodeEval {
  std::string episode_id;
  std::optional<double> windiff;
  std::optional<double> rouge_l_f1_aligned;
  EmbeddingScores embedding;
  std::optional<double> title_cv;
  std::size_t n_ref = 0;
  std::size_t n_pred = 0;
  std::size_t n_sentences = 0;
};

/// WindowDiff is missing when k >= n_sentences for this episode.
inline EpisodeEval evaluate_episode(const std::string& episode_id, const ChapterSet& reference,
                                    const ChapterSet& prediction, std::size_t n_sentences, std::size_t k,
                                    const Embedder& embedder) {
  EpisodeEval e;
  e.episode_id = episode_id;
  e.n_ref = reference.size();
  e.n_pred = prediction.size();
  e.n_sentences = n_sentences;
  if (k >= 1 && k < n_sentences) {
    e.windiff = window_diff(BoundarySeq::from_chapters(reference, n_sentences),
                            BoundarySeq::from_chapters(prediction, n_sentences), k);
  }
  e.rouge_l_f1_aligned = aligned_rouge_l(reference, prediction, n_sentences);
  e.embedding = embedding_prf(reference, prediction, embedder, n_sentences);
  if (!prediction.empty()) e.title_cv = title_length_cv(prediction);
  return e;
}

struct MetricSummary {
  MeanStd value;
  std::size_t missing = 0;
};

struct EvalReport {
  std::size_t k = 0;
  std::vector<EpisodeEval> episodes;
  std::map<std::string, MetricSummary> aggregates;
  std::vector<std::string> notes;
};

inline constexpr const char* kEvalMetricNames[] = {"windiff",  "rougeL_f1_aligned", "emb_precision",
                                                   "emb_recall", "emb_f1",           "title_cv"};

inline std::vector<std::optional<double>> metric_values(const EpisodeEval& e) {
  return {e.windiff, e.rouge_l_f1_aligned, e.embedding.precision, e.embedding.recall, e.embedding.f1,
          e.title_cv};
}

inline EvalReport summarize(std::size_t k, std::vector<EpisodeEval> episodes) {
  EvalReport r;
  r.k = k;
  constexpr std::size_t kMetrics = std::size(kEvalMetricNames);
  std::vector<std::vector<double>> columns(kMetrics);
  std::vector<std::size_t> missing(kMetrics, 0);
  for (const auto& e : episodes) {
    const auto values = metric_values(e);
    for (std::size_t m = 0; m < kMetrics; ++m) {
      if (values[m]) columns[m].push_back(*values[m]);
      else ++missing[m];
    }
  }
  for (std::size_t m = 0; m < kMetrics; ++m) {
    r.aggregates[kEvalMetricNames[m]] = {mean_std(columns[m]), missing[m]};
  }
  r.episodes = std::move(episodes);
  return r;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json episodes = nlohmann::json::array();
  for (const auto& e : r.episodes) {
    nlohmann::json j{{"episode_id", e.episode_id}, {"n_ref", e.n_ref}, {"n_pred", e.n_pred}};
    const auto values = metric_values(e);
    for (std::size_t m = 0; m < values.size(); ++m) j[kEvalMetricNames[m]] = optional_json(values[m]);
    episodes.push_back(std::move(j));
  }
  nlohmann::json aggregates = nlohmann::json::object();
  for (const auto& [name, s] : r.aggregates) {
    aggregates[name] = {{"mean", s.value.count ? nlohmann::json(s.value.mean) : nlohmann::json(nullptr)},
                        {"std", s.value.count ? nlohmann::json(s.value.std) : nlohmann::json(nullptr)},
                        {"count", s.value.count},
                        {"missing", s.missing}};
  }
  return {{"k", r.k}, {"episodes", episodes}, {"aggregates", aggregates}, {"notes", r.notes}};
}

}  // namespace podtile
