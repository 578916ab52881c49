// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Episode-level sparse retrieval over document-expansion variants: BM25
/// inverted index, extractive principal-sentence selection, graded ranking
/// metrics and the variant comparison report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "podtile/corpus.hpp"
#include "podtile/error.hpp"
#include "podtile/eval.hpp"
#include "podtile/stats.hpp"
#include "podtile/text.hpp"

namespace podtile {

enum class IndexVariant { kDesc, kDescPrinc, kDescChap, kDescTrans };

inline constexpr IndexVariant kAllVariants[] = {IndexVariant::kDesc, IndexVariant::kDescPrinc,
                                                IndexVariant::kDescChap, IndexVariant::kDescTrans};

inline std::string_view to_string(IndexVariant v) {
  switch (v) {
    case IndexVariant::kDesc: return "desc";
    case IndexVariant::kDescPrinc: return "desc_princ";
    case IndexVariant::kDescChap: return "desc_chap";
    case IndexVariant::kDescTrans: return "desc_trans";
  }
  return "?";
}

inline IndexVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (to_string(v) == to_lower(name)) return v;
  }
  throw Error("unknown index variant: " + std::string(name));
}

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  void validate() const {
    if (!(k1 >= 0.0) || !(b >= 0.0 && b <= 1.0)) throw Error("Bm25Params: need k1 >= 0 and b in [0, 1]");
  }
};

struct AnalyzerOptions {
  bool stem = false;  // strip plural suffixes
};

/// Plural-stripping stemmer: "ies" -> "y", "es" -> "e", "s" -> "" except
/// after "s", "u" or "i".
inline std::string s_stem(std::string term) {
  const auto n = term.size();
  auto ends = [&](std::string_view suf) { return n >= suf.size() && term.compare(n - suf.size(), suf.size(), suf) == 0; };
  if (n > 4 && ends("ies") && !ends("eies") && !ends("aies")) return term.substr(0, n - 3) + "y";
  if (n > 3 && ends("es") && !ends("aes") && !ends("ees") && !ends("oes")) return term.substr(0, n - 1);
  if (n > 2 && ends("s") && !ends("us") && !ends("ss") && !ends("is")) return term.substr(0, n - 1);
  return term;
}

inline std::vector<std::string> index_terms(std::string_view text, const AnalyzerOptions& opts) {
  auto terms = analyze(text);
  if (opts.stem) {
    for (auto& t : terms) t = s_stem(std::move(t));
  }
  return terms;
}

/// Extractive summary: each sentence is scored independently by ROUGE-1 F1
/// between its unique terms and the unique terms of the rest of the
/// transcript. Highest scores are taken greedily (ties to the earlier
/// sentence) while the total stays within `word_cap`; sentences that would
/// overflow are skipped. Output keeps document order.
inline std::string principal_extract(const Transcript& transcript, std::size_t word_cap = 24) {
  const auto& sents = transcript.sentences;
  const std::size_t n = sents.size();
  std::vector<std::set<std::string>> unique(n);
  std::map<std::string, std::size_t> doc_counts;  // sentences containing each term
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& t : analyze(sents[i].text)) unique[i].insert(std::move(t));
    for (const auto& t : unique[i]) ++doc_counts[t];
  }
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // unique terms of the rest = terms appearing in some other sentence
    std::size_t rest_size = 0;
    for (const auto& [t, c] : doc_counts) {
      if (c > (unique[i].contains(t) ? 1u : 0u)) ++rest_size;
    }
    std::size_t overlap = 0;
    for (const auto& t : unique[i]) {
      if (doc_counts[t] > 1) ++overlap;
    }
    score[i] = f1_from_counts(static_cast<double>(overlap), static_cast<double>(rest_size),
                              static_cast<double>(unique[i].size()));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  std::vector<std::size_t> chosen;
  std::size_t words = 0;
  for (std::size_t i : order) {
    if (words + sents[i].word_count > word_cap) continue;
    words += sents[i].word_count;
    chosen.push_back(i);
  }
  std::sort(chosen.begin(), chosen.end());
  std::string out;
  for (std::size_t i : chosen) {
    if (!out.empty()) out.push_back(' ');
    out += sents[i].text;
  }
  return out;
}

/// Text indexed for one episode under `variant`.
inline std::string variant_text(const Episode& ep, IndexVariant variant, std::size_t principal_cap = 24) {
  std::string text = ep.metadata.description;
  auto append = [&](const std::string& s) {
    if (s.empty()) return;
    if (!text.empty()) text.push_back(' ');
    text += s;
  };
  switch (variant) {
    case IndexVariant::kDesc: break;
    case IndexVariant::kDescChap:
      if (!ep.reference_chapters) {
        throw DataError("episode " + ep.id() + ": variant desc_chap requires chapters");
      }
      for (const auto& c : *ep.reference_chapters) append(c.title);
      break;
    case IndexVariant::kDescPrinc:
    case IndexVariant::kDescTrans:
      if (ep.transcript.empty()) {
        throw DataError("episode " + ep.id() + ": variant " + std::string(to_string(variant)) +
                        " requires a transcript");
      }
      if (variant == IndexVariant::kDescPrinc) {
        append(principal_extract(ep.transcript, principal_cap));
      } else {
        for (const auto& s : ep.transcript.sentences) append(s.text);
      }
      break;
  }
  return text;
}

struct SearchHit {
  std::string episode_id;
  double score = 0.0;
};

struct IndexStats {
  std::size_t documents = 0;
  std::size_t vocabulary = 0;
  std::size_t total_postings = 0;
  std::size_t bytes = 0;  // 8 bytes per posting plus dictionary term bytes
};

class InvertedIndex {
 public:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };

  InvertedIndex(Bm25Params params = {}, AnalyzerOptions analyzer = {}) : params_(params), analyzer_(analyzer) {
    params_.validate();
  }

  void add_document(std::string doc_id, std::string_view text) {
    const auto doc = static_cast<std::uint32_t>(doc_ids_.size());
    std::map<std::string, std::uint32_t> tf;
    std::size_t length = 0;
    for (auto& t : index_terms(text, analyzer_)) {
      ++tf[t];
      ++length;
    }
    for (auto& [term, count] : tf) postings_[term].push_back({doc, count});
    doc_ids_.push_back(std::move(doc_id));
    doc_len_.push_back(length);
    total_len_ += length;
  }

  std::size_t size() const noexcept { return doc_ids_.size(); }
  const std::string& doc_id(std::size_t d) const { return doc_ids_.at(d); }
  std::size_t doc_length(std::size_t d) const { return doc_len_.at(d); }
  double average_length() const noexcept {
    return doc_ids_.empty() ? 0.0 : static_cast<double>(total_len_) / static_cast<double>(doc_ids_.size());
  }
  const Bm25Params& params() const noexcept { return params_; }
  const AnalyzerOptions& analyzer() const noexcept { return analyzer_; }

  std::size_t document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
  }

  std::uint32_t term_frequency(std::size_t doc, const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return 0;
    for (const auto& p : it->second) {
      if (p.doc == doc) return p.tf;
    }
    return 0;
  }

  double idf(const std::string& term) const {
    const double n = static_cast<double>(doc_ids_.size());
    const double df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  IndexStats stats() const {
    IndexStats s;
    s.documents = doc_ids_.size();
    s.vocabulary = postings_.size();
    for (const auto& [term, list] : postings_) {
      s.total_postings += list.size();
      s.bytes += term.size() + list.size() * sizeof(Posting);
    }
    return s;
  }

  /// Okapi BM25 over the unique query terms. Only documents matching at
  /// least one term are returned; ties are ordered by episode id.
  std::vector<SearchHit> search(std::string_view query, std::size_t top_k) const {
    auto terms = index_terms(query, analyzer_);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    const double avg = average_length();
    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      const double w = idf(term);
      for (const auto& p : it->second) {
        const double tf = static_cast<double>(p.tf);
        const double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(doc_len_[p.doc]) / avg);
        scores[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + norm);
      }
    }
    std::vector<SearchHit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) hits.push_back({doc_ids_[doc], score});
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.episode_id < b.episode_id;
    });
    if (hits.size() > top_k) hits.resize(top_k);
    return hits;
  }

 private:
  Bm25Params params_;
  AnalyzerOptions analyzer_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_len_;
  std::size_t total_len_ = 0;
};

inline InvertedIndex build_index(const std::vector<Episode>& episodes, IndexVariant variant,
                                 const Bm25Params& params = {}, const AnalyzerOptions& analyzer = {}) {
  InvertedIndex index(params, analyzer);
  for (const auto& ep : episodes) index.add_document(ep.id(), variant_text(ep, variant));
  return index;
}

// ---------------------------------------------------------------------------
// Judgments and ranking metrics

/// query id -> episode id -> graded relevance. Unlisted pairs have grade 0.
using Judgments = std::map<std::string, std::map<std::string, int>>;

struct Query {
  std::string id;
  std::string text;
};

/// TREC qrels: "query_id iteration episode_id grade" per line.
inline Judgments read_qrels(std::istream& in) {
  Judgments j;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string qid, iter, doc;
    long long grade = 0;
    if (!(fields >> qid >> iter >> doc >> grade)) throw DataError("qrels line " + std::to_string(line_no) + ": malformed");
    if (grade < 0) throw DataError("qrels line " + std::to_string(line_no) + ": negative grade");
    j[qid][doc] = static_cast<int>(grade);
  }
  return j;
}

/// Queries TSV: "query_id<TAB>query text".
inline std::vector<Query> read_queries(std::istream& in) {
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("queries line " + std::to_string(line_no) + ": missing tab");
    queries.push_back({std::string(trim(std::string_view(line).substr(0, tab))), line.substr(tab + 1)});
  }
  return queries;
}

inline Judgments load_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open qrels file " + path.string());
  return read_qrels(in);
}

inline std::vector<Query> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open queries file " + path.string());
  return read_queries(in);
}

using QueryJudgments = std::map<std::string, int>;

inline std::size_t count_relevant(const QueryJudgments& judged) {
  return static_cast<std::size_t>(
      std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second > 0; }));
}

inline int grade_of(const QueryJudgments& judged, const std::string& id) {
  auto it = judged.find(id);
  return it == judged.end() ? 0 : it->second;
}

/// DCG with gain 2^rel - 1 and log2(rank + 1) discount over the first
/// `cutoff` ranks, normalized by the ideal DCG of all judged documents.
inline std::optional<double> ndcg(const std::vector<std::string>& ranking, const QueryJudgments& judged,
                                  std::optional<std::size_t> cutoff = std::nullopt) {
  if (count_relevant(judged) == 0) return std::nullopt;
  const std::size_t depth = cutoff ? std::min(*cutoff, ranking.size()) : ranking.size();
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const int g = grade_of(judged, ranking[i]);
    if (g > 0) dcg += (std::exp2(g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [id, g] : judged) {
    if (g > 0) grades.push_back(g);
  }
  std::sort(grades.rbegin(), grades.rend());
  double ideal = 0.0;
  for (std::size_t i = 0; i < grades.size(); ++i) {
    ideal += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

inline std::optional<double> recall_at(const std::vector<std::string>& ranking, const QueryJudgments& judged,
                                       std::size_t n) {
  const std::size_t relevant = count_relevant(judged);
  if (relevant == 0) return std::nullopt;
  std::size_t found = 0;
  for (std::size_t i = 0; i < std::min(n, ranking.size()); ++i) {
    if (grade_of(judged, ranking[i]) > 0) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(relevant);
}

inline std::optional<double> reciprocal_rank(const std::vector<std::string>& ranking, const QueryJudgments& judged) {
  if (count_relevant(judged) == 0) return std::nullopt;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (grade_of(judged, ranking[i]) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Variant comparison

inline constexpr const char* kRetrievalMetricNames[] = {"ndcg", "R@30", "R@50", "R@100", "RR"};
inline constexpr std::size_t kRetrievalMetrics = std::size(kRetrievalMetricNames);

struct QueryResult {
  std::string query_id;
  std::optional<double> values[kRetrievalMetrics];
};

struct VariantResult {
  IndexVariant variant = IndexVariant::kDesc;
  IndexStats index;
  std::vector<QueryResult> queries;
  MeanStd means[kRetrievalMetrics];
  /// Two-sided paired t-test p-value against the baseline variant.
  std::optional<double> p_values[kRetrievalMetrics];
};

struct RetrievalReport {
  Bm25Params params;
  AnalyzerOptions analyzer;
  std::size_t top_k = 1000;
  std::optional<IndexVariant> baseline;
  std::size_t queries_without_relevant = 0;
  std::vector<VariantResult> variants;
};

/// Runs every query against every variant. Queries without a relevant
/// judgment are excluded. The baseline for significance is desc_princ when
/// evaluated, otherwise the first variant.
inline RetrievalReport run_retrieval_eval(const std::vector<Episode>& corpus, const std::vector<Query>& queries,
                                          const Judgments& judgments, const std::vector<IndexVariant>& variants,
                                          const Bm25Params& params = {}, const AnalyzerOptions& analyzer = {},
                                          std::size_t top_k = 1000) {
  RetrievalReport report;
  report.params = params;
  report.analyzer = analyzer;
  report.top_k = top_k;
  static const QueryJudgments kNone;

  for (auto variant : variants) {
    VariantResult vr;
    vr.variant = variant;
    const InvertedIndex index = build_index(corpus, variant, params, analyzer);
    vr.index = index.stats();
    for (const auto& q : queries) {
      auto jt = judgments.find(q.id);
      const QueryJudgments& judged = jt == judgments.end() ? kNone : jt->second;
      if (count_relevant(judged) == 0) continue;
      std::vector<std::string> ranking;
      for (auto& hit : index.search(q.text, top_k)) ranking.push_back(std::move(hit.episode_id));
      vr.queries.push_back({q.id,
                            {ndcg(ranking, judged), recall_at(ranking, judged, 30), recall_at(ranking, judged, 50),
                             recall_at(ranking, judged, 100), reciprocal_rank(ranking, judged)}});
    }
    for (std::size_t m = 0; m < kRetrievalMetrics; ++m) {
      std::vector<double> column;
      for (const auto& qr : vr.queries) column.push_back(*qr.values[m]);
      vr.means[m] = mean_std(column);
    }
    report.variants.push_back(std::move(vr));
  }
  for (const auto& q : queries) {
    auto jt = judgments.find(q.id);
    if (jt == judgments.end() || count_relevant(jt->second) == 0) ++report.queries_without_relevant;
  }

  if (report.variants.empty()) return report;
  auto base = std::find_if(report.variants.begin(), report.variants.end(),
                           [](const VariantResult& v) { return v.variant == IndexVariant::kDescPrinc; });
  if (base == report.variants.end()) base = report.variants.begin();
  report.baseline = base->variant;
  for (auto& vr : report.variants) {
    if (vr.variant == base->variant) continue;
    for (std::size_t m = 0; m < kRetrievalMetrics; ++m) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < vr.queries.size(); ++i) {
        a.push_back(*vr.queries[i].values[m]);
        b.push_back(*base->queries[i].values[m]);
      }
      if (auto t = paired_t_test(a, b)) vr.p_values[m] = t->p_value;
    }
  }
  return report;
}

inline nlohmann::json to_json(const RetrievalReport& r) {
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& vr : r.variants) {
    nlohmann::json metrics = nlohmann::json::object();
    nlohmann::json p_values = nlohmann::json::object();
    for (std::size_t m = 0; m < kRetrievalMetrics; ++m) {
      metrics[kRetrievalMetricNames[m]] = vr.means[m].count ? nlohmann::json(vr.means[m].mean) : nlohmann::json(nullptr);
      p_values[kRetrievalMetricNames[m]] = optional_json(vr.p_values[m]);
    }
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& q : vr.queries) {
      nlohmann::json jq{{"query_id", q.query_id}};
      for (std::size_t m = 0; m < kRetrievalMetrics; ++m) jq[kRetrievalMetricNames[m]] = optional_json(q.values[m]);
      per_query.push_back(std::move(jq));
    }
    variants.push_back({{"variant", to_string(vr.variant)},
                        {"metrics", metrics},
                        {"p_values", p_values},
                        {"index", {{"documents", vr.index.documents},
                                   {"vocabulary", vr.index.vocabulary},
                                   {"total_postings", vr.index.total_postings},
                                   {"bytes", vr.index.bytes}}},
                        {"queries", per_query}});
  }
  return {{"bm25", {{"k1", r.params.k1}, {"b", r.params.b}}},
          {"stemming", r.analyzer.stem},
          {"top_k", r.top_k},
          {"baseline", r.baseline ? nlohmann::json(std::string(to_string(*r.baseline))) : nlohmann::json(nullptr)},
          {"queries_without_relevant", r.queries_without_relevant},
          {"variants", variants}};
}

}  // namespace podtile
