// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "podtile/retrieval.hpp"
#include "podtile/synthetic.hpp"

using namespace podtile;

namespace {

Transcript make_transcript(const std::vector<std::string>& texts) {
  Transcript t;
  for (const auto& s : texts) t.sentences.push_back(Sentence::make(s));
  return t;
}

/// ROUGE-1 F1 of each sentence's unique tokens against the unique tokens of
/// the remaining sentences, via the multiset oracle on deduplicated strings.
std::vector<double> principal_scores_oracle(const std::vector<std::string>& texts) {
  auto unique_join = [](const std::vector<std::string>& parts) {
    std::set<std::string> u;
    for (const auto& p : parts)
      for (auto& t : oracle::alnum_lower(p)) u.insert(t);
    std::string s;
    for (const auto& t : u) s += t + " ";
    return s;
  };
  std::vector<double> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::vector<std::string> rest;
    for (std::size_t j = 0; j < texts.size(); ++j)
      if (j != i) rest.push_back(texts[j]);
    out.push_back(oracle::rouge_1(unique_join(rest), unique_join({texts[i]})));
  }
  return out;
}

std::vector<std::string> random_docs(SeededRng& rng, std::size_t n, std::size_t vocab) {
  std::vector<std::string> docs;
  for (std::size_t d = 0; d < n; ++d) {
    std::string text;
    for (std::size_t w = 0, len = rng.uniform(1, 40); w < len; ++w) text += synthetic_word(rng.uniform(0, vocab - 1)) + " ";
    docs.push_back(text);
  }
  return docs;
}

}  // namespace

TEST(PrincipalExtract, MostSharedSentenceFirst) {
  const std::vector<std::string> texts = {"apple banana cherry", "zebra yak xylophone", "apple banana zebra yak"};
  const auto scores = principal_scores_oracle(texts);
  EXPECT_NEAR(scores[0], 0.5, 1e-12);
  EXPECT_NEAR(scores[1], 0.5, 1e-12);
  EXPECT_NEAR(scores[2], 0.8, 1e-12);
  const auto t = make_transcript(texts);
  EXPECT_EQ(principal_extract(t, 4), "apple banana zebra yak");
  EXPECT_EQ(principal_extract(t, 6), "apple banana zebra yak");  // next best would overflow
  EXPECT_EQ(principal_extract(t, 7), "apple banana cherry apple banana zebra yak");  // tie -> earlier, doc order
  EXPECT_EQ(principal_extract(t, 2), "");
}

TEST(PrincipalExtract, RespectsCapAndOrderProperty) {
  SeededRng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    for (std::size_t i = 0, n = rng.uniform(1, 15); i < n; ++i) {
      std::string s;
      for (std::size_t w = 0, len = rng.uniform(1, 10); w < len; ++w) s += (w ? " " : "") + synthetic_word(rng.uniform(0, 30));
      texts.push_back(s);
    }
    const std::size_t cap = rng.uniform(0, 40);
    const auto out = principal_extract(make_transcript(texts), cap);
    EXPECT_LE(count_words(out), cap);
    // the best-scoring sentence that fits is always included
    const auto scores = principal_scores_oracle(texts);
    std::size_t best = texts.size();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (count_words(texts[i]) <= cap && (best == texts.size() || scores[i] > scores[best])) best = i;
    }
    if (best < texts.size()) {
      EXPECT_NE((" " + out + " ").find(" " + texts[best] + " "), std::string::npos);
    }
  }
}

TEST(VariantText, Composition) {
  Episode ep;
  ep.metadata = {"e1", "", "Title", "Desc words"};
  ep.transcript = make_transcript({"One sentence.", "Two sentence."});
  ep.reference_chapters = ChapterSet{{0, "Intro"}, {1, "Guest"}};
  EXPECT_EQ(variant_text(ep, IndexVariant::kDesc), "Desc words");
  EXPECT_EQ(variant_text(ep, IndexVariant::kDescChap), "Desc words Intro Guest");
  EXPECT_EQ(variant_text(ep, IndexVariant::kDescTrans), "Desc words One sentence. Two sentence.");
  ep.reference_chapters.reset();
  try {
    variant_text(ep, IndexVariant::kDescChap);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("e1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("desc_chap"), std::string::npos);
  }
  EXPECT_EQ(parse_variant("desc_trans"), IndexVariant::kDescTrans);
  EXPECT_THROW(parse_variant("bogus"), Error);
}

TEST(BuildIndex, DescVocabulary) {
  Episode a, b;
  a.metadata = {"a", "", "", "Running fast, running far"};
  b.metadata = {"b", "", "", "Cooking at home"};
  const auto index = build_index({a, b}, IndexVariant::kDesc);
  EXPECT_EQ(index.stats().vocabulary, 6u);
  EXPECT_EQ(index.stats().total_postings, 6u);
  EXPECT_EQ(index.term_frequency(0, "running"), 2u);
  EXPECT_EQ(index.document_frequency("home"), 1u);
}

TEST(Bm25, HandFormula) {
  // docs: "a a b" (len 3), "b c" (len 2); avg 2.5; query "a"
  InvertedIndex index;
  index.add_document("d1", "a a b");
  index.add_document("d2", "b c");
  const double idf = std::log(1.0 + (2 - 1 + 0.5) / (1 + 0.5));
  const double norm = 0.9 * (1 - 0.4 + 0.4 * 3 / 2.5);
  const auto hits = index.search("a", 10);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_NEAR(hits[0].score, idf * 2 * 1.9 / (2 + norm), 1e-12);
  EXPECT_NEAR(index.idf("a"), std::log(2.0), 1e-12);
}

TEST(Bm25, MatchesBruteForce) {
  SeededRng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const auto docs = random_docs(rng, rng.uniform(1, 50), rng.uniform(5, 60));
    const Bm25Params params{0.1 + 2.0 * rng.unit(), rng.unit()};
    InvertedIndex index(params);
    for (std::size_t d = 0; d < docs.size(); ++d) index.add_document("d" + std::to_string(d), docs[d]);
    std::string query;
    for (std::size_t w = 0, n = rng.uniform(1, 6); w < n; ++w) query += synthetic_word(rng.uniform(0, 70)) + " ";
    const auto expected = oracle::bm25_scores(docs, query, params.k1, params.b);
    const auto hits = index.search(query, docs.size());
    std::size_t positive = 0;
    for (double s : expected) positive += s != 0.0;
    EXPECT_EQ(hits.size(), positive);
    for (const auto& h : hits) {
      EXPECT_NEAR(h.score, expected[std::stoul(h.episode_id.substr(1))], 1e-9);
    }
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i - 1].score, hits[i].score);
  }
}

TEST(Bm25, ZeroTermAndSaturation) {
  InvertedIndex index;
  index.add_document("d0", "alpha beta");
  EXPECT_TRUE(index.search("gamma", 10).empty());
  EXPECT_TRUE(index.search("", 10).empty());

  // growing tf with fixed length: increasing, bounded by idf * (k1 + 1)
  double previous = 0.0;
  for (int tf = 1; tf <= 200; tf *= 2) {
    InvertedIndex idx;
    std::string doc;
    for (int i = 0; i < tf; ++i) doc += "term ";
    for (int i = tf; i < 200; ++i) doc += "pad ";
    idx.add_document("d", doc);
    idx.add_document("other", "unrelated words here");
    const auto hits = idx.search("term", 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_GT(hits[0].score, previous);
    EXPECT_LT(hits[0].score, idx.idf("term") * 1.9);
    previous = hits[0].score;
  }
}

TEST(Ndcg, HandExampleAndOracle) {
  const QueryJudgments judged{{"x", 1}, {"z", 2}, {"y", 0}};
  const std::vector<std::string> ranking = {"x", "y", "z"};
  const double dcg = 1.0 + 3.0 / 2.0;
  const double ideal = 3.0 + 1.0 / std::log2(3.0);
  EXPECT_NEAR(*ndcg(ranking, judged), dcg / ideal, 1e-12);
  EXPECT_NEAR(*ndcg(ranking, judged), oracle::ndcg({1, 0, 2}, {1, 0, 2}, 3), 1e-12);
  EXPECT_NEAR(*ndcg({"z", "x"}, judged), 1.0, 1e-12);
  EXPECT_FALSE(ndcg(ranking, {{"y", 0}}).has_value());
}

TEST(Ndcg, CutoffNeverExceedsFullDepthExhaustive) {
  // every grade assignment in {0,1,2}^5 and every cutoff
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  for (int code = 0; code < 243; ++code) {
    QueryJudgments judged;
    std::vector<int> grades;
    for (int i = 0, c = code; i < 5; ++i, c /= 3) {
      judged[ids[i]] = c % 3;
      grades.push_back(c % 3);
    }
    const auto full = ndcg(ids, judged);
    if (!full) continue;
    for (std::size_t cut = 1; cut <= 5; ++cut) {
      const auto v = ndcg(ids, judged, cut);
      EXPECT_LE(*v, *full + 1e-15);
      EXPECT_NEAR(*v, oracle::ndcg(grades, grades, cut), 1e-12);
    }
  }
}

TEST(RecallAndRr, Basics) {
  const QueryJudgments judged{{"a", 1}, {"b", 2}, {"c", 0}};
  const std::vector<std::string> ranking = {"c", "x", "b", "y", "a"};
  EXPECT_EQ(*recall_at(ranking, judged, 1), 0.0);
  EXPECT_EQ(*recall_at(ranking, judged, 3), 0.5);
  EXPECT_EQ(*recall_at(ranking, judged, 100), 1.0);
  EXPECT_NEAR(*reciprocal_rank(ranking, judged), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(*reciprocal_rank({"c"}, judged), 0.0);
  double prev = 0;
  for (std::size_t n = 0; n < 8; ++n) {
    EXPECT_GE(*recall_at(ranking, judged, n), prev);
    prev = *recall_at(ranking, judged, n);
  }
}

TEST(QrelsAndQueries, Parsing) {
  std::istringstream qrels("q1 0 ep1 2\n\nq1 0 ep2 0\nq2 Q0 ep3 1\n");
  const auto j = read_qrels(qrels);
  EXPECT_EQ(j.at("q1").at("ep1"), 2);
  EXPECT_EQ(j.at("q2").at("ep3"), 1);
  std::istringstream bad("q1 0 ep1\n");
  EXPECT_THROW(read_qrels(bad), DataError);

  std::istringstream queries("q1\tmarathon training\r\nq2\tcooking tips\n");
  const auto q = read_queries(queries);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].text, "marathon training");
  std::istringstream notab("q1 marathon\n");
  EXPECT_THROW(read_queries(notab), DataError);
}

TEST(RetrievalEval, ChapterTitlesHelpWhenOnlyTheyMatch) {
  SeededRng rng(9);
  std::vector<Episode> corpus;
  Judgments judgments;
  std::vector<Query> queries;
  for (std::size_t e = 0; e < 60; ++e) {
    Episode ep;
    ep.metadata.episode_id = "ep" + std::to_string(e);
    for (std::size_t w = 0; w < 30; ++w) ep.metadata.description += synthetic_word(rng.uniform(0, 200)) + " ";
    ep.transcript = make_transcript({"filler sentence here"});
    const std::string topic = synthetic_word(10000 + e % 10);
    ep.reference_chapters = ChapterSet{{0, "About " + topic}};
    corpus.push_back(ep);
    judgments["q" + std::to_string(e % 10)][ep.id()] = 1;
  }
  for (std::size_t q = 0; q < 10; ++q) queries.push_back({"q" + std::to_string(q), synthetic_word(10000 + q)});
  queries.push_back({"unjudged", "anything"});

  const auto report = run_retrieval_eval(corpus, queries, judgments, {IndexVariant::kDesc, IndexVariant::kDescChap});
  ASSERT_EQ(report.variants.size(), 2u);
  EXPECT_EQ(report.queries_without_relevant, 1u);
  EXPECT_EQ(report.baseline, IndexVariant::kDesc);
  for (std::size_t m : {0, 1, 2, 4}) {
    EXPECT_GT(report.variants[1].means[m].mean, report.variants[0].means[m].mean) << kRetrievalMetricNames[m];
  }
  const auto j = to_json(report);
  EXPECT_EQ(j.at("variants").at(1).at("variant"), "desc_chap");
  EXPECT_TRUE(j.at("variants").at(0).at("p_values").at("ndcg").is_null());
}

TEST(RetrievalEval, SyntheticPostingsRatio) {
  SyntheticProfile profile;
  profile.n_episodes = 20;
  const auto corpus = synthetic_podcast_corpus(profile);
  const auto chap = build_index(corpus, IndexVariant::kDescChap).stats();
  const auto trans = build_index(corpus, IndexVariant::kDescTrans).stats();
  const auto desc = build_index(corpus, IndexVariant::kDesc).stats();
  EXPECT_LE(static_cast<double>(chap.total_postings), 0.10 * static_cast<double>(trans.total_postings));
  EXPECT_GE(chap.total_postings, desc.total_postings);
}
