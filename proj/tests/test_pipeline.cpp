// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "podtile/eval.hpp"
#include "podtile/pipeline.hpp"
#include "podtile/synthetic.hpp"

using namespace podtile;

namespace {

class FixedGenerator final : public Generator {
 public:
  explicit FixedGenerator(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}
  std::string generate(const GeneratorRequest& request) override {
    std::lock_guard lock(mutex_);
    inputs.push_back(request.input_text);
    return outputs_.empty() ? std::string(kNoBoundariesSentinel) : outputs_[std::min(inputs.size(), outputs_.size()) - 1];
  }
  std::vector<std::string> inputs;

 private:
  std::vector<std::string> outputs_;
  std::mutex mutex_;
};

/// Episode with 3 sentences of 4000 words each: one chunk per sentence under
/// the default budget.
Episode three_chunk_episode() {
  Episode ep;
  ep.metadata = {"ep1", "show", "Running Show", "All about running."};
  for (int s = 0; s < 3; ++s) {
    std::string text;
    for (int i = 0; i < 4000; ++i) text += (i ? " w" : "w") + std::to_string(s);
    ep.transcript.sentences.push_back(Sentence::make(text));
  }
  return ep;
}

}  // namespace

TEST(Stitch, SortsAndKeepsEarliestOnDuplicates) {
  std::vector<ChunkPrediction> preds(3);
  preds[0].entries = {{0, "A"}, {40, "first"}};
  preds[1].is_empty_sentinel = true;
  preds[2].entries = {{40, "second"}, {10, "B"}};
  EXPECT_EQ(stitch(preds), (ChapterSet{{0, "A"}, {10, "B"}, {40, "first"}}));
  EXPECT_TRUE(stitch({}).empty());
}

TEST(SanitizeTitles, WholeWordCaseInsensitive) {
  const std::vector<std::string> block = {"ass"};
  const auto r = sanitize_titles({{0, "Class notes"}, {5, "Kick ASS moments"}, {9, "Fine"}}, block);
  EXPECT_EQ(r.chapters, (ChapterSet{{0, "Class notes"}, {5, "Chapter 2"}, {9, "Fine"}}));
  ASSERT_EQ(r.removals.size(), 1u);
  EXPECT_EQ(r.removals[0].chapter, 1u);
  EXPECT_EQ(r.removals[0].original_title, "Kick ASS moments");
}

TEST(LoadBlocklist, SkipsCommentsAndBlanks) {
  const auto path = std::filesystem::temp_directory_path() / "podtile_blocklist_test.txt";
  std::ofstream(path) << "# comment\n\n  Badword \nother\n";
  EXPECT_EQ(load_blocklist(path), (std::vector<std::string>{"badword", "other"}));
  std::filesystem::remove(path);
  EXPECT_THROW(load_blocklist(path), DataError);
}

TEST(ChapterizeEpisode, OracleRoundTripIsExact) {
  SyntheticProfile profile;
  profile.n_episodes = 12;
  const auto corpus = synthetic_podcast_corpus(profile);
  OracleGenerator oracle(corpus);
  for (const auto& ep : corpus) {
    const auto r = chapterize_episode(ep, oracle, {});
    EXPECT_EQ(r.chapters, *ep.reference_chapters) << ep.id();
    EXPECT_TRUE(r.warnings.empty());
  }
}

TEST(ChapterizeEpisode, SentinelEverywhereGivesFallback) {
  const auto ep = three_chunk_episode();
  FixedGenerator gen({});
  const auto r = chapterize_episode(ep, gen, {});
  EXPECT_EQ(r.chapters, (ChapterSet{{0, "Running Show"}}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(gen.inputs.size(), 3u);
}

TEST(ChapterizeEpisode, DynamicContextCarriesEarlierTitles) {
  const auto ep = three_chunk_episode();
  FixedGenerator gen({"0 := Warm up", "1 := Long run | 7 := bogus", "No chapter boundaries were found."});
  const auto r = chapterize_episode(ep, gen, {});
  ASSERT_EQ(gen.inputs.size(), 3u);
  EXPECT_EQ(gen.inputs[0].find("Previous chapters:"), std::string::npos);
  EXPECT_NE(gen.inputs[1].find("Previous chapters: Warm up\n"), std::string::npos);
  EXPECT_NE(gen.inputs[2].find("Previous chapters: Warm up | Long run\n"), std::string::npos);
  for (const auto& in : gen.inputs) EXPECT_NE(in.find("Episode title: Running Show\n"), std::string::npos);
  EXPECT_EQ(r.chapters, (ChapterSet{{0, "Warm up"}, {1, "Long run"}}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_TRUE(r.warnings[0].starts_with("chunk 1: "));
}

TEST(ChapterizeEpisode, ContextAblations) {
  const auto ep = three_chunk_episode();
  PipelineConfig no_static;
  no_static.use_static_context = false;
  FixedGenerator a({"0 := Warm up"});
  chapterize_episode(ep, a, no_static);
  EXPECT_EQ(a.inputs[1].find("Running Show"), std::string::npos);
  EXPECT_NE(a.inputs[1].find("Previous chapters: Warm up\n"), std::string::npos);

  PipelineConfig no_dynamic;
  no_dynamic.use_dynamic_context = false;
  FixedGenerator b({"0 := Warm up"});
  chapterize_episode(ep, b, no_dynamic);
  EXPECT_EQ(b.inputs[1].find("Previous chapters:"), std::string::npos);
  EXPECT_NE(b.inputs[1].find("Episode title: Running Show\n"), std::string::npos);
}

TEST(ChapterizeEpisode, BlocklistReplacesTitles) {
  const auto ep = three_chunk_episode();
  FixedGenerator gen({"0 := Damn good start", "1 := Fine", "No chapter boundaries were found."});
  const std::vector<std::string> block = {"damn"};
  const auto r = chapterize_episode(ep, gen, {}, block);
  EXPECT_EQ(r.chapters, (ChapterSet{{0, "Chapter 1"}, {1, "Fine"}}));
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(ChapterizeCorpus, WorkersDoNotChangeResults) {
  SyntheticProfile profile;
  profile.n_episodes = 10;
  const auto corpus = synthetic_podcast_corpus(profile);
  CohesionGenerator gen(corpus);
  const auto serial = chapterize_corpus(corpus, gen, {}, {}, 1);
  const auto parallel = chapterize_corpus(corpus, gen, {}, {}, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    ASSERT_TRUE(serial[i].result && parallel[i].result);
    EXPECT_EQ(serial[i].result->chapters, parallel[i].result->chapters);
    EXPECT_NO_THROW(validate_episode(Episode{corpus[i].metadata, corpus[i].transcript, serial[i].result->chapters}));
  }
}

TEST(ChapterizeCorpus, EpisodeFailuresAreIsolated) {
  auto corpus = std::vector<Episode>{three_chunk_episode(), Episode{}};
  corpus[1].metadata.episode_id = "empty";
  FixedGenerator gen({"0 := A"});
  const auto out = chapterize_corpus(corpus, gen, {}, {}, 2);
  EXPECT_TRUE(out[0].result.has_value());
  EXPECT_FALSE(out[1].result.has_value());
  EXPECT_NE(out[1].error.find("empty"), std::string::npos);
}

TEST(PredictionToJson, IncludesTimestamps) {
  Episode ep;
  ep.metadata.episode_id = "e";
  ep.transcript.sentences = {Sentence::make("a", 0.0, 1.0), Sentence::make("b", 1.0, 2.5)};
  const auto j = prediction_to_json(ep, {{{0, "A"}, {1, "B"}}, {"w"}});
  EXPECT_EQ(j.at("episode_id"), "e");
  EXPECT_EQ(j.at("chapters").at(1).at("start_s"), 1.0);
  EXPECT_EQ(j.at("warnings").size(), 1u);
}

TEST(ChapterizeEpisode, OracleScoresPerfectly) {
  SyntheticProfile profile;
  profile.n_episodes = 6;
  const auto corpus = synthetic_podcast_corpus(profile);
  OracleGenerator oracle(corpus);
  std::vector<ChapterSet> predicted;
  for (const auto& ep : corpus) predicted.push_back(chapterize_episode(ep, oracle, {}).chapters);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ref = *corpus[i].reference_chapters;
    const auto n = corpus[i].transcript.size();
    EXPECT_EQ(window_diff(BoundarySeq::from_chapters(ref, n), BoundarySeq::from_chapters(predicted[i], n), 10), 0.0);
  }
}
