// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

// Runs the built podtile binary end to end against small fixtures.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "podtile/config.hpp"
#include "podtile/eval.hpp"
#include "podtile/synthetic.hpp"
#include "podtile/version.hpp"

namespace fs = std::filesystem;
using namespace podtile;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PODTILE_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

/// Fresh directory with a 3-episode synthetic corpus in corpus.jsonl.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("podtile_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SyntheticProfile profile;
    profile.n_episodes = 3;
    corpus_ = synthetic_podcast_corpus(profile);
    save_corpus(dir_ / "corpus.jsonl", corpus_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::vector<Episode> corpus_;
};

/// Minimal stand-in for the remote generator: every chunk gets one chapter
/// at the first valid index of the request.
class FakeRemote {
 public:
  FakeRemote() {
    server_.Post("/v1/chapterize", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto body = nlohmann::json::parse(req.body);
      const auto id = body.at("valid_range").at(0).get<std::size_t>();
      res.set_content(nlohmann::json::array({{{"start_sentence_id", id}, {"title", "Part " + std::to_string(id)}}}).dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeRemote() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chapterize"; }
  int requests() const { return requests_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

int unused_port() {
  httplib::Server s;
  return s.bind_to_any_port("127.0.0.1");
}

}  // namespace

TEST(RunConfig, JsonRoundTripKeepsHash) {
  auto j = nlohmann::json::parse(R"({
    "generator": {"type": "remote", "remote": {"endpoint": "http://h:1/x", "max_concurrent": 2}},
    "pipeline": {"total_words": 4000, "context_words": 500, "dynamic_context": false},
    "eval": {"k": 7},
    "retrieval": {"variants": ["desc", "desc_chap"], "k1": 1.2},
    "workers": 3, "seed": 9})");
  const auto c = run_config_from_json(j);
  EXPECT_EQ(c.generator.kind, GeneratorKind::kRemote);
  EXPECT_EQ(c.generator.remote.client.max_concurrent, 2u);
  EXPECT_EQ(c.pipeline.budget.total_words, 4000u);
  EXPECT_FALSE(c.pipeline.use_dynamic_context);
  EXPECT_TRUE(c.pipeline.use_static_context);
  EXPECT_EQ(c.eval.k, 7u);
  EXPECT_EQ(c.retrieval.variants.size(), 2u);
  EXPECT_EQ(c.retrieval.bm25.k1, 1.2);
  EXPECT_EQ(c.retrieval.bm25.b, 0.4);
  const auto again = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
  EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"pipeline": {"total_word": 1}})")), Error);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"workers": "many"})")), Error);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"generator": {"type": "gpt"}})")), Error);
  RunConfig c;
  c.pipeline.budget.context_words = c.pipeline.budget.total_words;
  EXPECT_THROW(validate(c), Error);
  RunConfig missing;
  missing.corpus = "/nonexistent/corpus.jsonl";
  EXPECT_THROW(validate(missing), Error);
}

TEST_F(CliTest, OracleReproducesReferences) {
  const auto r = run_cli("chapterize --generator oracle --corpus " + path("corpus.jsonl") + " --output-dir " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto lines = read_jsonl(dir_ / "out" / "predictions.jsonl");
  ASSERT_EQ(lines.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(lines[i].at("episode_id"), corpus_[i].id());
    const auto& chapters = lines[i].at("chapters");
    ASSERT_EQ(chapters.size(), corpus_[i].reference_chapters->size());
    for (std::size_t c = 0; c < chapters.size(); ++c) {
      EXPECT_EQ(chapters[c].at("start_index"), (*corpus_[i].reference_chapters)[c].start_index);
      EXPECT_EQ(chapters[c].at("title"), (*corpus_[i].reference_chapters)[c].title);
    }
    EXPECT_EQ(lines[i].at("run").at("version"), kVersion);
  }
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest.at("config").at("generator").at("type"), "oracle");
  EXPECT_EQ(manifest.at("config_hash"), lines[0].at("run").at("config_hash"));

  const auto e = run_cli("evaluate --predictions " + path("out/predictions.jsonl") + " --references " +
                         path("corpus.jsonl") + " --output-dir " + path("out"));
  ASSERT_EQ(e.exit_code, 0) << e.output;
  const auto report = nlohmann::json::parse(slurp(dir_ / "out" / "eval_report.json"));
  EXPECT_EQ(report.at("aggregates").at("windiff").at("mean"), 0.0);
  EXPECT_EQ(report.at("aggregates").at("rougeL_f1_aligned").at("mean"), 1.0);
  EXPECT_EQ(report.at("aggregates").at("emb_f1").at("mean"), 1.0);
  EXPECT_EQ(report.at("k"), estimate_k(corpus_));
  EXPECT_NE(e.output.find("k = " + std::to_string(estimate_k(corpus_)) + " (estimated from"), std::string::npos);
}

TEST_F(CliTest, UnreachableRemoteExitsTwoAndNamesEpisodes) {
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(unused_port()) + "/v1/chapterize";
  std::ofstream(dir_ / "cfg.json") << nlohmann::json{
      {"generator", {{"type", "remote"}, {"remote", {{"endpoint", endpoint}, {"max_attempts", 2},
                                                     {"backoff_base_s", 0.01}, {"timeout_s", 2}}}}}};
  const auto r = run_cli("chapterize --config " + path("cfg.json") + " --corpus " + path("corpus.jsonl") +
                         " --output-dir " + path("out"));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  const auto log = slurp(dir_ / "out" / "failures.log");
  for (const auto& ep : corpus_) EXPECT_NE(log.find(ep.id() + ": "), std::string::npos) << log;
}

TEST_F(CliTest, DryRunDoesNotCallTheGenerator) {
  // An unreachable endpoint would fail any real call.
  const auto r = run_cli("chapterize --dry-run --generator remote --endpoint http://127.0.0.1:1/x --corpus " +
                         path("corpus.jsonl") + " --output-dir " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("\"type\": \"remote\""), std::string::npos);
  std::size_t calls = 0;
  for (const auto& ep : corpus_) calls += chunk_transcript(ep.transcript, ChunkBudget{}).size();
  EXPECT_NE(r.output.find(std::to_string(calls) + " generator calls planned"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "predictions.jsonl"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  std::ofstream(dir_ / "cfg.json") << R"({"generator": {"type": "cohesion"}, "workers": 2, "output_dir": "elsewhere"})";
  const auto r = run_cli("chapterize --dry-run --config " + path("cfg.json") + " --generator oracle --workers 5 --corpus " +
                         path("corpus.jsonl") + " --output-dir " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("\"type\": \"oracle\""), std::string::npos);
  EXPECT_NE(r.output.find("\"workers\": 5"), std::string::npos);
  EXPECT_EQ(r.output.find("elsewhere"), std::string::npos);
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  std::ofstream(dir_ / "cfg.json") << R"({"pipeline": {"budget": 1}})";
  EXPECT_EQ(run_cli("chapterize --config " + path("cfg.json") + " --corpus " + path("corpus.jsonl")).exit_code, 1);
  EXPECT_EQ(run_cli("chapterize --corpus " + path("missing.jsonl")).exit_code, 1);
  EXPECT_EQ(run_cli("chapterize --generator gpt --corpus " + path("corpus.jsonl")).exit_code, 1);
}

TEST_F(CliTest, CassetteReplayIsOfflineAndDeterministic) {
  const std::string base = "chapterize --generator remote --corpus " + path("corpus.jsonl") + " --cassette " +
                           path("cassette.json");
  {
    FakeRemote server;
    const auto rec = run_cli(base + " --cassette-mode record --endpoint " + server.endpoint() + " --output-dir " + path("rec"));
    ASSERT_EQ(rec.exit_code, 0) << rec.output;
    EXPECT_GT(server.requests(), 0);
  }
  // Server is gone; replay must not need the network or the endpoint.
  const auto a = run_cli(base + " --output-dir " + path("a"));
  ASSERT_EQ(a.exit_code, 0) << a.output;
  const auto b = run_cli(base + " --output-dir " + path("a2"));
  ASSERT_EQ(b.exit_code, 0) << b.output;
  const auto pa = read_jsonl(dir_ / "a" / "predictions.jsonl");
  const auto pr = read_jsonl(dir_ / "rec" / "predictions.jsonl");
  ASSERT_EQ(pa.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pa[i].at("chapters"), pr[i].at("chapters"));
    EXPECT_EQ(pa[i].at("chapters").at(0).at("title"), "Part 0");
  }
  EXPECT_EQ(slurp(dir_ / "a" / "predictions.jsonl"), slurp(dir_ / "a2" / "predictions.jsonl"));
}

TEST_F(CliTest, EvaluateReportsSkippedEpisodes) {
  ASSERT_EQ(run_cli("chapterize --generator oracle --corpus " + path("corpus.jsonl") + " --output-dir " + path("out")).exit_code, 0);
  const auto lines = read_jsonl(dir_ / "out" / "predictions.jsonl");
  std::ofstream(dir_ / "two.jsonl") << lines[0].dump() << "\n" << lines[2].dump() << "\n";
  const auto r = run_cli("evaluate --k 5 --predictions " + path("two.jsonl") + " --references " + path("corpus.jsonl") +
                         " --output-dir " + path("out"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto report = nlohmann::json::parse(slurp(dir_ / "out" / "eval_report.json"));
  EXPECT_EQ(report.at("episodes").size(), 2u);
  EXPECT_EQ(report.at("k"), 5);
  ASSERT_FALSE(report.at("notes").empty());
  EXPECT_EQ(report.at("notes").at(0), "skipped 1 reference episode(s) without a prediction: " + corpus_[1].id());
  EXPECT_NE(report.at("run").at("config").at("eval").at("k"), nullptr);
}

TEST_F(CliTest, EvaluateEmptyIntersectionExitsOne) {
  std::ofstream(dir_ / "none.jsonl") << R"({"episode_id": "unknown", "chapters": [{"start_index": 0, "title": "x"}]})" << "\n";
  const auto r = run_cli("evaluate --predictions " + path("none.jsonl") + " --references " + path("corpus.jsonl") +
                         " --output-dir " + path("out"));
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "eval_report.json"));
}

TEST_F(CliTest, RetrieveEvalIsDeterministicAndReportsIndexSizes) {
  ASSERT_EQ(run_cli("synth --episodes 12 --queries 6 --output-dir " + path("data")).exit_code, 0);
  const std::string args = "retrieve-eval --corpus " + path("data/corpus.jsonl") + " --queries " +
                           path("data/queries.tsv") + " --qrels " + path("data/qrels.txt") + " --output-dir " +
                           path("out");
  ASSERT_EQ(run_cli(args).exit_code, 0);
  const auto first = slurp(dir_ / "out" / "retrieval_report.json");
  ASSERT_EQ(run_cli(args).exit_code, 0);
  EXPECT_EQ(first, slurp(dir_ / "out" / "retrieval_report.json"));

  const auto report = nlohmann::json::parse(first);
  ASSERT_EQ(report.at("variants").size(), 4u);
  for (const auto& v : report.at("variants")) EXPECT_EQ(v.at("metrics").size(), 5u);
  const auto& sizes = report.at("index_size");
  EXPECT_LT(sizes.at("desc_chap").at("total_postings").get<std::size_t>(),
            sizes.at("desc_trans").at("total_postings").get<std::size_t>());
  EXPECT_EQ(report.at("run").at("version"), kVersion);
}

TEST_F(CliTest, FilterAndStatsWriteReports) {
  auto bad = corpus_;
  bad[0].metadata.episode_id = "too_long_title";
  (*bad[0].reference_chapters)[0].title = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen";
  save_corpus(dir_ / "mixed.jsonl", {bad[0], corpus_[1]});
  ASSERT_EQ(run_cli("filter --corpus " + path("mixed.jsonl") + " --output-dir " + path("out")).exit_code, 0);
  const auto kept = read_jsonl(dir_ / "out" / "filtered.jsonl");
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].at("episode_id"), corpus_[1].id());
  const auto report = nlohmann::json::parse(slurp(dir_ / "out" / "filter_report.json"));
  ASSERT_EQ(report.at("rejected").size(), 1u);
  EXPECT_EQ(report.at("rejected").at(0).at("episode_id"), "too_long_title");

  const auto s = run_cli("stats --corpus " + path("corpus.jsonl") + " --output-dir " + path("out"));
  ASSERT_EQ(s.exit_code, 0) << s.output;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "out" / "stats.json")).at("episodes"), 3);
}
