// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

// podtile command-line tool. Subcommands: chapterize, evaluate,
// retrieve-eval, stats, filter, synth. Exit codes: 0 success, 1 config or
// data error, 2 when some episodes failed to chapterize.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "podtile/podtile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace podtile;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEpisodeFailures = 2;

/// Flags shared by every subcommand. Unset flags leave config values alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> output_dir;
  bool dry_run = false;
};

struct ChapterizeFlags {
  std::optional<std::string> corpus, generator, endpoint, cassette, cassette_mode, blocklist;
  bool no_static = false, no_dynamic = false;
};

struct EvaluateFlags {
  std::optional<std::string> predictions, references, k_from, embedder;
  std::optional<std::size_t> k;
};

struct RetrievalFlags {
  std::optional<std::string> corpus, queries, qrels, chapters;
  std::vector<std::string> variants;
  std::optional<double> k1, b;
  std::optional<std::size_t> top_k;
  bool stem = false;
};

struct CorpusFlag {
  std::optional<std::string> corpus;
};

struct SynthFlags {
  std::size_t episodes = 100;
  std::size_t queries = 20;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--workers", f.workers, "Worker threads");
  sub->add_option("--output-dir", f.output_dir, "Directory for output files");
  sub->add_flag("--dry-run", f.dry_run, "Print the resolved configuration and stop");
}

RunConfig resolve_common(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (f.output_dir) c.output_dir = *f.output_dir;
  return c;
}

json run_info(const RunConfig& c) {
  return {{"version", kVersion}, {"config_hash", config_hash(c)}};
}

json provenance(const RunConfig& c) {
  return {{"version", kVersion}, {"config_hash", config_hash(c)}, {"config", to_json(c)}};
}

fs::path prepare_output(const RunConfig& c, const char* name) {
  fs::create_directories(c.output_dir);
  return c.output_dir / name;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

const fs::path& require_path(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw Error(std::string("no ") + what + " given (flag or config key)");
  return *p;
}

std::string fmt(const std::optional<double>& v, int precision = 3) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::string fmt(const MeanStd& m, int precision = 3) {
  return m.count ? fmt(std::optional<double>(m.mean), precision) : "-";
}

std::unique_ptr<Generator> make_generator(const RunConfig& c, const std::vector<Episode>& corpus) {
  switch (c.generator.kind) {
    case GeneratorKind::kOracle:
      return std::make_unique<OracleGenerator>(corpus);
    case GeneratorKind::kCohesion:
      return std::make_unique<CohesionGenerator>(corpus, c.generator.cohesion.params, c.generator.cohesion.title_words);
    case GeneratorKind::kRemote: {
      const auto& r = c.generator.remote;
      std::unique_ptr<Transport> transport;
      if (r.cassette) {
        const auto mode = r.cassette_record ? CassetteTransport::Mode::kRecord : CassetteTransport::Mode::kReplay;
        std::unique_ptr<Transport> inner;
        if (r.cassette_record) inner = std::make_unique<HttpTransport>(r.client);
        transport = std::make_unique<CassetteTransport>(*r.cassette, mode, std::move(inner));
      }
      return std::make_unique<RemoteGenerator>(r.client, std::move(transport));
    }
  }
  throw Error("unsupported generator");
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& c) {
  const auto& e = c.eval.embedder;
  if (e.type == "service") return std::make_unique<ServiceEmbedder>(e.endpoint, e.dimension, e.model, e.timeout_s);
  return std::make_unique<HashedBowEmbedder>(e.dimension, c.seed);
}

// ---------------------------------------------------------------------------
// chapterize

int cmd_chapterize(const CommonFlags& common, const ChapterizeFlags& f) {
  RunConfig c = resolve_common(common);
  if (f.corpus) c.corpus = *f.corpus;
  if (f.generator) c.generator.kind = parse_generator_kind(*f.generator);
  if (f.endpoint) c.generator.remote.client.endpoint = *f.endpoint;
  if (f.cassette) c.generator.remote.cassette = *f.cassette;
  if (f.cassette_mode) {
    if (*f.cassette_mode != "record" && *f.cassette_mode != "replay") {
      throw Error("--cassette-mode must be record or replay");
    }
    c.generator.remote.cassette_record = *f.cassette_mode == "record";
  }
  if (f.blocklist) c.pipeline.blocklist_path = *f.blocklist;
  if (f.no_static) c.pipeline.use_static_context = false;
  if (f.no_dynamic) c.pipeline.use_dynamic_context = false;
  validate(c);

  const auto corpus = load_corpus(require_path(c.corpus, "corpus"));
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    std::size_t total = 0;
    for (const auto& ep : corpus) {
      const auto n = chunk_transcript(ep.transcript, c.pipeline.budget).size();
      total += n;
      std::cout << ep.id() << "\t" << n << " chunk" << (n == 1 ? "" : "s") << "\n";
    }
    std::cout << corpus.size() << " episodes, " << total << " generator calls planned\n";
    return kExitOk;
  }

  std::vector<std::string> blocklist;
  if (c.pipeline.blocklist_path) blocklist = load_blocklist(*c.pipeline.blocklist_path);
  auto generator = make_generator(c, corpus);
  const auto outcomes = chapterize_corpus(corpus, *generator, c.pipeline, blocklist, c.workers);

  const auto run = run_info(c);
  std::ofstream predictions(prepare_output(c, "predictions.jsonl"), std::ios::binary);
  const std::string log_header = "# podtile " + std::string(kVersion) + " config_hash " + config_hash(c) + "\n";
  std::ofstream warnings(c.output_dir / "warnings.log", std::ios::binary);
  warnings << log_header;
  std::vector<std::string> failures;
  std::size_t n_warnings = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& o = outcomes[i];
    if (!o.result) {
      failures.push_back(corpus[i].id() + ": " + o.error);
      continue;
    }
    auto line = prediction_to_json(corpus[i], *o.result);
    line["run"] = run;
    predictions << line.dump() << '\n';
    for (const auto& w : o.result->warnings) {
      warnings << corpus[i].id() << ": " << w << '\n';
      ++n_warnings;
    }
  }
  if (!failures.empty()) {
    std::ofstream log(c.output_dir / "failures.log", std::ios::binary);
    log << log_header;
    for (const auto& msg : failures) log << msg << '\n';
  }
  json manifest = provenance(c);
  manifest["command"] = "chapterize";
  manifest["episodes"] = corpus.size();
  manifest["failed"] = failures.size();
  manifest["warnings"] = n_warnings;
  write_json(c.output_dir / "manifest.json", manifest);

  std::cout << "chapterized " << corpus.size() - failures.size() << "/" << corpus.size() << " episodes ("
            << n_warnings << " warnings) -> " << (c.output_dir / "predictions.jsonl").string() << "\n";
  if (!failures.empty()) {
    std::cerr << failures.size() << " episode(s) failed:\n";
    for (const auto& msg : failures) std::cerr << "  " << msg << "\n";
    return kExitEpisodeFailures;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonFlags& common, const EvaluateFlags& f) {
  RunConfig c = resolve_common(common);
  if (f.predictions) c.predictions = *f.predictions;
  if (f.references) c.references = *f.references;
  if (f.k) c.eval.k = *f.k;
  if (f.k_from) c.eval.k_from = *f.k_from;
  if (f.embedder) c.eval.embedder.type = *f.embedder;
  validate(c);
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    return kExitOk;
  }

  const auto references = load_corpus(require_path(c.references, "references"));
  const auto predictions = load_predictions(require_path(c.predictions, "predictions"));

  std::size_t k = 0;
  std::string k_source;
  if (c.eval.k) {
    k = *c.eval.k;
    k_source = "given";
  } else if (c.eval.k_from) {
    k = estimate_k(load_corpus(*c.eval.k_from));
    k_source = "estimated from " + c.eval.k_from->string();
  } else {
    k = estimate_k(references);
    k_source = "estimated from " + c.references->string();
  }

  std::vector<std::string> notes;
  std::vector<std::string> missing_pred;
  std::set<std::string> reference_ids;
  const auto embedder = make_embedder(c);
  std::vector<EpisodeEval> evals;
  for (const auto& ep : references) {
    reference_ids.insert(ep.id());
    auto it = predictions.find(ep.id());
    if (it == predictions.end()) {
      missing_pred.push_back(ep.id());
      continue;
    }
    if (!ep.reference_chapters) {
      notes.push_back("skipped " + ep.id() + ": reference has no chapters");
      continue;
    }
    if (auto bad = chapter_set_violation(it->second, ep.transcript.size())) {
      notes.push_back("skipped " + ep.id() + ": invalid prediction (" + *bad + ")");
      continue;
    }
    evals.push_back(evaluate_episode(ep.id(), *ep.reference_chapters, it->second, ep.transcript.size(), k, *embedder));
  }
  std::size_t extra_pred = 0;
  for (const auto& [id, chapters] : predictions) extra_pred += reference_ids.contains(id) ? 0 : 1;
  if (!missing_pred.empty()) {
    std::string ids;
    for (const auto& id : missing_pred) ids += (ids.empty() ? "" : ", ") + id;
    notes.insert(notes.begin(), "skipped " + std::to_string(missing_pred.size()) +
                                    " reference episode(s) without a prediction: " + ids);
  }
  if (extra_pred) notes.push_back("ignored " + std::to_string(extra_pred) + " prediction(s) without a reference");
  for (const auto& n : notes) std::cerr << "warning: " << n << "\n";
  if (evals.empty()) throw DataError("no episode appears in both predictions and references");

  auto report = summarize(k, std::move(evals));
  report.notes = notes;
  json j = to_json(report);
  j["k_source"] = k_source;
  j["run"] = provenance(c);
  const auto out = prepare_output(c, "eval_report.json");
  write_json(out, j);

  std::cout << "k = " << k << " (" << k_source << "), " << report.episodes.size() << " episodes\n";
  std::printf("%-20s %8s %8s %8s\n", "metric", "mean", "std", "missing");
  for (const char* name : kEvalMetricNames) {
    const auto& s = report.aggregates.at(name);
    std::printf("%-20s %8s %8s %8zu\n", name, fmt(s.value).c_str(),
                s.value.count ? fmt(std::optional<double>(s.value.std)).c_str() : "-", s.missing);
  }
  std::cout << "report -> " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// retrieve-eval

int cmd_retrieve_eval(const CommonFlags& common, const RetrievalFlags& f) {
  RunConfig c = resolve_common(common);
  if (f.corpus) c.corpus = *f.corpus;
  if (f.queries) c.retrieval.queries = *f.queries;
  if (f.qrels) c.retrieval.qrels = *f.qrels;
  if (f.chapters) c.retrieval.chapters = *f.chapters;
  if (!f.variants.empty()) {
    c.retrieval.variants.clear();
    for (const auto& v : f.variants) c.retrieval.variants.push_back(parse_variant(v));
  }
  if (f.k1) c.retrieval.bm25.k1 = *f.k1;
  if (f.b) c.retrieval.bm25.b = *f.b;
  if (f.top_k) c.retrieval.top_k = *f.top_k;
  if (f.stem) c.retrieval.stem = true;
  validate(c);
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    return kExitOk;
  }

  auto corpus = load_corpus(require_path(c.corpus, "corpus"));
  const auto queries = load_queries(require_path(c.retrieval.queries, "queries"));
  const auto qrels = load_qrels(require_path(c.retrieval.qrels, "qrels"));
  std::size_t without_chapters = 0;
  if (c.retrieval.chapters) {
    // Generated chapters replace the reference ones; episodes without a
    // prediction contribute no chapter text.
    const auto predicted = load_predictions(*c.retrieval.chapters);
    for (auto& ep : corpus) {
      auto it = predicted.find(ep.id());
      if (it == predicted.end()) {
        ep.reference_chapters.reset();
        ++without_chapters;
      } else {
        ep.reference_chapters = it->second;
      }
    }
    if (without_chapters) std::cerr << "warning: " << without_chapters << " episode(s) have no predicted chapters\n";
  }

  const auto report = run_retrieval_eval(corpus, queries, qrels, c.retrieval.variants, c.retrieval.bm25,
                                         AnalyzerOptions{c.retrieval.stem}, c.retrieval.top_k);
  json j = to_json(report);
  json sizes = json::object();
  for (const auto& vr : report.variants) {
    sizes[std::string(to_string(vr.variant))] = {{"total_postings", vr.index.total_postings}, {"bytes", vr.index.bytes}};
  }
  j["index_size"] = sizes;
  j["episodes_without_chapters"] = without_chapters;
  j["run"] = provenance(c);
  const auto out = prepare_output(c, "retrieval_report.json");
  write_json(out, j);

  std::printf("%-12s", "variant");
  for (const char* m : kRetrievalMetricNames) std::printf(" %8s", m);
  std::printf(" %12s %12s\n", "postings", "bytes");
  for (const auto& vr : report.variants) {
    std::printf("%-12s", std::string(to_string(vr.variant)).c_str());
    for (std::size_t m = 0; m < kRetrievalMetrics; ++m) {
      std::string cell = fmt(vr.means[m]);
      if (vr.p_values[m] && *vr.p_values[m] < 0.05) cell += "*";
      std::printf(" %8s", cell.c_str());
    }
    std::printf(" %12zu %12zu\n", vr.index.total_postings, vr.index.bytes);
  }
  if (report.baseline) {
    std::cout << "* p < 0.05 (paired t-test against " << to_string(*report.baseline) << ")\n";
  }
  std::cout << report.variants.front().queries.size() << " queries evaluated, " << report.queries_without_relevant
            << " without relevant judgments; report -> " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats, filter, synth

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}, {"count", m.count}}; }

int cmd_stats(const CommonFlags& common, const CorpusFlag& f) {
  RunConfig c = resolve_common(common);
  if (f.corpus) c.corpus = *f.corpus;
  validate(c);
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    return kExitOk;
  }
  const auto corpus = load_corpus(require_path(c.corpus, "corpus"));
  const auto s = corpus_stats(corpus);
  const auto k = estimate_k(corpus);
  json j{{"episodes", s.n_episodes},
         {"chapters_per_episode", mean_std_json(s.chapters_per_episode)},
         {"segment_sentences", mean_std_json(s.segment_sentences)},
         {"title_words", mean_std_json(s.title_words)},
         {"document_words", mean_std_json(s.document_words)},
         {"k", k},
         {"run", provenance(c)}};
  write_json(prepare_output(c, "stats.json"), j);
  std::printf("episodes              %zu\n", s.n_episodes);
  std::printf("words / document      %.1f (sd %.1f)\n", s.document_words.mean, s.document_words.std);
  std::printf("chapters / episode    %.2f (sd %.2f)\n", s.chapters_per_episode.mean, s.chapters_per_episode.std);
  std::printf("sentences / chapter   %.2f (sd %.2f)\n", s.segment_sentences.mean, s.segment_sentences.std);
  std::printf("words / title         %.2f (sd %.2f)\n", s.title_words.mean, s.title_words.std);
  std::printf("window size k         %zu\n", k);
  return kExitOk;
}

int cmd_filter(const CommonFlags& common, const CorpusFlag& f) {
  RunConfig c = resolve_common(common);
  if (f.corpus) c.corpus = *f.corpus;
  validate(c);
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    return kExitOk;
  }
  const auto corpus = load_corpus(require_path(c.corpus, "corpus"));
  const auto run = run_info(c);
  std::ofstream kept(prepare_output(c, "filtered.jsonl"), std::ios::binary);
  json rejected = json::array();
  json notes = json::array();
  std::size_t n_kept = 0;
  for (const auto& ep : corpus) {
    const auto r = passes_filters(ep, c.filter);
    for (const auto& n : r.notes) notes.push_back({{"episode_id", ep.id()}, {"note", n}});
    if (r.passed) {
      auto line = to_json(ep);
      line["run"] = run;
      kept << line.dump() << '\n';
      ++n_kept;
    } else {
      rejected.push_back({{"episode_id", ep.id()}, {"violations", r.violations}});
    }
  }
  write_json(c.output_dir / "filter_report.json",
             {{"episodes", corpus.size()}, {"kept", n_kept}, {"rejected", rejected}, {"notes", notes},
              {"run", provenance(c)}});
  std::cout << "kept " << n_kept << "/" << corpus.size() << " episodes -> "
            << (c.output_dir / "filtered.jsonl").string() << "\n";
  for (const auto& r : rejected) {
    std::cout << "  rejected " << r["episode_id"].get<std::string>() << ": "
              << r["violations"][0].get<std::string>() << "\n";
  }
  return kExitOk;
}

/// Synthetic podcast corpus plus a small known-item retrieval set: each
/// query is one chapter title and the episode it came from is relevant.
int cmd_synth(const CommonFlags& common, const SynthFlags& f) {
  RunConfig c = resolve_common(common);
  if (common.dry_run) {
    std::cout << to_json(c).dump(2) << "\n";
    return kExitOk;
  }
  SyntheticProfile profile;
  profile.n_episodes = f.episodes;
  profile.seed = c.seed;
  const auto corpus = synthetic_podcast_corpus(profile);
  save_corpus(prepare_output(c, "corpus.jsonl"), corpus);

  SeededRng rng(c.seed);
  std::ofstream queries(c.output_dir / "queries.tsv", std::ios::binary);
  std::ofstream qrels(c.output_dir / "qrels.txt", std::ios::binary);
  for (std::size_t q = 0; q < f.queries && !corpus.empty(); ++q) {
    const auto& ep = corpus[rng.uniform(0, corpus.size() - 1)];
    const auto& chapters = *ep.reference_chapters;
    const auto& title = chapters[rng.uniform(0, chapters.size() - 1)].title;
    queries << "q" << q << '\t' << title << '\n';
    qrels << "q" << q << " 0 " << ep.id() << " 1\n";
  }
  std::cout << "wrote " << corpus.size() << " episodes and " << f.queries << " queries to " << c.output_dir.string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"podtile: chapterize, evaluate and index long transcripts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags common;
  ChapterizeFlags chap;
  EvaluateFlags eval;
  RetrievalFlags ret;
  CorpusFlag stats_flags, filter_flags;
  SynthFlags synth;

  auto* c = app.add_subcommand("chapterize", "Generate chapters for every episode of a corpus");
  add_common(c, common);
  c->add_option("--corpus", chap.corpus, "Corpus JSONL");
  c->add_option("--generator", chap.generator, "oracle | cohesion | remote");
  c->add_option("--endpoint", chap.endpoint, "Remote generator URL");
  c->add_option("--cassette", chap.cassette, "Record/replay file for remote calls");
  c->add_option("--cassette-mode", chap.cassette_mode, "record | replay");
  c->add_option("--blocklist", chap.blocklist, "Title blocklist file");
  c->add_flag("--no-static-context", chap.no_static, "Omit episode title and description");
  c->add_flag("--no-dynamic-context", chap.no_dynamic, "Omit titles of earlier chunks");

  auto* e = app.add_subcommand("evaluate", "Score predictions against reference chapters");
  add_common(e, common);
  e->add_option("--predictions", eval.predictions, "Predictions JSONL");
  e->add_option("--references", eval.references, "Reference corpus JSONL");
  e->add_option("--k", eval.k, "WindowDiff window size");
  e->add_option("--k-from", eval.k_from, "Corpus used to estimate k (default: references)");
  e->add_option("--embedder", eval.embedder, "hashed | service");

  auto* r = app.add_subcommand("retrieve-eval", "Compare BM25 index variants on judged queries");
  add_common(r, common);
  r->add_option("--corpus", ret.corpus, "Corpus JSONL");
  r->add_option("--queries", ret.queries, "Queries TSV");
  r->add_option("--qrels", ret.qrels, "TREC qrels");
  r->add_option("--chapters", ret.chapters, "Predictions JSONL replacing reference chapters");
  r->add_option("--variants", ret.variants, "Index variants")->delimiter(',');
  r->add_option("--k1", ret.k1, "BM25 k1");
  r->add_option("--b", ret.b, "BM25 b");
  r->add_option("--top-k", ret.top_k, "Ranking depth");
  r->add_flag("--stem", ret.stem, "Strip plural suffixes");

  auto* s = app.add_subcommand("stats", "Describe a corpus");
  add_common(s, common);
  s->add_option("--corpus", stats_flags.corpus, "Corpus JSONL");

  auto* fl = app.add_subcommand("filter", "Apply the dataset filters to a corpus");
  add_common(fl, common);
  fl->add_option("--corpus", filter_flags.corpus, "Corpus JSONL");

  auto* sy = app.add_subcommand("synth", "Write a synthetic corpus with queries and qrels");
  add_common(sy, common);
  sy->add_option("--episodes", synth.episodes, "Number of episodes")->check(CLI::PositiveNumber);
  sy->add_option("--queries", synth.queries, "Number of known-item queries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kExitOk : kExitError;
  }

  try {
    if (c->parsed()) return cmd_chapterize(common, chap);
    if (e->parsed()) return cmd_evaluate(common, eval);
    if (r->parsed()) return cmd_retrieve_eval(common, ret);
    if (s->parsed()) return cmd_stats(common, stats_flags);
    if (fl->parsed()) return cmd_filter(common, filter_flags);
    if (sy->parsed()) return cmd_synth(common, synth);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
