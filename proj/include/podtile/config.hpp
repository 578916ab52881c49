// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// Run configuration shared by the command-line tool. One JSON tree whose
/// keys mirror the structs below; every key is optional and unknown keys are
/// rejected. Command-line flags override values read from the file.
///
///   {
///     "corpus": "episodes.jsonl",
///     "references": "refs.jsonl", "predictions": "out/predictions.jsonl",
///     "output_dir": "out", "workers": 4, "seed": 2024,
///     "generator": {"type": "oracle" | "cohesion" | "remote",
///                   "cohesion": {...}, "remote": {...}},
///     "pipeline": {"total_words": 8000, "context_words": 1000,
///                  "static_context": true, "dynamic_context": true, "blocklist": null},
///     "eval": {"k": null, "k_from": null, "embedder": {...}},
///     "retrieval": {"queries": ..., "qrels": ..., "chapters": null, "variants": [...],
///                   "k1": 0.9, "b": 0.4, "stem": false, "top_k": 1000},
///     "filter": {"min_chapter_seconds": 30, "max_chapter_seconds": 1800, "max_title_words": 15}
///   }

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "podtile/corpus.hpp"
#include "podtile/embedder.hpp"
#include "podtile/error.hpp"
#include "podtile/generate.hpp"
#include "podtile/pipeline.hpp"
#include "podtile/remote.hpp"
#include "podtile/retrieval.hpp"
#include "podtile/version.hpp"

namespace podtile {

enum class GeneratorKind { kOracle, kCohesion, kRemote };

struct CohesionConfig {
  CohesionParams params;
  std::size_t title_words = 6;
};

struct RemoteRunConfig {
  RemoteConfig client;
  std::optional<std::filesystem::path> cassette;
  bool cassette_record = false;  // false: replay only
};

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::kCohesion;
  CohesionConfig cohesion;
  RemoteRunConfig remote;
};

struct EmbedderConfig {
  std::string type = "hashed";  // hashed | service
  std::size_t dimension = 256;
  std::string endpoint;
  std::string model;
  double timeout_s = 30.0;
};

struct EvalConfig {
  std::optional<std::size_t> k;
  std::optional<std::filesystem::path> k_from;
  EmbedderConfig embedder;
};

struct RetrievalConfig {
  std::optional<std::filesystem::path> queries;
  std::optional<std::filesystem::path> qrels;
  std::optional<std::filesystem::path> chapters;  // predictions JSONL replacing reference chapters
  std::vector<IndexVariant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  Bm25Params bm25;
  bool stem = false;
  std::size_t top_k = 1000;
};

struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> references;
  std::optional<std::filesystem::path> predictions;
  std::filesystem::path output_dir = "podtile-out";
  std::size_t workers = 1;
  std::uint64_t seed = 2024;
  GeneratorConfig generator;
  PipelineConfig pipeline;
  EvalConfig eval;
  RetrievalConfig retrieval;
  FilterConfig filter;
};

inline std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kOracle: return "oracle";
    case GeneratorKind::kCohesion: return "cohesion";
    case GeneratorKind::kRemote: return "remote";
  }
  return "?";
}

inline GeneratorKind parse_generator_kind(std::string_view name) {
  for (auto k : {GeneratorKind::kOracle, GeneratorKind::kCohesion, GeneratorKind::kRemote}) {
    if (to_string(k) == name) return k;
  }
  throw Error("unknown generator \"" + std::string(name) + "\" (expected oracle, cohesion or remote)");
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw Error("config: " + where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw Error("config: unknown key " + (where.empty() ? key : where + "." + key));
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error("config: " + (where.empty() ? std::string(key) : where + "." + key) + " has the wrong type");
  }
}

inline void read_path(const json& obj, const char* key, std::optional<std::filesystem::path>& out,
                      const std::string& where) {
  std::string s;
  read(obj, key, s, where);
  if (!s.empty()) out = s;
}

inline json path_json(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::read;
  using detail::read_path;
  RunConfig c;
  detail::reject_unknown(j, "", {"corpus", "references", "predictions", "output_dir", "workers", "seed", "generator",
                                 "pipeline", "eval", "retrieval", "filter"});
  read_path(j, "corpus", c.corpus, "");
  read_path(j, "references", c.references, "");
  read_path(j, "predictions", c.predictions, "");
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", out_dir, "");
  c.output_dir = out_dir;
  read(j, "workers", c.workers, "");
  read(j, "seed", c.seed, "");

  if (auto g = j.find("generator"); g != j.end()) {
    detail::reject_unknown(*g, "generator", {"type", "cohesion", "remote"});
    std::string type(to_string(c.generator.kind));
    read(*g, "type", type, "generator");
    c.generator.kind = parse_generator_kind(type);
    if (auto h = g->find("cohesion"); h != g->end()) {
      detail::reject_unknown(*h, "generator.cohesion",
                             {"block_size", "smoothing_width", "boundary_depth_cutoff", "min_segment_sentences",
                              "title_words"});
      auto& p = c.generator.cohesion.params;
      read(*h, "block_size", p.block_size, "generator.cohesion");
      read(*h, "smoothing_width", p.smoothing_width, "generator.cohesion");
      read(*h, "boundary_depth_cutoff", p.boundary_depth_cutoff, "generator.cohesion");
      read(*h, "min_segment_sentences", p.min_segment_sentences, "generator.cohesion");
      read(*h, "title_words", c.generator.cohesion.title_words, "generator.cohesion");
    }
    if (auto r = g->find("remote"); r != g->end()) {
      const std::string w = "generator.remote";
      detail::reject_unknown(*r, w,
                             {"endpoint", "auth_token_env", "timeout_s", "max_concurrent", "model", "instruction",
                              "max_attempts", "backoff_base_s", "cassette", "cassette_mode"});
      auto& rc = c.generator.remote.client;
      read(*r, "endpoint", rc.endpoint, w);
      read(*r, "auth_token_env", rc.auth_token_env, w);
      read(*r, "timeout_s", rc.timeout_s, w);
      read(*r, "max_concurrent", rc.max_concurrent, w);
      read(*r, "model", rc.model, w);
      read(*r, "instruction", rc.instruction, w);
      read(*r, "max_attempts", rc.max_attempts, w);
      read(*r, "backoff_base_s", rc.backoff_base_s, w);
      read_path(*r, "cassette", c.generator.remote.cassette, w);
      std::string mode = "replay";
      read(*r, "cassette_mode", mode, w);
      if (mode != "replay" && mode != "record") throw Error("config: generator.remote.cassette_mode must be record or replay");
      c.generator.remote.cassette_record = mode == "record";
    }
  }

  if (auto p = j.find("pipeline"); p != j.end()) {
    detail::reject_unknown(*p, "pipeline",
                           {"total_words", "context_words", "static_context", "dynamic_context", "blocklist"});
    read(*p, "total_words", c.pipeline.budget.total_words, "pipeline");
    read(*p, "context_words", c.pipeline.budget.context_words, "pipeline");
    read(*p, "static_context", c.pipeline.use_static_context, "pipeline");
    read(*p, "dynamic_context", c.pipeline.use_dynamic_context, "pipeline");
    read_path(*p, "blocklist", c.pipeline.blocklist_path, "pipeline");
  }

  if (auto e = j.find("eval"); e != j.end()) {
    detail::reject_unknown(*e, "eval", {"k", "k_from", "embedder"});
    std::size_t k = 0;
    read(*e, "k", k, "eval");
    if (k) c.eval.k = k;
    read_path(*e, "k_from", c.eval.k_from, "eval");
    if (auto m = e->find("embedder"); m != e->end()) {
      detail::reject_unknown(*m, "eval.embedder", {"type", "dimension", "endpoint", "model", "timeout_s"});
      read(*m, "type", c.eval.embedder.type, "eval.embedder");
      read(*m, "dimension", c.eval.embedder.dimension, "eval.embedder");
      read(*m, "endpoint", c.eval.embedder.endpoint, "eval.embedder");
      read(*m, "model", c.eval.embedder.model, "eval.embedder");
      read(*m, "timeout_s", c.eval.embedder.timeout_s, "eval.embedder");
    }
  }

  if (auto r = j.find("retrieval"); r != j.end()) {
    detail::reject_unknown(*r, "retrieval",
                           {"queries", "qrels", "chapters", "variants", "k1", "b", "stem", "top_k"});
    read_path(*r, "queries", c.retrieval.queries, "retrieval");
    read_path(*r, "qrels", c.retrieval.qrels, "retrieval");
    read_path(*r, "chapters", c.retrieval.chapters, "retrieval");
    std::vector<std::string> names;
    read(*r, "variants", names, "retrieval");
    if (!names.empty()) {
      c.retrieval.variants.clear();
      for (const auto& n : names) c.retrieval.variants.push_back(parse_variant(n));
    }
    read(*r, "k1", c.retrieval.bm25.k1, "retrieval");
    read(*r, "b", c.retrieval.bm25.b, "retrieval");
    read(*r, "stem", c.retrieval.stem, "retrieval");
    read(*r, "top_k", c.retrieval.top_k, "retrieval");
  }

  if (auto f = j.find("filter"); f != j.end()) {
    detail::reject_unknown(*f, "filter", {"min_chapter_seconds", "max_chapter_seconds", "max_title_words"});
    read(*f, "min_chapter_seconds", c.filter.min_chapter_seconds, "filter");
    read(*f, "max_chapter_seconds", c.filter.max_chapter_seconds, "filter");
    read(*f, "max_title_words", c.filter.max_title_words, "filter");
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// The resolved configuration, as embedded in every output file. The auth
/// token itself is never included, only the name of its variable.
inline nlohmann::json to_json(const RunConfig& c) {
  using detail::path_json;
  using nlohmann::json;
  const auto& p = c.generator.cohesion.params;
  const auto& rc = c.generator.remote.client;
  json variants = json::array();
  for (auto v : c.retrieval.variants) variants.push_back(std::string(to_string(v)));
  return {
      {"corpus", path_json(c.corpus)},
      {"references", path_json(c.references)},
      {"predictions", path_json(c.predictions)},
      {"output_dir", c.output_dir.string()},
      {"workers", c.workers},
      {"seed", c.seed},
      {"generator",
       {{"type", std::string(to_string(c.generator.kind))},
        {"cohesion",
         {{"block_size", p.block_size},
          {"smoothing_width", p.smoothing_width},
          {"boundary_depth_cutoff", p.boundary_depth_cutoff},
          {"min_segment_sentences", p.min_segment_sentences},
          {"title_words", c.generator.cohesion.title_words}}},
        {"remote",
         {{"endpoint", rc.endpoint},
          {"auth_token_env", rc.auth_token_env},
          {"timeout_s", rc.timeout_s},
          {"max_concurrent", rc.max_concurrent},
          {"model", rc.model},
          {"instruction", rc.instruction},
          {"max_attempts", rc.max_attempts},
          {"backoff_base_s", rc.backoff_base_s},
          {"cassette", path_json(c.generator.remote.cassette)},
          {"cassette_mode", c.generator.remote.cassette_record ? "record" : "replay"}}}}},
      {"pipeline",
       {{"total_words", c.pipeline.budget.total_words},
        {"context_words", c.pipeline.budget.context_words},
        {"static_context", c.pipeline.use_static_context},
        {"dynamic_context", c.pipeline.use_dynamic_context},
        {"blocklist", path_json(c.pipeline.blocklist_path)}}},
      {"eval",
       {{"k", c.eval.k ? json(*c.eval.k) : json(nullptr)},
        {"k_from", path_json(c.eval.k_from)},
        {"embedder",
         {{"type", c.eval.embedder.type},
          {"dimension", c.eval.embedder.dimension},
          {"endpoint", c.eval.embedder.endpoint},
          {"model", c.eval.embedder.model},
          {"timeout_s", c.eval.embedder.timeout_s}}}}},
      {"retrieval",
       {{"queries", path_json(c.retrieval.queries)},
        {"qrels", path_json(c.retrieval.qrels)},
        {"chapters", path_json(c.retrieval.chapters)},
        {"variants", variants},
        {"k1", c.retrieval.bm25.k1},
        {"b", c.retrieval.bm25.b},
        {"stem", c.retrieval.stem},
        {"top_k", c.retrieval.top_k}}},
      {"filter",
       {{"min_chapter_seconds", c.filter.min_chapter_seconds},
        {"max_chapter_seconds", c.filter.max_chapter_seconds},
        {"max_title_words", c.filter.max_title_words}}},
  };
}

/// Checks value ranges and that every referenced input path exists.
inline void validate(const RunConfig& c) {
  auto must_exist = [](const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::exists(*p)) throw Error(std::string(what) + " not found: " + p->string());
  };
  must_exist(c.corpus, "corpus");
  must_exist(c.references, "references");
  must_exist(c.predictions, "predictions");
  must_exist(c.pipeline.blocklist_path, "blocklist");
  must_exist(c.eval.k_from, "k_from corpus");
  must_exist(c.retrieval.queries, "queries");
  must_exist(c.retrieval.qrels, "qrels");
  must_exist(c.retrieval.chapters, "chapters");
  if (c.generator.kind == GeneratorKind::kRemote && !c.generator.remote.cassette_record) {
    must_exist(c.generator.remote.cassette, "cassette");
  }
  if (c.workers == 0) throw Error("config: workers must be positive");
  if (c.eval.k && *c.eval.k == 0) throw Error("config: eval.k must be positive");
  c.pipeline.budget.validate();
  c.generator.cohesion.params.validate();
  c.retrieval.bm25.validate();
  if (c.retrieval.variants.empty()) throw Error("config: retrieval.variants is empty");
  if (c.eval.embedder.type != "hashed" && c.eval.embedder.type != "service") {
    throw Error("config: eval.embedder.type must be hashed or service");
  }
  if (c.eval.embedder.type == "service" && c.eval.embedder.endpoint.empty()) {
    throw Error("config: eval.embedder.endpoint is required for the service embedder");
  }
  if (c.generator.kind == GeneratorKind::kRemote && c.generator.remote.client.endpoint.empty() &&
      !(c.generator.remote.cassette && !c.generator.remote.cassette_record)) {
    throw Error("config: generator.remote.endpoint is required");
  }
  if (c.filter.min_chapter_seconds > c.filter.max_chapter_seconds) {
    throw Error("config: filter.min_chapter_seconds exceeds max_chapter_seconds");
  }
}

/// Hash of everything that can change results. The output directory and
/// worker count are left out so identical runs hash identically.
inline std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace podtile
