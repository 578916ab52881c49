// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "podtile/error.hpp"
#include "podtile/remote.hpp"
#include "podtile/text.hpp"

namespace podtile {

/// Title embedding backend. embed() must be deterministic and return a
/// unit-norm vector of dimension().
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view title) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Cosine of two unit vectors, clamped to [0, 1]. Identical vectors give
/// exactly 1.
inline double unit_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("unit_cosine: dimension mismatch");
  if (a == b) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, 0.0, 1.0);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Bag of analyzed tokens hashed into a fixed number of non-negative
/// buckets, L2-normalized. A title without tokens maps to a fixed basis
/// vector.
class HashedBowEmbedder final : public Embedder {
 public:
  explicit HashedBowEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0x5eed)
      : dim_(dimension), seed_(fnv1a64(std::to_string(seed))) {
    if (dim_ == 0) throw Error("HashedBowEmbedder: dimension must be positive");
  }

  std::size_t bucket(std::string_view token) const { return fnv1a64(token, seed_) % dim_; }

  std::vector<double> embed(std::string_view title) const override {
    std::vector<double> v(dim_, 0.0);
    const auto tokens = analyze(title);
    if (tokens.empty()) {
      v[bucket("")] = 1.0;
      return v;
    }
    for (const auto& t : tokens) v[bucket(t)] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  }

  std::size_t dimension() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Adapter for an external embedding service.
///   POST <endpoint> {"model": str, "texts": [str]}  ->  {"embeddings": [[float, ...]]}
/// Vectors are re-normalized and cached per title.
class ServiceEmbedder final : public Embedder {
 public:
  ServiceEmbedder(std::string endpoint, std::size_t dimension, std::string model = {},
                  double timeout_s = 30.0)
      : url_(parse_url(endpoint)), dim_(dimension), model_(std::move(model)), timeout_s_(timeout_s) {}

  std::vector<double> embed(std::string_view title) const override {
    const std::string key(title);
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    httplib::Client client(url_.origin);
    const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s_));
    client.set_connection_timeout(t);
    client.set_read_timeout(t);
    const nlohmann::json body{{"model", model_}, {"texts", {key}}};
    auto res = client.Post(url_.path, body.dump(), "application/json");
    if (!res) throw RetryableError("embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw RetryableError("embedding service HTTP status " + std::to_string(res->status));
    std::vector<double> v;
    try {
      v = nlohmann::json::parse(res->body).at("embeddings").at(0).get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed embedding response: ") + e.what());
    }
    if (v.size() != dim_) throw DataError("embedding service returned dimension " + std::to_string(v.size()));
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) throw DataError("embedding service returned a zero vector");
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    std::lock_guard lock(mutex_);
    cache_.emplace(key, v);
    return v;
  }

  std::size_t dimension() const override { return dim_; }

 private:
  ParsedUrl url_;
  std::size_t dim_;
  std::string model_;
  double timeout_s_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

}  // namespace podtile
