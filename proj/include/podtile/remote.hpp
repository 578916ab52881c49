// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

/// HTTP/JSON generator client plus a record/replay cassette transport.
///
/// Request (POST <endpoint>, Content-Type: application/json):
///   {"model": str, "instruction": str, "input": str, "valid_range": [first, last]}
/// Response (HTTP 200):
///   [{"start_sentence_id": int, "title": str}, ...]
/// The response is converted to the chapter grammar before parsing.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "podtile/error.hpp"
#include "podtile/generate.hpp"
#include "podtile/promptfmt.hpp"

namespace podtile {

inline constexpr std::string_view kDefaultInstruction =
    "Split the transcript below into chapters. Each transcript line starts with a sentence id "
    "followed by a colon. Return only a JSON array of objects with the fields "
    "\"start_sentence_id\" (integer id of the first sentence of the chapter) and \"title\" "
    "(a short chapter title), ordered by start_sentence_id. Return [] if the text contains no "
    "chapter start.";

struct RemoteConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chapterize
  std::string auth_token_env;
  double timeout_s = 60.0;
  std::size_t max_concurrent = 4;
  std::string model;
  std::string instruction = std::string(kDefaultInstruction);
  std::size_t max_attempts = 3;
  double backoff_base_s = 1.0;
};

struct HttpResult {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws RetryableError when no response was received.
  virtual HttpResult post(const std::string& body) = 0;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("invalid endpoint URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const RemoteConfig& config) : config_(config), url_(parse_url(config.endpoint)) {
    if (url_.origin.rfind("http://", 0) != 0) {
      throw Error("only plain http:// endpoints are supported: " + config.endpoint);
    }
  }

  HttpResult post(const std::string& body) override {
    httplib::Client client(url_.origin);
    const auto secs = std::chrono::duration<double>(config_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    httplib::Headers headers;
    if (!config_.auth_token_env.empty()) {
      if (const char* token = std::getenv(config_.auth_token_env.c_str()); token && *token) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }
    auto res = client.Post(url_.path, headers, body, "application/json");
    if (!res) throw RetryableError("HTTP request failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  RemoteConfig config_;
  ParsedUrl url_;
};

/// Records request/response pairs to a JSON file, or replays them without
/// touching the network. Requests are matched on their exact body.
class CassetteTransport final : public Transport {
 public:
  enum class Mode { kRecord, kReplay };

  CassetteTransport(std::filesystem::path path, Mode mode, std::unique_ptr<Transport> inner = nullptr)
      : path_(std::move(path)), mode_(mode), inner_(std::move(inner)) {
    if (mode_ == Mode::kRecord && !inner_) throw Error("cassette recording needs an inner transport");
    if (std::filesystem::exists(path_)) load();
    else if (mode_ == Mode::kReplay) throw Error("cassette file not found: " + path_.string());
  }

  HttpResult post(const std::string& body) override {
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(body); it != entries_.end()) return it->second;
    }
    if (mode_ == Mode::kReplay) throw Error("cassette " + path_.string() + " has no recorded response for this request");
    HttpResult result = inner_->post(body);
    std::lock_guard lock(mutex_);
    entries_.emplace(body, result);
    save();
    return result;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  void load() {
    std::ifstream in(path_);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("cassette " + path_.string() + ": " + e.what());
    }
    for (const auto& item : j.value("interactions", nlohmann::json::array())) {
      entries_[item.at("request").get<std::string>()] =
          HttpResult{item.at("status").get<int>(), item.at("response").get<std::string>()};
    }
  }

  void save() const {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [request, result] : entries_) {
      items.push_back({{"request", request}, {"status", result.status}, {"response", result.body}});
    }
    std::ofstream out(path_, std::ios::binary);
    out << nlohmann::json{{"interactions", items}}.dump(2) << '\n';
  }

  std::filesystem::path path_;
  Mode mode_;
  std::unique_ptr<Transport> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, HttpResult> entries_;
};

/// Converts the JSON response to the chapter grammar. An empty array maps to
/// the sentinel. Anything that is not an array of usable entries maps to the
/// empty string, which parse_output reports as one unparseable fragment.
inline std::string convert_remote_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_array()) return {};
  if (j.empty()) return std::string(kNoBoundariesSentinel);
  std::vector<Chapter> chapters;
  for (const auto& item : j) {
    if (!item.is_object()) continue;
    auto id = item.find("start_sentence_id");
    auto title = item.find("title");
    if (id == item.end() || title == item.end() || !id->is_number_integer() || !title->is_string()) continue;
    if (id->get<std::int64_t>() < 0) continue;
    std::string t = sanitize_title(title->get<std::string>());
    if (t.empty()) continue;
    chapters.push_back({id->get<std::size_t>(), std::move(t)});
  }
  if (chapters.empty()) return {};
  std::stable_sort(chapters.begin(), chapters.end(),
                   [](const Chapter& a, const Chapter& b) { return a.start_index < b.start_index; });
  chapters.erase(std::unique(chapters.begin(), chapters.end(),
                             [](const Chapter& a, const Chapter& b) { return a.start_index == b.start_index; }),
                 chapters.end());
  return render_target(chapters);
}

inline std::string remote_request_body(const GeneratorRequest& request, const RemoteConfig& config) {
  nlohmann::json j;
  j["model"] = config.model;
  j["instruction"] = config.instruction;
  j["input"] = request.input_text;
  j["valid_range"] = {request.valid_range.first, request.valid_range.last};
  return j.dump();
}

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteConfig config, std::unique_ptr<Transport> transport = nullptr)
      : config_(std::move(config)),
        transport_(transport ? std::move(transport) : std::make_unique<HttpTransport>(config_)),
        slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrent, 1, kMaxSlots))) {}

  std::string generate(const GeneratorRequest& request) override {
    const std::string body = remote_request_body(request, config_);
    std::string last_error;
    const std::size_t attempts = std::max<std::size_t>(config_.max_attempts, 1);
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        const double wait = config_.backoff_base_s * static_cast<double>(1u << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
      try {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<kMaxSlots>& s;
          ~Release() { s.release(); }
        } release{slots_};
        const HttpResult result = transport_->post(body);
        if (result.status == 200) return convert_remote_response(result.body);
        last_error = "HTTP status " + std::to_string(result.status);
      } catch (const RetryableError& e) {
        last_error = e.what();
      }
    }
    throw RetryableError("remote generator failed after " + std::to_string(attempts) +
                         " attempts: " + last_error);
  }

 private:
  static constexpr std::ptrdiff_t kMaxSlots = 1024;

  RemoteConfig config_;
  std::unique_ptr<Transport> transport_;
  std::counting_semaphore<kMaxSlots> slots_;
};

}  // namespace podtile
