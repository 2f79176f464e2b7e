// remote.hpp - HTTP client for a served sentence-embedding model.
//
// Protocol: POST /embed with {"texts": [str, ...]} returns
// {"vectors": [[num, ...], ...], "dimension": int}. Anything else (non-200,
// malformed body, transport failure) counts as a failed attempt; after the
// configured number of attempts the provider raises ProviderUnavailable.
#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ovre/embedding.hpp"
#include "ovre/errors.hpp"

namespace ovre {

class RemoteProvider final : public EmbeddingProvider {
 public:
  RemoteProvider(std::string endpoint, int retries = 3, int backoff_ms = 100)
      : endpoint_(std::move(endpoint)), retries_(retries), backoff_ms_(backoff_ms) {
    if (retries_ < 1) throw std::invalid_argument("retries must be >= 1");
  }

  std::string kind() const override { return "remote-service"; }

  /// Pinned by the first successful response; 0 until then.
  std::size_t dimension() const override { return dim_.load(); }

  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    if (texts.empty()) return {};
    nlohmann::json body;
    body["texts"] = texts;
    const std::string payload = body.dump();

    // One request in flight at a time; workers queue here rather than
    // opening parallel connections to the service.
    std::lock_guard<std::mutex> lock(mutex_);
    // Once the retry budget is exhausted the session is dead: later batches
    // fail immediately instead of re-hammering the service per video.
    if (!dead_reason_.empty())
      throw ProviderUnavailable("embedding service at " + endpoint_ +
                                " marked unavailable: " + dead_reason_);
    std::string last_error;
    for (int attempt = 1; attempt <= retries_; ++attempt) {
      attempts_.fetch_add(1);
      httplib::Client client(endpoint_);
      client.set_connection_timeout(5, 0);
      client.set_read_timeout(30, 0);
      client.set_write_timeout(30, 0);
      httplib::Result res = client.Post("/embed", payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        std::vector<EmbeddingVector> vectors;
        if (parse_response(res->body, texts.size(), vectors, last_error))
          return vectors;
      }
      if (attempt < retries_) {
        auto delay = std::chrono::milliseconds(backoff_ms_ << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
    }
    dead_reason_ = last_error;
    throw ProviderUnavailable("embedding service at " + endpoint_ + " failed after " +
                              std::to_string(retries_) + " attempts: " + last_error);
  }

  /// Total request attempts made over the provider's lifetime.
  int attempts() const { return attempts_.load(); }

 private:
  bool parse_response(const std::string& body, std::size_t expected,
                      std::vector<EmbeddingVector>& out, std::string& error) {
    nlohmann::json obj = nlohmann::json::parse(body, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("vectors") ||
        !obj.contains("dimension") || !obj["vectors"].is_array() ||
        !obj["dimension"].is_number_integer()) {
      error = "malformed response body";
      return false;
    }
    const std::size_t dim = obj["dimension"].get<std::size_t>();
    if (obj["vectors"].size() != expected || dim == 0) {
      error = "response count or dimension mismatch";
      return false;
    }
    std::vector<EmbeddingVector> vectors;
    vectors.reserve(expected);
    for (const auto& row : obj["vectors"]) {
      if (!row.is_array() || row.size() != dim) {
        error = "ragged vector in response";
        return false;
      }
      EmbeddingVector v;
      v.reserve(dim);
      for (const auto& x : row) {
        if (!x.is_number()) {
          error = "non-numeric vector entry";
          return false;
        }
        v.push_back(x.get<double>());
      }
      vectors.push_back(std::move(v));
    }
    std::size_t pinned = 0;
    if (!dim_.compare_exchange_strong(pinned, dim) && pinned != dim)
      throw DimensionMismatch("service changed dimension mid-session: " +
                              std::to_string(pinned) + " -> " + std::to_string(dim));
    out = std::move(vectors);
    return true;
  }

  std::string endpoint_;
  int retries_;
  int backoff_ms_;
  std::mutex mutex_;
  std::string dead_reason_;  // guarded by mutex_
  std::atomic<std::size_t> dim_{0};
  std::atomic<int> attempts_{0};
};

inline std::shared_ptr<EmbeddingProvider> make_remote_provider(
    const std::string& endpoint, int retries, int backoff_ms) {
  return std::make_shared<RemoteProvider>(endpoint, retries, backoff_ms);
}

}  // namespace ovre
