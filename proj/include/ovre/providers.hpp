// providers.hpp - embedding providers backed by files, plus provider specs.
#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ovre/embedding.hpp"
#include "ovre/errors.hpp"
#include "ovre/remote.hpp"

namespace ovre {

/// Read-only provider over a JSON Lines file of {"text": ..., "vector": [...]}
/// objects. All vectors must share one length; duplicate texts are accepted
/// only when their vectors agree. Any text absent from the file raises
/// MissingEmbedding at lookup time.
class PrecomputedProvider final : public EmbeddingProvider {
 public:
  explicit PrecomputedProvider(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileUnreadable("cannot open embedding file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      if (!obj.is_object() || !obj.contains("text") || !obj.contains("vector") ||
          !obj["text"].is_string() || !obj["vector"].is_array())
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": expected {\"text\": str, \"vector\": [num,...]}");
      std::string text = obj["text"].get<std::string>();
      EmbeddingVector vec;
      vec.reserve(obj["vector"].size());
      for (const auto& x : obj["vector"]) {
        if (!x.is_number())
          throw SchemaError(path + ":" + std::to_string(lineno) + ": non-numeric vector entry");
        vec.push_back(x.get<double>());
      }
      for (double x : vec)
        if (!std::isfinite(x))
          throw NonFiniteEntry(path + ":" + std::to_string(lineno) + ": non-finite vector entry");
      if (dim_ == 0) dim_ = vec.size();
      if (vec.size() != dim_)
        throw DimensionMismatch(path + ":" + std::to_string(lineno) + ": vector length " +
                                std::to_string(vec.size()) + " != " + std::to_string(dim_));
      auto it = table_.find(text);
      if (it != table_.end()) {
        if (it->second != vec)
          throw SchemaError(path + ":" + std::to_string(lineno) +
                            ": duplicate text with differing vector: '" + text + "'");
        continue;
      }
      table_.emplace(std::move(text), std::move(vec));
    }
    if (table_.empty()) throw SchemaError(path + ": no embeddings found");
  }

  std::string kind() const override { return "precomputed-file"; }
  std::size_t dimension() const override { return dim_; }

  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) {
      auto it = table_.find(t);
      if (it == table_.end())
        throw MissingEmbedding("no precomputed vector for text: '" + t + "'");
      out.push_back(it->second);
    }
    return out;
  }

  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, EmbeddingVector> table_;
};

/// Declarative description of a provider, resolvable to a live instance.
/// Kept separate from the instances so configs stay copyable and printable.
struct ProviderSpec {
  std::string kind = "hashed-fallback";  // hashed-fallback | precomputed-file | remote-service
  std::size_t dimension = 256;           // hashed provider only
  std::string path;                      // precomputed-file
  std::string endpoint;                  // remote-service
  int retries = 3;
  int backoff_ms = 100;
};

inline std::shared_ptr<EmbeddingProvider> resolve_provider(const ProviderSpec& spec) {
  if (spec.kind == "hashed-fallback")
    return std::make_shared<HashedProvider>(spec.dimension);
  if (spec.kind == "precomputed-file") {
    if (spec.path.empty())
      throw std::invalid_argument("precomputed-file provider requires a path");
    return std::make_shared<PrecomputedProvider>(spec.path);
  }
  if (spec.kind == "remote-service") {
    if (spec.endpoint.empty())
      throw std::invalid_argument("remote-service provider requires an endpoint");
    return make_remote_provider(spec.endpoint, spec.retries, spec.backoff_ms);
  }
  throw std::invalid_argument("unknown provider kind: " + spec.kind);
}

}  // namespace ovre
