// embedding.hpp - sentence-embedding providers and cosine similarity matrices.
//
// Scoring never depends on a particular embedding backend: providers are
// interchangeable behind EmbeddingProvider. The hashed n-gram provider is the
// hermetic offline substitute for a served sentence-embedding model; the
// precomputed-file and remote-service providers live in providers.hpp and
// remote.hpp.
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ovre/errors.hpp"
#include "ovre/triplet.hpp"

namespace ovre {

using EmbeddingVector = std::vector<double>;

/// Deterministic text-to-vector backend. Implementations must be safely
/// shareable across concurrent scoring workers and must return one vector of
/// the declared dimension per input text, order-preserving.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) = 0;
};

/// Rectangular matrix of cosine similarities: rows index predicted triplets,
/// columns index ground-truth triplets. Entries lie in [-1, 1] up to 1e-9.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

// 64-bit FNV-1a, seed-folded. Shared by the hashed provider and config
// digests; not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0) {
  std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9E3779B97F4A7C15ull);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kHashedEmbedSeed = 0x4f565245ull;  // "OVRE"

}  // namespace detail

/// Hash character 3-grams and word unigrams of `text` into `dim` signed
/// buckets with a fixed seed, then L2-normalize. The empty string (and any
/// zero accumulation) maps to the first unit basis vector so that downstream
/// cosines stay defined.
inline EmbeddingVector hashed_ngram_embed(const std::string& text, std::size_t dim) {
  if (dim < 8) throw std::invalid_argument("hashed_ngram_embed: dim must be >= 8");
  EmbeddingVector v(dim, 0.0);
  auto bump = [&](std::string_view feature, std::uint64_t klass) {
    std::uint64_t h = detail::fnv1a64(feature, detail::kHashedEmbedSeed + klass);
    std::size_t bucket = static_cast<std::size_t>((h >> 1) % dim);
    v[bucket] += (h & 1) ? 1.0 : -1.0;
  };
  if (!text.empty()) {
    if (text.size() < 3) {
      bump(text, 1);
    } else {
      for (std::size_t i = 0; i + 3 <= text.size(); ++i)
        bump(std::string_view(text).substr(i, 3), 1);
    }
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == ' ') {
        if (i > start) bump(std::string_view(text).substr(start, i - start), 2);
        start = i + 1;
      }
    }
  }
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq < 1e-24) {
    v.assign(dim, 0.0);
    v[0] = 1.0;
    return v;
  }
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

/// dot(a,b) / (|a||b|); zero whenever either norm vanishes, so degenerate
/// vectors never poison the assignment solver with NaN.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size())
    throw DimensionMismatch("cosine_similarity: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double norm_a = std::sqrt(na), norm_b = std::sqrt(nb);
  if (norm_a < 1e-12 || norm_b < 1e-12) return 0.0;
  return dot / (norm_a * norm_b);
}

class HashedProvider final : public EmbeddingProvider {
 public:
  explicit HashedProvider(std::size_t dim = 256) : dim_(dim) {
    if (dim < 8) throw std::invalid_argument("HashedProvider: dim must be >= 8");
  }
  std::string kind() const override { return "hashed-fallback"; }
  std::size_t dimension() const override { return dim_; }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(hashed_ngram_embed(t, dim_));
    return out;
  }

 private:
  std::size_t dim_;
};

/// Thread-safe memoizing wrapper keyed on the exact post-normalization
/// sentence string. Values are deterministic per provider session, so
/// concurrent recomputation races are benign.
class CachingProvider final : public EmbeddingProvider {
 public:
  explicit CachingProvider(std::shared_ptr<EmbeddingProvider> inner)
      : inner_(std::move(inner)) {}

  std::string kind() const override { return inner_->kind(); }
  std::size_t dimension() const override { return inner_->dimension(); }

  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    {
      std::shared_lock lock(mutex_);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        auto it = cache_.find(texts[i]);
        if (it != cache_.end())
          out[i] = it->second;
        else
          missing.push_back(i);
      }
    }
    if (!missing.empty()) {
      std::vector<std::string> batch;
      batch.reserve(missing.size());
      for (std::size_t i : missing) batch.push_back(texts[i]);
      std::vector<EmbeddingVector> fresh = inner_->embed_batch(batch);
      std::unique_lock lock(mutex_);
      for (std::size_t k = 0; k < missing.size(); ++k) {
        cache_[texts[missing[k]]] = fresh[k];
        out[missing[k]] = std::move(fresh[k]);
      }
    }
    return out;
  }

  std::size_t cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
};

/// One vector per text, order-preserving. Verifies the provider honors its
/// declared dimension and returns only finite entries.
inline std::vector<EmbeddingVector> embed_batch(
    const std::vector<std::string>& texts, EmbeddingProvider& provider) {
  if (texts.empty()) return {};
  std::vector<EmbeddingVector> vectors = provider.embed_batch(texts);
  if (vectors.size() != texts.size())
    throw DimensionMismatch("provider returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(texts.size()) + " texts");
  for (const EmbeddingVector& v : vectors) {
    if (v.size() != provider.dimension())
      throw DimensionMismatch("vector length " + std::to_string(v.size()) +
                              " != declared dimension " +
                              std::to_string(provider.dimension()));
    for (double x : v)
      if (!std::isfinite(x)) throw NonFiniteEntry("embedding contains a non-finite value");
  }
  return vectors;
}

/// S_ij = cosine(embed(pred_texts[i]), embed(gt_texts[j])). Each unique text
/// is embedded exactly once per call; either side may be empty.
inline SimilarityMatrix build_similarity_matrix(const std::vector<std::string>& pred_texts,
                                                const std::vector<std::string>& gt_texts,
                                                EmbeddingProvider& provider) {
  SimilarityMatrix S(pred_texts.size(), gt_texts.size());
  if (S.empty()) return S;

  std::vector<std::string> unique_texts;
  std::unordered_map<std::string, std::size_t> index;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = index.try_emplace(s, unique_texts.size());
    if (fresh) unique_texts.push_back(it->first);
    return it->second;
  };
  std::vector<std::size_t> pred_idx, gt_idx;
  pred_idx.reserve(pred_texts.size());
  gt_idx.reserve(gt_texts.size());
  for (const std::string& s : pred_texts) pred_idx.push_back(intern(s));
  for (const std::string& s : gt_texts) gt_idx.push_back(intern(s));

  const std::vector<EmbeddingVector> vecs = embed_batch(unique_texts, provider);
  for (std::size_t i = 0; i < pred_texts.size(); ++i)
    for (std::size_t j = 0; j < gt_texts.size(); ++j)
      S.at(i, j) = cosine_similarity(vecs[pred_idx[i]], vecs[gt_idx[j]]);
  return S;
}

/// Triplet convenience overload: embeds the canonical sentence form.
inline SimilarityMatrix build_similarity_matrix(const std::vector<Triplet>& preds,
                                                const std::vector<Triplet>& gts,
                                                EmbeddingProvider& provider) {
  std::vector<std::string> pred_texts, gt_texts;
  pred_texts.reserve(preds.size());
  gt_texts.reserve(gts.size());
  for (const Triplet& t : preds) pred_texts.push_back(triplet_to_sentence(t));
  for (const Triplet& t : gts) gt_texts.push_back(triplet_to_sentence(t));
  return build_similarity_matrix(pred_texts, gt_texts, provider);
}

}  // namespace ovre
