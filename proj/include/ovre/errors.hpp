// errors.hpp - exception hierarchy shared by all ovre components.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ovre {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A token to be serialized contains (or equals) an active delimiter.
struct DelimiterCollision : Error {
  explicit DelimiterCollision(const std::string& msg) : Error(msg) {}
};

/// Strict-mode parse failure. Carries the zero-based segment index.
struct MalformedSegment : Error {
  MalformedSegment(std::size_t index, const std::string& reason)
      : Error("segment " + std::to_string(index) + ": " + reason),
        segment_index(index) {}
  std::size_t segment_index;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

/// Remote embedding service unreachable after the configured retries.
struct ProviderUnavailable : Error {
  explicit ProviderUnavailable(const std::string& msg) : Error(msg) {}
};

/// A precomputed embedding file has no vector for a requested text.
struct MissingEmbedding : Error {
  explicit MissingEmbedding(const std::string& msg) : Error(msg) {}
};

struct NonFiniteEntry : Error {
  explicit NonFiniteEntry(const std::string& msg) : Error(msg) {}
};

/// Brute-force assignment guard: min(rows, cols) exceeds the factorial cap.
struct InstanceTooLarge : Error {
  explicit InstanceTooLarge(const std::string& msg) : Error(msg) {}
};

struct EmptyCorpus : Error {
  explicit EmptyCorpus(const std::string& msg) : Error(msg) {}
};

struct VideoIdMismatch : Error {
  explicit VideoIdMismatch(const std::string& msg) : Error(msg) {}
};

struct EmptyGroundTruth : Error {
  explicit EmptyGroundTruth(const std::string& msg) : Error(msg) {}
};

struct DuplicateVideoId : Error {
  explicit DuplicateVideoId(const std::string& msg) : Error(msg) {}
};

/// A predicted video id has no ground-truth counterpart.
struct UnknownVideoId : Error {
  explicit UnknownVideoId(const std::string& msg) : Error(msg) {}
};

struct FileUnreadable : Error {
  explicit FileUnreadable(const std::string& msg) : Error(msg) {}
};

/// Annotation or prediction file violates the wire schema.
struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

}  // namespace ovre
