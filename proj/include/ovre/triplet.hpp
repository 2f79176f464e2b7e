// triplet.hpp - relation-triplet data model and its token-sequence wire form.
//
// A triplet is <subject, predicate, object>, each a non-empty word sequence.
// A set of triplets attached to one video serializes to a single token
// sequence: fields joined by " <field_delimiter> ", triplets joined by
// " <triplet_separator> ", no leading or trailing whitespace. Parsing is the
// inverse and, in lenient mode, is total over arbitrary model output.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ovre/errors.hpp"

namespace ovre {

/// Ordered list of whitespace-free word tokens.
using TokenSequence = std::vector<std::string>;

struct SerializationConfig {
  std::string triplet_separator = "<triplet>";
  std::string field_delimiter = ",";
  bool lowercase = true;
  bool strip_punctuation = false;

  void validate() const {
    if (triplet_separator.empty() || field_delimiter.empty())
      throw std::invalid_argument("delimiters must be non-empty");
    if (triplet_separator == field_delimiter)
      throw std::invalid_argument("triplet_separator must differ from field_delimiter");
  }
};

struct Triplet {
  TokenSequence subject;
  TokenSequence predicate;
  TokenSequence object;

  bool valid() const {
    return !subject.empty() && !predicate.empty() && !object.empty();
  }

  /// All tokens in order: subject, predicate, object.
  TokenSequence flatten() const {
    TokenSequence out;
    out.reserve(subject.size() + predicate.size() + object.size());
    out.insert(out.end(), subject.begin(), subject.end());
    out.insert(out.end(), predicate.begin(), predicate.end());
    out.insert(out.end(), object.begin(), object.end());
    return out;
  }
};

/// Multiset of triplets for one video. Storage order carries no meaning;
/// comparison and scoring are order-invariant. Duplicates are retained.
struct TripletSet {
  std::string video_id;
  std::vector<Triplet> triplets;
};

namespace detail {

inline std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline std::vector<std::string_view> split_on(std::string_view text,
                                              std::string_view sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(sep, pos);
    if (hit == std::string_view::npos) {
      parts.push_back(text.substr(pos));
      break;
    }
    parts.push_back(text.substr(pos, hit - pos));
    pos = hit + sep.size();
  }
  return parts;
}

}  // namespace detail

/// Whitespace-tokenize raw text, applying the config's case folding and
/// punctuation stripping. Deterministic; empty output is a valid result.
/// Case folding is ASCII-only; non-ASCII bytes pass through untouched.
inline TokenSequence normalize_text(std::string_view raw,
                                    const SerializationConfig& cfg) {
  TokenSequence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char c : raw) {
    if (detail::is_ascii_space(c)) {
      flush();
      continue;
    }
    if (cfg.strip_punctuation && detail::is_ascii_punct(c)) continue;
    if (cfg.lowercase)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    current += c;
  }
  flush();
  return tokens;
}

/// Canonical sentence form "subject predicate object", space-joined. This is
/// the text handed to embedding providers and to the n-gram metrics.
inline std::string triplet_to_sentence(const Triplet& t) {
  return detail::join_tokens(t.flatten());
}

/// One parse problem: which separated segment failed and why.
struct ParseDiagnostic {
  std::size_t segment_index;
  std::string reason;
};

struct ParseResult {
  TripletSet set;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Serialize a triplet set to its canonical sequence form. Throws
/// DelimiterCollision if any token contains an active delimiter; such a
/// token could not be recovered by parse_triplet_sequence.
inline std::string serialize_triplet_set(const TripletSet& set,
                                         const SerializationConfig& cfg) {
  cfg.validate();
  std::string out;
  for (std::size_t i = 0; i < set.triplets.size(); ++i) {
    const Triplet& t = set.triplets[i];
    if (!t.valid())
      throw std::invalid_argument("triplet with empty field at index " + std::to_string(i));
    for (const std::string& tok : t.flatten()) {
      if (tok.find(cfg.triplet_separator) != std::string::npos ||
          tok.find(cfg.field_delimiter) != std::string::npos)
        throw DelimiterCollision("token '" + tok + "' collides with a delimiter");
    }
    if (i) out += ' ' + cfg.triplet_separator + ' ';
    out += detail::join_tokens(t.subject);
    out += ' ' + cfg.field_delimiter + ' ';
    out += detail::join_tokens(t.predicate);
    out += ' ' + cfg.field_delimiter + ' ';
    out += detail::join_tokens(t.object);
  }
  return out;
}

/// Parse a serialized sequence back into a triplet set. Splits on the triplet
/// separator, then on the field delimiter; a segment must yield exactly three
/// non-empty fields to become a triplet. In lenient mode malformed segments
/// are skipped and reported; strict mode throws MalformedSegment instead.
/// Segments that normalize to nothing (e.g. a trailing separator) are ignored.
inline ParseResult parse_triplet_sequence(std::string_view text,
                                          const SerializationConfig& cfg,
                                          bool strict = false,
                                          std::string video_id = {}) {
  cfg.validate();
  ParseResult result;
  result.set.video_id = std::move(video_id);
  const auto segments = detail::split_on(text, cfg.triplet_separator);
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const auto fields = detail::split_on(segments[si], cfg.field_delimiter);
    std::vector<TokenSequence> parsed;
    for (const auto& field : fields) {
      TokenSequence toks = normalize_text(field, cfg);
      if (!toks.empty()) parsed.push_back(std::move(toks));
    }
    if (parsed.empty()) {
      if (fields.size() <= 1) continue;  // blank segment, not an arity error
      // fall through: delimiters present but no content
    }
    if (parsed.size() != 3) {
      std::string reason = "expected 3 non-empty fields, got " +
                           std::to_string(parsed.size());
      if (strict) throw MalformedSegment(si, reason);
      result.diagnostics.push_back({si, std::move(reason)});
      continue;
    }
    result.set.triplets.push_back(
        {std::move(parsed[0]), std::move(parsed[1]), std::move(parsed[2])});
  }
  return result;
}

/// Normalize every field of a triplet under cfg. Fields that normalize to
/// empty make the result invalid (valid() == false).
inline Triplet normalize_triplet(const Triplet& t, const SerializationConfig& cfg) {
  return {normalize_text(detail::join_tokens(t.subject), cfg),
          normalize_text(detail::join_tokens(t.predicate), cfg),
          normalize_text(detail::join_tokens(t.object), cfg)};
}

inline TripletSet normalize_triplet_set(const TripletSet& set,
                                        const SerializationConfig& cfg) {
  TripletSet out;
  out.video_id = set.video_id;
  out.triplets.reserve(set.triplets.size());
  for (const Triplet& t : set.triplets) out.triplets.push_back(normalize_triplet(t, cfg));
  return out;
}

inline bool operator==(const Triplet& a, const Triplet& b) {
  return a.subject == b.subject && a.predicate == b.predicate && a.object == b.object;
}

/// Deterministic ordering key; used for canonical sorting and set equality.
inline std::string triplet_key(const Triplet& t) {
  return detail::join_tokens(t.subject) + '\x1f' +
         detail::join_tokens(t.predicate) + '\x1f' +
         detail::join_tokens(t.object);
}

/// Multiset equality: true when both sets hold the same triplets regardless
/// of storage order.
inline bool same_triplets(const TripletSet& a, const TripletSet& b) {
  if (a.triplets.size() != b.triplets.size()) return false;
  std::vector<std::string> ka, kb;
  ka.reserve(a.triplets.size());
  kb.reserve(b.triplets.size());
  for (const Triplet& t : a.triplets) ka.push_back(triplet_key(t));
  for (const Triplet& t : b.triplets) kb.push_back(triplet_key(t));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

}  // namespace ovre
