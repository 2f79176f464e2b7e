// metrics.hpp - corpus BLEU@1-3, CIDEr-D and METEOR over matched
// (candidate, single-reference) pairs.
//
// An empty candidate encodes an unmatched ground-truth triplet: it
// contributes zero matches and zero length everywhere, which is how
// unmatched ground truth ends up scoring zero. All corpus values are
// reported on a x100 scale.
#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ovre/errors.hpp"
#include "ovre/stemmer.hpp"
#include "ovre/triplet.hpp"

namespace ovre {

struct MatchedPair {
  TokenSequence candidate;  // empty when the reference went unmatched
  TokenSequence reference;  // never empty
};

/// Sliding-window n-gram counts per order 1..max_n. Keys are the tokens
/// joined by single spaces (tokens carry no whitespace, so this is exact).
struct NGramProfile {
  std::vector<std::unordered_map<std::string, int>> orders;

  const std::unordered_map<std::string, int>& order(int n) const {
    return orders[static_cast<std::size_t>(n - 1)];
  }
};

inline NGramProfile ngram_profile(const TokenSequence& tokens, int max_n) {
  if (max_n < 1) throw std::invalid_argument("ngram_profile: max_n must be >= 1");
  NGramProfile profile;
  profile.orders.resize(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    auto& counts = profile.orders[static_cast<std::size_t>(n - 1)];
    if (tokens.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
        key += ' ';
        key += tokens[i + k];
      }
      ++counts[key];
    }
  }
  return profile;
}

/// Corpus-level BLEU: clipped n-gram counts pooled over all pairs, geometric
/// mean over orders 1..max_n, brevity penalty exp(1 - r/c) when the pooled
/// candidate length c falls short of the pooled reference length r. No
/// smoothing: any order with zero matches zeroes the score.
inline double bleu_corpus(const std::vector<MatchedPair>& pairs, int max_n) {
  if (pairs.empty()) throw EmptyCorpus("bleu_corpus: no pairs");
  if (max_n < 1 || max_n > 3)
    throw std::invalid_argument("bleu_corpus: max_n must be in 1..3");
  std::vector<long long> matched(static_cast<std::size_t>(max_n), 0);
  std::vector<long long> total(static_cast<std::size_t>(max_n), 0);
  long long cand_len = 0, ref_len = 0;
  for (const MatchedPair& pair : pairs) {
    if (pair.reference.empty())
      throw std::invalid_argument("bleu_corpus: empty reference");
    cand_len += static_cast<long long>(pair.candidate.size());
    ref_len += static_cast<long long>(pair.reference.size());
    if (pair.candidate.empty()) continue;
    const NGramProfile cand = ngram_profile(pair.candidate, max_n);
    const NGramProfile ref = ngram_profile(pair.reference, max_n);
    for (int n = 1; n <= max_n; ++n) {
      const auto& ref_counts = ref.order(n);
      for (const auto& [gram, count] : cand.order(n)) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_precision = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0 || total[n - 1] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[n - 1]) /
                              static_cast<double>(total[n - 1]));
  }
  const double brevity =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * brevity * std::exp(log_precision / max_n);
}

/// CIDEr-D over orders 1..4. The IDF corpus is the reference side of this
/// very evaluation: each reference sentence is one document. Per pair and
/// order, the clipped TF-IDF cosine is damped by a gaussian length penalty
/// exp(-(lc - lr)^2 / (2 sigma^2)); order scores are averaged and the corpus
/// mean is reported x100. Empty candidates score exactly zero.
inline double cider_corpus(const std::vector<MatchedPair>& pairs, double sigma = 6.0) {
  if (pairs.empty()) throw EmptyCorpus("cider_corpus: no pairs");
  constexpr int kMaxN = 4;
  std::vector<std::unordered_map<std::string, int>> df(kMaxN);
  std::vector<NGramProfile> ref_profiles;
  ref_profiles.reserve(pairs.size());
  for (const MatchedPair& pair : pairs) {
    if (pair.reference.empty())
      throw std::invalid_argument("cider_corpus: empty reference");
    ref_profiles.push_back(ngram_profile(pair.reference, kMaxN));
    for (int n = 1; n <= kMaxN; ++n)
      for (const auto& [gram, count] : ref_profiles.back().order(n)) ++df[n - 1][gram];
  }
  const double log_docs = std::log(static_cast<double>(pairs.size()));

  struct TfIdf {
    std::vector<std::unordered_map<std::string, double>> weights;
    std::vector<double> norm;
  };
  auto weigh = [&](const NGramProfile& profile) {
    TfIdf out;
    out.weights.resize(kMaxN);
    out.norm.assign(kMaxN, 0.0);
    for (int n = 1; n <= kMaxN; ++n) {
      for (const auto& [gram, count] : profile.order(n)) {
        auto it = df[n - 1].find(gram);
        const double seen = it == df[n - 1].end() ? 0.0 : static_cast<double>(it->second);
        const double idf = log_docs - std::log(std::max(1.0, seen));
        const double w = static_cast<double>(count) * idf;
        out.weights[n - 1][gram] = w;
        out.norm[n - 1] += w * w;
      }
      out.norm[n - 1] = std::sqrt(out.norm[n - 1]);
    }
    return out;
  };

  double corpus = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const MatchedPair& pair = pairs[p];
    if (pair.candidate.empty()) continue;
    const TfIdf ref = weigh(ref_profiles[p]);
    const TfIdf cand = weigh(ngram_profile(pair.candidate, kMaxN));
    const double delta = static_cast<double>(pair.candidate.size()) -
                         static_cast<double>(pair.reference.size());
    const double length_penalty = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
    double pair_score = 0.0;
    for (int n = 1; n <= kMaxN; ++n) {
      double dot = 0.0;
      const auto& ref_w = ref.weights[n - 1];
      for (const auto& [gram, w] : cand.weights[n - 1]) {
        auto it = ref_w.find(gram);
        if (it != ref_w.end()) dot += std::min(w, it->second) * it->second;
      }
      double val = 0.0;
      if (cand.norm[n - 1] > 0.0 && ref.norm[n - 1] > 0.0)
        val = dot / (cand.norm[n - 1] * ref.norm[n - 1]);
      pair_score += val * length_penalty;
    }
    corpus += pair_score / kMaxN;
  }
  return 100.0 * corpus / static_cast<double>(pairs.size());
}

/// Optional synonym table for the third METEOR matcher stage, loaded from
/// JSON Lines of {"word": str, "synonyms": [str, ...]}. Lookup is symmetric.
class SynonymLexicon {
 public:
  void add(const std::string& word, const std::vector<std::string>& synonyms) {
    for (const std::string& s : synonyms) {
      table_[word].insert(s);
      table_[s].insert(word);
    }
  }

  bool related(const std::string& a, const std::string& b) const {
    auto it = table_.find(a);
    return it != table_.end() && it->second.count(b) > 0;
  }

  bool empty() const { return table_.empty(); }

  static SynonymLexicon load(const std::string& path);

 private:
  std::unordered_map<std::string, std::unordered_set<std::string>> table_;
};

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
  const SynonymLexicon* lexicon = nullptr;  // enables the synonym stage

  std::string stages() const {
    return lexicon && !lexicon->empty() ? "exact,stem,synonym" : "exact,stem";
  }
};

namespace detail {

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Stage order: exact, stem, then synonym when a lexicon is present. Within a
// stage every unaligned candidate token takes the first unaligned reference
// token it matches, left to right.
inline MeteorAlignment align_meteor(const TokenSequence& cand,
                                    const TokenSequence& ref,
                                    const SynonymLexicon* lexicon) {
  std::vector<int> cand_to_ref(cand.size(), -1);
  std::vector<char> ref_taken(ref.size(), 0);
  auto run_stage = [&](auto&& equal) {
    for (std::size_t ci = 0; ci < cand.size(); ++ci) {
      if (cand_to_ref[ci] >= 0) continue;
      for (std::size_t rj = 0; rj < ref.size(); ++rj) {
        if (ref_taken[rj]) continue;
        if (equal(ci, rj)) {
          cand_to_ref[ci] = static_cast<int>(rj);
          ref_taken[rj] = 1;
          break;
        }
      }
    }
  };
  run_stage([&](std::size_t ci, std::size_t rj) { return cand[ci] == ref[rj]; });

  std::vector<std::string> cand_stems(cand.size()), ref_stems(ref.size());
  for (std::size_t i = 0; i < cand.size(); ++i) cand_stems[i] = porter_stem(cand[i]);
  for (std::size_t j = 0; j < ref.size(); ++j) ref_stems[j] = porter_stem(ref[j]);
  run_stage([&](std::size_t ci, std::size_t rj) { return cand_stems[ci] == ref_stems[rj]; });

  if (lexicon && !lexicon->empty())
    run_stage([&](std::size_t ci, std::size_t rj) { return lexicon->related(cand[ci], ref[rj]); });

  MeteorAlignment out;
  int prev_ref = -2;
  bool in_chunk = false;
  for (std::size_t ci = 0; ci < cand.size(); ++ci) {
    if (cand_to_ref[ci] < 0) {
      in_chunk = false;
      continue;
    }
    ++out.matches;
    if (!in_chunk || cand_to_ref[ci] != prev_ref + 1) ++out.chunks;
    prev_ref = cand_to_ref[ci];
    in_chunk = true;
  }
  return out;
}

}  // namespace detail

/// Per-pair METEOR score in [0, 1].
inline double meteor_pair(const TokenSequence& candidate, const TokenSequence& reference,
                          const MeteorParams& params = {}) {
  if (reference.empty()) throw std::invalid_argument("meteor_pair: empty reference");
  if (candidate.empty()) return 0.0;
  const detail::MeteorAlignment a =
      detail::align_meteor(candidate, reference, params.lexicon);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  const double f_mean = precision * recall /
                        (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double penalty =
      params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return f_mean * (1.0 - penalty);
}

/// Arithmetic mean of per-pair METEOR scores, x100.
inline double meteor_corpus(const std::vector<MatchedPair>& pairs,
                            const MeteorParams& params = {}) {
  if (pairs.empty()) throw EmptyCorpus("meteor_corpus: no pairs");
  double sum = 0.0;
  for (const MatchedPair& pair : pairs)
    sum += meteor_pair(pair.candidate, pair.reference, params);
  return 100.0 * sum / static_cast<double>(pairs.size());
}

inline SynonymLexicon SynonymLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot open lexicon file: " + path);
  SynonymLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("word") ||
        !obj.contains("synonyms") || !obj["word"].is_string() ||
        !obj["synonyms"].is_array())
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": expected {\"word\": str, \"synonyms\": [str,...]}");
    std::vector<std::string> syns;
    for (const auto& s : obj["synonyms"]) {
      if (!s.is_string())
        throw SchemaError(path + ":" + std::to_string(lineno) + ": non-string synonym");
      syns.push_back(s.get<std::string>());
    }
    lex.add(obj["word"].get<std::string>(), syns);
  }
  return lex;
}

}  // namespace ovre
