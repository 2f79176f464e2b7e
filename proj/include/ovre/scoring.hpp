// scoring.hpp - the full evaluation protocol: per-video similarity matrix,
// optimal assignment, zero-padded matched pairs, corpus metrics.
//
// Determinism contract: triplets are canonically sorted per video and videos
// are processed in video_id order, so reports are byte-identical across
// storage orderings and worker counts.
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ovre/assignment.hpp"
#include "ovre/embedding.hpp"
#include "ovre/errors.hpp"
#include "ovre/metrics.hpp"
#include "ovre/providers.hpp"
#include "ovre/triplet.hpp"

namespace ovre {

/// Surplus predictions never enter the metric pools; they are only counted.
enum class UnmatchedPredictionPolicy { kDrop };

struct ScoringConfig {
  SerializationConfig serialization;
  ProviderSpec provider;
  UnmatchedPredictionPolicy unmatched_prediction_policy = UnmatchedPredictionPolicy::kDrop;
  bool per_video_breakdown = false;
  unsigned workers = 0;  // 0 = logical cores
  double cider_sigma = 6.0;
  double meteor_alpha = 0.9;
  double meteor_beta = 3.0;
  double meteor_gamma = 0.5;
  std::shared_ptr<const SynonymLexicon> lexicon;  // optional synonym stage
  // Embedding-side template with {subject} {predicate} {object} holes; empty
  // means the plain space-joined sentence. Affects matching only, never the
  // text the metrics see.
  std::string embed_template;
  bool skip_failed_videos = false;

  MeteorParams meteor_params() const {
    return {meteor_alpha, meteor_beta, meteor_gamma,
            lexicon && !lexicon->empty() ? lexicon.get() : nullptr};
  }
};

struct VideoScore {
  std::string video_id;
  Assignment assignment;
  /// One pair per matched (pred, gt) followed by one zero-padded pair per
  /// unmatched ground-truth triplet; length is always the ground-truth count.
  std::vector<MatchedPair> matched_pairs;
  std::size_t n_unmatched_gt = 0;
  std::size_t n_unmatched_pred = 0;
  std::vector<std::string> pred_sentences;
  std::vector<std::string> gt_sentences;
  SimilarityMatrix similarity;
};

struct PerVideoScore {
  std::string video_id;
  std::size_t n_matched = 0;
  std::size_t n_unmatched_gt = 0;
  std::size_t n_unmatched_pred = 0;
  double mean_similarity = 0.0;
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, cider = 0.0, meteor = 0.0;
};

struct MetricReport {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, cider = 0.0, meteor = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_zero_padded = 0;
  std::size_t n_videos = 0;
  std::size_t n_unmatched_pred = 0;
  std::string provider_kind;
  std::string meteor_stages;
  std::string idf_corpus = "references";
  std::string config_digest;
  std::vector<PerVideoScore> per_video;
  std::vector<std::string> skipped_videos;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["bleu1"] = bleu1;
    j["bleu2"] = bleu2;
    j["bleu3"] = bleu3;
    j["cider"] = cider;
    j["meteor"] = meteor;
    j["n_pairs"] = n_pairs;
    j["n_zero_padded"] = n_zero_padded;
    j["n_videos"] = n_videos;
    j["n_unmatched_pred"] = n_unmatched_pred;
    j["provider_kind"] = provider_kind;
    j["meteor_stages"] = meteor_stages;
    j["idf_corpus"] = idf_corpus;
    j["config_digest"] = config_digest;
    if (!per_video.empty()) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const PerVideoScore& v : per_video) {
        nlohmann::ordered_json e;
        e["video_id"] = v.video_id;
        e["n_matched"] = v.n_matched;
        e["n_unmatched_gt"] = v.n_unmatched_gt;
        e["n_unmatched_pred"] = v.n_unmatched_pred;
        e["mean_similarity"] = v.mean_similarity;
        e["bleu1"] = v.bleu1;
        e["bleu2"] = v.bleu2;
        e["bleu3"] = v.bleu3;
        e["cider"] = v.cider;
        e["meteor"] = v.meteor;
        arr.push_back(std::move(e));
      }
      j["per_video"] = std::move(arr);
    }
    if (!skipped_videos.empty()) j["skipped_videos"] = skipped_videos;
    return j;
  }
};

namespace detail {

inline std::string render_embed_text(const Triplet& t, const std::string& tmpl) {
  if (tmpl.empty()) return triplet_to_sentence(t);
  std::string out = tmpl;
  auto substitute = [&](const std::string& hole, const TokenSequence& field) {
    std::size_t pos;
    while ((pos = out.find(hole)) != std::string::npos)
      out.replace(pos, hole.size(), join_tokens(field));
  };
  substitute("{subject}", t.subject);
  substitute("{predicate}", t.predicate);
  substitute("{object}", t.object);
  return out;
}

inline std::vector<Triplet> canonical_triplets(const TripletSet& set,
                                               const SerializationConfig& cfg) {
  std::vector<Triplet> out;
  out.reserve(set.triplets.size());
  for (const Triplet& t : set.triplets) {
    Triplet norm = normalize_triplet(t, cfg);
    if (!norm.valid())
      throw SchemaError("video '" + set.video_id + "': triplet with empty field");
    out.push_back(std::move(norm));
  }
  std::stable_sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
    return triplet_key(a) < triplet_key(b);
  });
  return out;
}

inline std::string config_digest(const ScoringConfig& cfg) {
  std::ostringstream ss;
  ss << cfg.serialization.triplet_separator << '\x1e'
     << cfg.serialization.field_delimiter << '\x1e'
     << cfg.serialization.lowercase << '\x1e'
     << cfg.serialization.strip_punctuation << '\x1e'
     << cfg.provider.kind << '\x1e';
  if (cfg.provider.kind == "hashed-fallback") ss << cfg.provider.dimension;
  ss << '\x1e' << cfg.cider_sigma << '\x1e' << cfg.meteor_alpha << '\x1e'
     << cfg.meteor_beta << '\x1e' << cfg.meteor_gamma << '\x1e'
     << cfg.meteor_params().stages() << '\x1e' << cfg.embed_template << '\x1e'
     << "drop";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(ss.str())));
  return std::string(buf);
}

}  // namespace detail

/// Score one video: build the similarity matrix, solve the assignment, emit
/// matched pairs plus a zero-padded pair per unmatched ground-truth triplet.
/// Surplus predictions are dropped from the metric input but counted.
inline VideoScore score_video(const TripletSet& pred, const TripletSet& gt,
                              const ScoringConfig& cfg, EmbeddingProvider& provider) {
  if (pred.video_id != gt.video_id)
    throw VideoIdMismatch("prediction video '" + pred.video_id +
                          "' scored against ground truth '" + gt.video_id + "'");
  if (gt.triplets.empty())
    throw EmptyGroundTruth("video '" + gt.video_id + "' has no ground-truth triplets");

  VideoScore score;
  score.video_id = gt.video_id;
  const std::vector<Triplet> preds = detail::canonical_triplets(pred, cfg.serialization);
  const std::vector<Triplet> gts = detail::canonical_triplets(gt, cfg.serialization);

  std::vector<std::string> pred_embed_texts, gt_embed_texts;
  for (const Triplet& t : preds) {
    score.pred_sentences.push_back(triplet_to_sentence(t));
    pred_embed_texts.push_back(detail::render_embed_text(t, cfg.embed_template));
  }
  for (const Triplet& t : gts) {
    score.gt_sentences.push_back(triplet_to_sentence(t));
    gt_embed_texts.push_back(detail::render_embed_text(t, cfg.embed_template));
  }

  score.similarity = build_similarity_matrix(pred_embed_texts, gt_embed_texts, provider);
  score.assignment = solve_max_assignment(score.similarity);

  std::vector<char> gt_matched(gts.size(), 0);
  for (const auto& [pi, gj] : score.assignment.pairs) {
    gt_matched[gj] = 1;
    score.matched_pairs.push_back({preds[pi].flatten(), gts[gj].flatten()});
  }
  for (std::size_t j = 0; j < gts.size(); ++j)
    if (!gt_matched[j]) score.matched_pairs.push_back({{}, gts[j].flatten()});

  score.n_unmatched_gt = gts.size() - score.assignment.pairs.size();
  score.n_unmatched_pred = preds.size() - score.assignment.pairs.size();
  return score;
}

/// Convenience overload resolving the provider from the config.
inline VideoScore score_video(const TripletSet& pred, const TripletSet& gt,
                              const ScoringConfig& cfg) {
  auto provider = resolve_provider(cfg.provider);
  CachingProvider cached(provider);
  return score_video(pred, gt, cfg, cached);
}

/// Human-readable matching table, one row per prediction plus one per
/// zero-padded ground-truth triplet, sorted by similarity descending.
inline std::string explain_matching(const VideoScore& score) {
  struct Row {
    std::string pred, gt;
    double sim;
    bool matched;
  };
  std::vector<Row> rows;
  std::vector<char> pred_used(score.pred_sentences.size(), 0);
  std::vector<char> gt_used(score.gt_sentences.size(), 0);
  for (const auto& [pi, gj] : score.assignment.pairs) {
    rows.push_back({score.pred_sentences[pi], score.gt_sentences[gj],
                    score.similarity.at(pi, gj), true});
    pred_used[pi] = 1;
    gt_used[gj] = 1;
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.sim > b.sim; });
  for (std::size_t i = 0; i < pred_used.size(); ++i)
    if (!pred_used[i]) rows.push_back({score.pred_sentences[i], "", 0.0, false});
  for (std::size_t j = 0; j < gt_used.size(); ++j)
    if (!gt_used[j]) rows.push_back({"", score.gt_sentences[j], 0.0, false});

  std::size_t wp = 10, wg = 12;
  for (const Row& r : rows) {
    wp = std::max(wp, r.pred.size());
    wg = std::max(wg, r.gt.size());
  }
  std::ostringstream out;
  out << "video " << score.video_id << "\n"
      << std::left << std::setw(static_cast<int>(wp) + 2) << "prediction"
      << std::setw(static_cast<int>(wg) + 2) << "ground truth"
      << std::setw(12) << "similarity" << "matched\n";
  for (const Row& r : rows) {
    out << std::left << std::setw(static_cast<int>(wp) + 2) << r.pred
        << std::setw(static_cast<int>(wg) + 2) << r.gt;
    if (r.matched) {
      std::ostringstream sim;
      sim << std::fixed << std::setprecision(4) << r.sim;
      out << std::setw(12) << sim.str() << "yes\n";
    } else {
      out << std::setw(12) << "-" << "no\n";
    }
  }
  return out.str();
}

namespace detail {

inline PerVideoScore summarize_video(const VideoScore& vs, const ScoringConfig& cfg) {
  PerVideoScore out;
  out.video_id = vs.video_id;
  out.n_matched = vs.assignment.pairs.size();
  out.n_unmatched_gt = vs.n_unmatched_gt;
  out.n_unmatched_pred = vs.n_unmatched_pred;
  if (!vs.assignment.pairs.empty())
    out.mean_similarity =
        vs.assignment.total_weight / static_cast<double>(vs.assignment.pairs.size());
  out.bleu1 = bleu_corpus(vs.matched_pairs, 1);
  out.bleu2 = bleu_corpus(vs.matched_pairs, 2);
  out.bleu3 = bleu_corpus(vs.matched_pairs, 3);
  out.cider = cider_corpus(vs.matched_pairs, cfg.cider_sigma);
  out.meteor = meteor_corpus(vs.matched_pairs, cfg.meteor_params());
  return out;
}

}  // namespace detail

/// Score a whole corpus. Ground truth must cover every predicted video; a
/// ground-truth video with no prediction is scored as an empty prediction.
/// Videos run on a worker pool; pooling happens in video_id order so the
/// report is deterministic.
inline MetricReport score_corpus(const std::vector<TripletSet>& preds,
                                 const std::vector<TripletSet>& gts,
                                 const ScoringConfig& cfg) {
  std::unordered_map<std::string, const TripletSet*> pred_by_id;
  for (const TripletSet& p : preds) {
    if (p.video_id.empty()) throw SchemaError("prediction with empty video_id");
    if (!pred_by_id.emplace(p.video_id, &p).second)
      throw DuplicateVideoId("duplicate predicted video_id '" + p.video_id + "'");
  }
  std::unordered_map<std::string, const TripletSet*> gt_by_id;
  for (const TripletSet& g : gts) {
    if (g.video_id.empty()) throw SchemaError("ground truth with empty video_id");
    if (!gt_by_id.emplace(g.video_id, &g).second)
      throw DuplicateVideoId("duplicate ground-truth video_id '" + g.video_id + "'");
  }
  for (const TripletSet& p : preds)
    if (!gt_by_id.count(p.video_id))
      throw UnknownVideoId("predicted video '" + p.video_id + "' has no ground truth");

  std::vector<const TripletSet*> ordered;
  ordered.reserve(gts.size());
  for (const TripletSet& g : gts) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(),
            [](const TripletSet* a, const TripletSet* b) { return a->video_id < b->video_id; });

  auto provider = resolve_provider(cfg.provider);
  CachingProvider cached(provider);

  const std::size_t n = ordered.size();
  std::vector<std::optional<VideoScore>> scores(n);
  std::vector<std::exception_ptr> failures(n);
  auto run_one = [&](std::size_t idx) {
    const TripletSet* gt = ordered[idx];
    TripletSet fallback;
    const TripletSet* pred;
    auto it = pred_by_id.find(gt->video_id);
    if (it != pred_by_id.end()) {
      pred = it->second;
    } else {
      fallback.video_id = gt->video_id;
      pred = &fallback;
    }
    scores[idx] = score_video(*pred, *gt, cfg, cached);
  };

  unsigned workers = cfg.workers ? cfg.workers : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n ? n : 1)));
  std::atomic<bool> abort{false};  // fail fast: stop picking up new videos
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n && !abort.load(); ++i) {
      try {
        run_one(i);
      } catch (...) {
        failures[i] = std::current_exception();
        if (!cfg.skip_failed_videos) abort = true;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n && !abort.load();
             i = next.fetch_add(1)) {
          try {
            run_one(i);
          } catch (...) {
            failures[i] = std::current_exception();
            if (!cfg.skip_failed_videos) abort = true;
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  if (!cfg.skip_failed_videos)
    for (std::size_t i = 0; i < n; ++i)
      if (failures[i]) std::rethrow_exception(failures[i]);

  MetricReport report;
  std::vector<MatchedPair> pool_pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) {
      report.skipped_videos.push_back(ordered[i]->video_id);
      continue;
    }
    if (!scores[i].has_value()) continue;
    const VideoScore& vs = *scores[i];
    pool_pairs.insert(pool_pairs.end(), vs.matched_pairs.begin(), vs.matched_pairs.end());
    report.n_zero_padded += vs.n_unmatched_gt;
    report.n_unmatched_pred += vs.n_unmatched_pred;
    ++report.n_videos;
    if (cfg.per_video_breakdown)
      report.per_video.push_back(detail::summarize_video(vs, cfg));
  }
  report.n_pairs = pool_pairs.size();
  report.bleu1 = bleu_corpus(pool_pairs, 1);
  report.bleu2 = bleu_corpus(pool_pairs, 2);
  report.bleu3 = bleu_corpus(pool_pairs, 3);
  report.cider = cider_corpus(pool_pairs, cfg.cider_sigma);
  report.meteor = meteor_corpus(pool_pairs, cfg.meteor_params());
  report.provider_kind = cached.kind();
  report.meteor_stages = cfg.meteor_params().stages();
  report.config_digest = detail::config_digest(cfg);
  return report;
}

/// Per-video breakdown as JSON Lines, one object per video.
inline void write_per_video_jsonl(const MetricReport& report, std::ostream& out) {
  for (const PerVideoScore& v : report.per_video) {
    nlohmann::ordered_json e;
    e["video_id"] = v.video_id;
    e["n_matched"] = v.n_matched;
    e["n_unmatched_gt"] = v.n_unmatched_gt;
    e["n_unmatched_pred"] = v.n_unmatched_pred;
    e["mean_similarity"] = v.mean_similarity;
    e["bleu1"] = v.bleu1;
    e["bleu2"] = v.bleu2;
    e["bleu3"] = v.bleu3;
    e["cider"] = v.cider;
    e["meteor"] = v.meteor;
    out << e.dump() << '\n';
  }
}

/// Plot-ready CSV of per-video scores (histogram input).
inline void write_scores_csv(const MetricReport& report, std::ostream& out) {
  out << "video_id,n_matched,n_unmatched_gt,n_unmatched_pred,mean_similarity,"
         "bleu1,bleu2,bleu3,cider,meteor\n";
  for (const PerVideoScore& v : report.per_video) {
    out << v.video_id << ',' << v.n_matched << ',' << v.n_unmatched_gt << ','
        << v.n_unmatched_pred << ',' << v.mean_similarity << ',' << v.bleu1 << ','
        << v.bleu2 << ',' << v.bleu3 << ',' << v.cider << ',' << v.meteor << '\n';
  }
}

}  // namespace ovre
