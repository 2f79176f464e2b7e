// dataset.hpp - ingestion, validation and statistics for annotation files.
//
// Wire format (JSON Lines, one object per video):
//   {"video_id": str, "split": "train"|"test", "action_labels": [str, ...],
//    "triplets": [{"subject": str, "predicate": str, "object": str}, ...]}
// Sequence files pair a video id with the serialized token-sequence form:
//   {"video_id": str, "sequence": str}
#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ovre/errors.hpp"
#include "ovre/triplet.hpp"

namespace ovre {

struct AnnotationRecord {
  std::string video_id;
  std::string split;  // "train" or "test"
  std::vector<std::string> action_labels;
  std::vector<Triplet> triplets;

  TripletSet triplet_set() const { return {video_id, triplets}; }
};

struct LineDiagnostic {
  std::size_t line;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<AnnotationRecord> records;
  std::vector<LineDiagnostic> diagnostics;
};

namespace detail {

inline bool require(bool ok, std::size_t line, std::string message, bool strict,
                    std::vector<LineDiagnostic>& diags) {
  if (ok) return true;
  if (strict) throw SchemaError("line " + std::to_string(line) + ": " + message);
  diags.push_back({line, std::move(message)});
  return false;
}

}  // namespace detail

/// Load annotation records. Lenient mode returns every well-formed record
/// and a diagnostic per malformed line; strict mode throws SchemaError at
/// the first violation. Triplet fields are normalized under cfg.
inline LoadResult load_annotations(const std::string& path,
                                   const SerializationConfig& cfg = {},
                                   bool strict = false) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot open annotations file: " + path);
  LoadResult result;
  std::unordered_map<std::string, std::size_t> seen;  // video_id -> first line
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (!detail::require(!obj.is_discarded() && obj.is_object(), lineno,
                         "not a JSON object", strict, result.diagnostics))
      continue;

    AnnotationRecord rec;
    bool ok = detail::require(obj.contains("video_id") && obj["video_id"].is_string() &&
                                  !obj["video_id"].get<std::string>().empty(),
                              lineno, "missing or empty video_id", strict,
                              result.diagnostics);
    if (!ok) continue;
    rec.video_id = obj["video_id"].get<std::string>();

    auto dup = seen.find(rec.video_id);
    if (!detail::require(dup == seen.end(), lineno,
                         "duplicate video_id '" + rec.video_id + "' (first seen at line " +
                             (dup == seen.end() ? "?" : std::to_string(dup->second)) + ")",
                         strict, result.diagnostics))
      continue;

    ok = detail::require(obj.contains("split") && obj["split"].is_string() &&
                             (obj["split"] == "train" || obj["split"] == "test"),
                         lineno, "split must be \"train\" or \"test\"", strict,
                         result.diagnostics);
    if (!ok) continue;
    rec.split = obj["split"].get<std::string>();

    ok = detail::require(obj.contains("action_labels") && obj["action_labels"].is_array() &&
                             !obj["action_labels"].empty(),
                         lineno, "action_labels must be a non-empty array", strict,
                         result.diagnostics);
    if (!ok) continue;
    for (const auto& label : obj["action_labels"]) {
      ok = detail::require(label.is_string() && !label.get<std::string>().empty(), lineno,
                           "action label must be a non-empty string", strict,
                           result.diagnostics);
      if (!ok) break;
      rec.action_labels.push_back(label.get<std::string>());
    }
    if (!ok) continue;

    ok = detail::require(obj.contains("triplets") && obj["triplets"].is_array() &&
                             !obj["triplets"].empty(),
                         lineno, "empty triplets", strict, result.diagnostics);
    if (!ok) continue;
    for (const auto& t : obj["triplets"]) {
      ok = detail::require(t.is_object() && t.contains("subject") && t.contains("predicate") &&
                               t.contains("object") && t["subject"].is_string() &&
                               t["predicate"].is_string() && t["object"].is_string(),
                           lineno, "triplet must have string subject/predicate/object",
                           strict, result.diagnostics);
      if (!ok) break;
      Triplet trip{normalize_text(t["subject"].get<std::string>(), cfg),
                   normalize_text(t["predicate"].get<std::string>(), cfg),
                   normalize_text(t["object"].get<std::string>(), cfg)};
      ok = detail::require(trip.valid(), lineno,
                           "triplet field normalizes to empty", strict, result.diagnostics);
      if (!ok) break;
      rec.triplets.push_back(std::move(trip));
    }
    if (!ok) continue;

    seen.emplace(rec.video_id, lineno);
    result.records.push_back(std::move(rec));
  }
  return result;
}

struct RelationCount {
  std::string predicate;
  std::size_t count;
};

struct DatasetStats {
  std::size_t n_videos = 0;
  std::size_t n_triplets = 0;
  std::map<std::size_t, std::size_t> triplets_per_video;  // count -> videos
  std::vector<RelationCount> relation_frequency;  // descending, alpha tie-break
  std::size_t subject_vocabulary = 0;
  std::size_t object_vocabulary = 0;
  // (action label, predicate) -> co-occurrence count.
  std::map<std::pair<std::string, std::string>, std::size_t> bipartite_weights;

  nlohmann::ordered_json to_json(std::size_t top_k = 25) const {
    nlohmann::ordered_json j;
    j["n_videos"] = n_videos;
    j["n_triplets"] = n_triplets;
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [count, videos] : triplets_per_video)
      hist[std::to_string(count)] = videos;
    j["triplets_per_video"] = std::move(hist);
    j["subject_vocabulary"] = subject_vocabulary;
    j["object_vocabulary"] = object_vocabulary;
    nlohmann::ordered_json rel = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < relation_frequency.size() && i < top_k; ++i) {
      nlohmann::ordered_json e;
      e["predicate"] = relation_frequency[i].predicate;
      e["count"] = relation_frequency[i].count;
      rel.push_back(std::move(e));
    }
    j["top_relations"] = std::move(rel);
    return j;
  }
};

/// Exact counting pass over validated records. Predicates (and vocabularies)
/// are keyed on the normalized space-joined field text.
inline DatasetStats compute_stats(const std::vector<AnnotationRecord>& records) {
  DatasetStats stats;
  std::map<std::string, std::size_t> relation;
  std::set<std::string> subjects, objects;
  for (const AnnotationRecord& rec : records) {
    ++stats.n_videos;
    stats.n_triplets += rec.triplets.size();
    ++stats.triplets_per_video[rec.triplets.size()];
    for (const Triplet& t : rec.triplets) {
      const std::string predicate = detail::join_tokens(t.predicate);
      ++relation[predicate];
      subjects.insert(detail::join_tokens(t.subject));
      objects.insert(detail::join_tokens(t.object));
      for (const std::string& action : rec.action_labels)
        ++stats.bipartite_weights[{action, predicate}];
    }
  }
  stats.subject_vocabulary = subjects.size();
  stats.object_vocabulary = objects.size();
  stats.relation_frequency.reserve(relation.size());
  for (const auto& [predicate, count] : relation)
    stats.relation_frequency.push_back({predicate, count});
  std::stable_sort(stats.relation_frequency.begin(), stats.relation_frequency.end(),
                   [](const RelationCount& a, const RelationCount& b) {
                     if (a.count != b.count) return a.count > b.count;
                     return a.predicate < b.predicate;
                   });
  return stats;
}

struct SplitReport {
  std::size_t train = 0;
  std::size_t test = 0;
  std::vector<std::string> leaked;  // video ids present in both splits
};

/// Per-split video counts plus cross-split leakage detection. Within one
/// file video ids are unique, so leakage mainly matters for merged files.
inline SplitReport split_report(const std::vector<AnnotationRecord>& records) {
  SplitReport report;
  std::unordered_map<std::string, std::set<std::string>> splits_of;
  for (const AnnotationRecord& rec : records) {
    if (rec.split == "train")
      ++report.train;
    else
      ++report.test;
    splits_of[rec.video_id].insert(rec.split);
  }
  for (const auto& [id, splits] : splits_of)
    if (splits.size() > 1) report.leaked.push_back(id);
  std::sort(report.leaked.begin(), report.leaked.end());
  return report;
}

struct SequenceRecord {
  std::string video_id;
  std::string sequence;
  // Optional passthrough metadata so annotation -> sequence -> annotation
  // conversion stays lossless. Absent when the producer had none.
  std::string split;
  std::vector<std::string> action_labels;
};

inline std::vector<SequenceRecord> load_sequence_file(const std::string& path,
                                                      bool strict = false,
                                                      std::vector<LineDiagnostic>* diags = nullptr) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot open sequence file: " + path);
  std::vector<SequenceRecord> records;
  std::string line;
  std::size_t lineno = 0;
  std::vector<LineDiagnostic> local;
  std::vector<LineDiagnostic>& sink = diags ? *diags : local;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (!detail::require(!obj.is_discarded() && obj.is_object() && obj.contains("video_id") &&
                             obj.contains("sequence") && obj["video_id"].is_string() &&
                             !obj["video_id"].get<std::string>().empty() &&
                             obj["sequence"].is_string(),
                         lineno, "expected {\"video_id\": str, \"sequence\": str}", strict,
                         sink))
      continue;
    SequenceRecord rec{obj["video_id"].get<std::string>(),
                       obj["sequence"].get<std::string>(), {}, {}};
    if (obj.contains("split") && obj["split"].is_string())
      rec.split = obj["split"].get<std::string>();
    if (obj.contains("action_labels") && obj["action_labels"].is_array())
      for (const auto& label : obj["action_labels"])
        if (label.is_string()) rec.action_labels.push_back(label.get<std::string>());
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_sequence_file(const std::vector<SequenceRecord>& records,
                                std::ostream& out) {
  for (const SequenceRecord& rec : records) {
    nlohmann::ordered_json obj;
    obj["video_id"] = rec.video_id;
    obj["sequence"] = rec.sequence;
    if (!rec.split.empty()) obj["split"] = rec.split;
    if (!rec.action_labels.empty()) obj["action_labels"] = rec.action_labels;
    out << obj.dump() << '\n';
  }
}

inline void write_annotation_file(const std::vector<AnnotationRecord>& records,
                                  std::ostream& out) {
  for (const AnnotationRecord& rec : records) {
    nlohmann::ordered_json obj;
    obj["video_id"] = rec.video_id;
    obj["split"] = rec.split;
    obj["action_labels"] = rec.action_labels;
    nlohmann::ordered_json triplets = nlohmann::ordered_json::array();
    for (const Triplet& t : rec.triplets) {
      nlohmann::ordered_json e;
      e["subject"] = detail::join_tokens(t.subject);
      e["predicate"] = detail::join_tokens(t.predicate);
      e["object"] = detail::join_tokens(t.object);
      triplets.push_back(std::move(e));
    }
    obj["triplets"] = std::move(triplets);
    out << obj.dump() << '\n';
  }
}

struct PredictionLoadResult {
  std::vector<TripletSet> sets;
  std::vector<LineDiagnostic> diagnostics;
};

/// Load predictions given as triplet JSONL: {"video_id": str, "triplets":
/// [{subject, predicate, object}, ...]}. Unlike annotations, an empty
/// triplet list is legal (the model produced nothing) and extra fields such
/// as split or action_labels are ignored, so annotation files work verbatim.
inline PredictionLoadResult load_triplet_predictions(const std::string& path,
                                                     const SerializationConfig& cfg = {}) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot open predictions file: " + path);
  PredictionLoadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("video_id") ||
        !obj["video_id"].is_string() || obj["video_id"].get<std::string>().empty() ||
        !obj.contains("triplets") || !obj["triplets"].is_array()) {
      result.diagnostics.push_back({lineno, "expected {\"video_id\": str, \"triplets\": [...]}"});
      continue;
    }
    TripletSet set;
    set.video_id = obj["video_id"].get<std::string>();
    for (const auto& t : obj["triplets"]) {
      if (!t.is_object() || !t.contains("subject") || !t.contains("predicate") ||
          !t.contains("object") || !t["subject"].is_string() ||
          !t["predicate"].is_string() || !t["object"].is_string()) {
        result.diagnostics.push_back({lineno, "malformed triplet object"});
        continue;
      }
      Triplet trip{normalize_text(t["subject"].get<std::string>(), cfg),
                   normalize_text(t["predicate"].get<std::string>(), cfg),
                   normalize_text(t["object"].get<std::string>(), cfg)};
      if (!trip.valid()) {
        result.diagnostics.push_back({lineno, "triplet field normalizes to empty"});
        continue;
      }
      set.triplets.push_back(std::move(trip));
    }
    result.sets.push_back(std::move(set));
  }
  return result;
}

/// Top-K relation CSV: predicate,count rows (plot-ready).
inline void write_relation_csv(const DatasetStats& stats, std::size_t top_k,
                               std::ostream& out) {
  out << "predicate,count\n";
  for (std::size_t i = 0; i < stats.relation_frequency.size() && i < top_k; ++i)
    out << stats.relation_frequency[i].predicate << ','
        << stats.relation_frequency[i].count << '\n';
}

/// Action-to-relation bipartite weights CSV: action,predicate,count rows.
inline void write_bipartite_csv(const DatasetStats& stats, std::ostream& out) {
  out << "action,predicate,count\n";
  for (const auto& [key, count] : stats.bipartite_weights)
    out << key.first << ',' << key.second << ',' << count << '\n';
}

}  // namespace ovre
