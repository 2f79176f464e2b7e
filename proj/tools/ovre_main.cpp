// ovre_main.cpp - command-line front end: validate, stats, score, convert.
//
// Exit codes are a stable contract: 0 success, 2 I/O failure, 3 embedding
// provider failure, 4 schema violation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ovre/dataset.hpp"
#include "ovre/scoring.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitProvider = 3;
constexpr int kExitSchema = 4;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ovre::FileUnreadable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ovre::ProviderUnavailable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const ovre::MissingEmbedding& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const ovre::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const ovre::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ovre::FileUnreadable("cannot write to " + path);
  return out;
}

void print_diagnostics(const std::vector<ovre::LineDiagnostic>& diags,
                       std::ostream& out) {
  for (const auto& d : diags) out << "line " << d.line << ": " << d.message << '\n';
}

struct ScoreOptions {
  std::string pred_path;
  std::string gt_path;
  std::string pred_format = "auto";  // auto | jsonl | sequence
  std::string out_path;
  std::string per_video_path;
  std::string csv_path;
  std::string lexicon_path;
  unsigned workers = 0;
  bool skip_failed = false;
  ovre::ProviderSpec provider;
};

// Reads the first JSON line to tell sequence files from triplet JSONL.
std::string detect_prediction_format(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ovre::FileUnreadable("cannot open predictions file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_object() && obj.contains("sequence")) return "sequence";
    if (obj.is_object() && obj.contains("triplets")) return "jsonl";
    throw ovre::SchemaError(path + ": cannot detect prediction format (no \"sequence\" or \"triplets\" field)");
  }
  return "jsonl";  // empty file: no predictions at all
}

std::vector<ovre::TripletSet> load_predictions(const ScoreOptions& opt,
                                               const ovre::SerializationConfig& cfg) {
  std::string format = opt.pred_format;
  if (format == "auto") format = detect_prediction_format(opt.pred_path);
  std::vector<ovre::TripletSet> sets;
  std::size_t warnings = 0;
  if (format == "sequence") {
    std::vector<ovre::LineDiagnostic> diags;
    for (const ovre::SequenceRecord& rec :
         ovre::load_sequence_file(opt.pred_path, false, &diags)) {
      ovre::ParseResult parsed =
          ovre::parse_triplet_sequence(rec.sequence, cfg, false, rec.video_id);
      warnings += parsed.diagnostics.size();
      sets.push_back(std::move(parsed.set));
    }
    warnings += diags.size();
  } else {
    ovre::PredictionLoadResult loaded = ovre::load_triplet_predictions(opt.pred_path, cfg);
    warnings = loaded.diagnostics.size();
    sets = std::move(loaded.sets);
  }
  if (warnings)
    std::cerr << "warning: skipped " << warnings
              << " malformed prediction segment(s)/line(s)\n";
  return sets;
}

int cmd_validate(const std::string& path, bool strict) {
  ovre::SerializationConfig cfg;
  if (strict) {
    try {
      ovre::LoadResult result = ovre::load_annotations(path, cfg, true);
      std::cout << result.records.size() << " records, 0 violations\n";
      return kExitOk;
    } catch (const ovre::SchemaError& e) {
      std::cout << e.what() << '\n';
      return kExitSchema;
    }
  }
  ovre::LoadResult result = ovre::load_annotations(path, cfg, false);
  print_diagnostics(result.diagnostics, std::cout);
  std::cout << result.records.size() << " records, " << result.diagnostics.size()
            << " violation(s)\n";
  return kExitOk;
}

int cmd_stats(const std::string& path, std::size_t top_k, const std::string& out_path,
              const std::string& csv_prefix) {
  ovre::LoadResult loaded = ovre::load_annotations(path);
  if (!loaded.diagnostics.empty()) {
    std::cerr << "warning: " << loaded.diagnostics.size() << " malformed line(s) skipped\n";
    print_diagnostics(loaded.diagnostics, std::cerr);
  }
  const ovre::DatasetStats stats = ovre::compute_stats(loaded.records);
  const ovre::SplitReport splits = ovre::split_report(loaded.records);

  nlohmann::ordered_json j = stats.to_json(top_k);
  j["splits"] = {{"train", splits.train}, {"test", splits.test}};
  if (!splits.leaked.empty()) j["split_leakage"] = splits.leaked;

  std::cout << "videos: " << stats.n_videos << "  triplets: " << stats.n_triplets
            << "  train: " << splits.train << "  test: " << splits.test << '\n';
  for (const std::string& id : splits.leaked)
    std::cout << "split leakage: " << id << '\n';
  for (std::size_t i = 0; i < stats.relation_frequency.size() && i < top_k; ++i)
    std::cout << "  " << stats.relation_frequency[i].predicate << ": "
              << stats.relation_frequency[i].count << '\n';

  if (!out_path.empty()) {
    auto out = open_output(out_path);
    out << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
  if (!csv_prefix.empty()) {
    auto rel = open_output(csv_prefix + ".relations.csv");
    ovre::write_relation_csv(stats, top_k, rel);
    auto bip = open_output(csv_prefix + ".bipartite.csv");
    ovre::write_bipartite_csv(stats, bip);
  }
  return kExitOk;
}

int cmd_score(const ScoreOptions& opt) {
  // Reject bad flag combinations before touching any file.
  if (opt.provider.kind == "precomputed-file" && opt.provider.path.empty())
    throw std::invalid_argument("--provider precomputed-file requires --embeddings-file");
  if (opt.provider.kind == "remote-service" && opt.provider.endpoint.empty())
    throw std::invalid_argument(
        "--provider remote-service requires --endpoint or OVRE_EMBED_ENDPOINT");
  if (opt.provider.retries < 1) throw std::invalid_argument("--retries must be >= 1");

  ovre::ScoringConfig cfg;
  cfg.provider = opt.provider;
  cfg.workers = opt.workers;
  cfg.skip_failed_videos = opt.skip_failed;
  cfg.per_video_breakdown = !opt.per_video_path.empty() || !opt.csv_path.empty();
  std::shared_ptr<ovre::SynonymLexicon> lexicon;
  if (!opt.lexicon_path.empty()) {
    lexicon = std::make_shared<ovre::SynonymLexicon>(
        ovre::SynonymLexicon::load(opt.lexicon_path));
    cfg.lexicon = lexicon;
  }

  ovre::LoadResult gt_loaded = ovre::load_annotations(opt.gt_path, cfg.serialization);
  if (!gt_loaded.diagnostics.empty()) {
    std::cerr << "ground truth has " << gt_loaded.diagnostics.size() << " invalid line(s):\n";
    print_diagnostics(gt_loaded.diagnostics, std::cerr);
    return kExitSchema;
  }
  std::vector<ovre::TripletSet> gts;
  gts.reserve(gt_loaded.records.size());
  for (const ovre::AnnotationRecord& rec : gt_loaded.records)
    gts.push_back(rec.triplet_set());

  const std::vector<ovre::TripletSet> preds = load_predictions(opt, cfg.serialization);

  const ovre::MetricReport report = ovre::score_corpus(preds, gts, cfg);

  char line[160];
  std::snprintf(line, sizeof(line),
                "B@1 %.2f  B@2 %.2f  B@3 %.2f  CIDEr %.2f  METEOR %.2f",
                report.bleu1, report.bleu2, report.bleu3, report.cider, report.meteor);
  std::cout << line << '\n';
  std::cout << "videos " << report.n_videos << "  pairs " << report.n_pairs
            << "  zero-padded " << report.n_zero_padded << "  surplus predictions "
            << report.n_unmatched_pred << "  provider " << report.provider_kind << '\n';

  if (!opt.out_path.empty()) {
    auto out = open_output(opt.out_path);
    out << report.to_json().dump(2) << '\n';
  } else {
    std::cout << report.to_json().dump(2) << '\n';
  }
  if (!opt.per_video_path.empty()) {
    auto out = open_output(opt.per_video_path);
    ovre::write_per_video_jsonl(report, out);
  }
  if (!opt.csv_path.empty()) {
    auto out = open_output(opt.csv_path);
    ovre::write_scores_csv(report, out);
  }
  return kExitOk;
}

int cmd_convert(const std::string& in_path, const std::string& from,
                const std::string& to, const std::string& out_path) {
  ovre::SerializationConfig cfg;
  if (from == to) throw ovre::SchemaError("--from and --to must differ");
  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file_out = open_output(out_path);
    out = &file_out;
  }
  if (from == "jsonl") {
    ovre::LoadResult loaded = ovre::load_annotations(in_path, cfg);
    if (!loaded.diagnostics.empty()) {
      print_diagnostics(loaded.diagnostics, std::cerr);
      return kExitSchema;
    }
    std::vector<ovre::SequenceRecord> records;
    records.reserve(loaded.records.size());
    for (const ovre::AnnotationRecord& rec : loaded.records)
      records.push_back({rec.video_id,
                         ovre::serialize_triplet_set(rec.triplet_set(), cfg),
                         rec.split, rec.action_labels});
    ovre::write_sequence_file(records, *out);
    return kExitOk;
  }
  // sequence -> jsonl
  std::vector<ovre::LineDiagnostic> diags;
  const std::vector<ovre::SequenceRecord> seqs =
      ovre::load_sequence_file(in_path, false, &diags);
  if (!diags.empty()) {
    print_diagnostics(diags, std::cerr);
    return kExitSchema;
  }
  std::vector<ovre::AnnotationRecord> records;
  bool missing_metadata = false;
  for (const ovre::SequenceRecord& seq : seqs) {
    ovre::ParseResult parsed = ovre::parse_triplet_sequence(seq.sequence, cfg, false, seq.video_id);
    if (!parsed.diagnostics.empty()) {
      for (const auto& d : parsed.diagnostics)
        std::cerr << "video " << seq.video_id << " segment " << d.segment_index << ": "
                  << d.reason << '\n';
      return kExitSchema;
    }
    ovre::AnnotationRecord rec;
    rec.video_id = seq.video_id;
    rec.split = seq.split.empty() ? "train" : seq.split;
    rec.action_labels = seq.action_labels.empty() ? std::vector<std::string>{"unknown"}
                                                  : seq.action_labels;
    if (seq.split.empty() || seq.action_labels.empty()) missing_metadata = true;
    rec.triplets = std::move(parsed.set.triplets);
    records.push_back(std::move(rec));
  }
  if (missing_metadata)
    std::cerr << "warning: sequence file lacks split/action_labels; defaults filled in\n";
  ovre::write_annotation_file(records, *out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation and dataset tooling for open-vocabulary video relation triplets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat config file; command-line flags win on conflict");

  // validate
  std::string val_path;
  bool val_strict = false;
  CLI::App* validate = app.add_subcommand("validate", "Validate an annotation JSONL file");
  validate->add_option("annotations", val_path, "Annotation JSONL path")->required();
  validate->add_flag("--strict", val_strict, "Fail on the first violation");

  // stats
  std::string stats_path, stats_out, stats_csv;
  std::size_t stats_top_k = 25;
  CLI::App* stats = app.add_subcommand("stats", "Dataset statistics and split accounting");
  stats->add_option("annotations", stats_path, "Annotation JSONL path")->required();
  stats->add_option("--top-k", stats_top_k, "Relation table size (default 25)");
  stats->add_option("--out", stats_out, "Write stats JSON here instead of stdout");
  stats->add_option("--csv", stats_csv, "CSV prefix for <prefix>.relations.csv and <prefix>.bipartite.csv");

  // score
  ScoreOptions opt;
  CLI::App* score = app.add_subcommand("score", "Score predictions against ground truth");
  score->add_option("predictions", opt.pred_path, "Predictions (triplet JSONL or sequence JSONL)")
      ->required();
  score->add_option("ground_truth", opt.gt_path, "Ground-truth annotation JSONL")->required();
  score->add_option("--pred-format", opt.pred_format, "auto | jsonl | sequence")
      ->check(CLI::IsMember({"auto", "jsonl", "sequence"}));
  score->add_option("--provider", opt.provider.kind,
                    "hashed-fallback | precomputed-file | remote-service")
      ->check(CLI::IsMember({"hashed-fallback", "precomputed-file", "remote-service"}));
  score->add_option("--dim", opt.provider.dimension, "Hashed provider dimension (default 256)");
  score->add_option("--embeddings-file", opt.provider.path, "Precomputed embedding JSONL");
  score->add_option("--endpoint", opt.provider.endpoint, "Embedding service base URL")
      ->envname("OVRE_EMBED_ENDPOINT");
  score->add_option("--retries", opt.provider.retries, "Remote attempts before giving up (default 3)");
  score->add_option("--backoff-ms", opt.provider.backoff_ms,
                    "Initial retry backoff in milliseconds (default 100)");
  score->add_option("--workers", opt.workers, "Worker threads (default: logical cores)");
  score->add_option("--out", opt.out_path, "Write the report JSON here instead of stdout");
  score->add_option("--per-video", opt.per_video_path, "Write per-video breakdown JSONL here");
  score->add_option("--csv", opt.csv_path, "Write per-video score CSV here");
  score->add_option("--lexicon", opt.lexicon_path, "Synonym lexicon JSONL for METEOR");
  score->add_flag("--skip-failed", opt.skip_failed, "Skip videos that fail instead of aborting");

  // convert
  std::string conv_in, conv_from, conv_to, conv_out;
  CLI::App* convert = app.add_subcommand("convert", "Convert between annotation and sequence files");
  convert->add_option("input", conv_in, "Input path")->required();
  convert->add_option("--from", conv_from, "jsonl | sequence")
      ->required()
      ->check(CLI::IsMember({"jsonl", "sequence"}));
  convert->add_option("--to", conv_to, "jsonl | sequence")
      ->required()
      ->check(CLI::IsMember({"jsonl", "sequence"}));
  convert->add_option("--out", conv_out, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return guarded([&] { return cmd_validate(val_path, val_strict); });
  if (stats->parsed())
    return guarded([&] { return cmd_stats(stats_path, stats_top_k, stats_out, stats_csv); });
  if (score->parsed()) return guarded([&] { return cmd_score(opt); });
  if (convert->parsed())
    return guarded([&] { return cmd_convert(conv_in, conv_from, conv_to, conv_out); });
  return kExitOk;
}
