// test_cli.cpp - end-to-end runs of the ovre binary and its exit codes.
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ovre/dataset.hpp"

namespace {

const std::string kFixtures = OVRE_FIXTURE_DIR;
const std::string kBinary = OVRE_CLI_BIN;

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = kBinary + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string temp_path(const std::string& stem) {
  static int counter = 0;
  return "cli_tmp_" + std::to_string(counter++) + "_" + stem;
}

}  // namespace

TEST_CASE("validate: clean fixture exits 0") {
  const CliResult r = run_cli("validate " + kFixtures + "/sample50.jsonl");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("50 records, 0 violation") != std::string::npos);
}

TEST_CASE("validate: lenient mode reports but passes") {
  const CliResult r = run_cli("validate " + kFixtures + "/broken.jsonl");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("5 violation(s)") != std::string::npos);
}

TEST_CASE("validate: strict mode fails on violations") {
  const CliResult r = run_cli("validate --strict " + kFixtures + "/broken.jsonl");
  CHECK(r.exit_code == 4);
}

TEST_CASE("validate: missing file exits 2") {
  const CliResult r = run_cli("validate no_such_file.jsonl");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("stats: emits counts and the top-k table") {
  const std::string out = temp_path("stats.json");
  const CliResult r =
      run_cli("stats " + kFixtures + "/sample50.jsonl --top-k 3 --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("videos: 50") != std::string::npos);
  CHECK(r.output.find("train: 40") != std::string::npos);

  std::ifstream in(out);
  REQUIRE(in.good());
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["n_videos"] == 50);
  CHECK(j["n_triplets"] == 101);
  CHECK(j["splits"]["train"] == 40);
  CHECK(j["splits"]["test"] == 10);
  REQUIRE(j["top_relations"].size() == 3);
  CHECK(j["top_relations"][0]["predicate"] == "eats");
  std::remove(out.c_str());
}

TEST_CASE("stats: top-k 0 is a valid run with an empty table") {
  const std::string out = temp_path("stats0.json");
  const CliResult r =
      run_cli("stats " + kFixtures + "/sample50.jsonl --top-k 0 --out " + out);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(out);
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["top_relations"].empty());
  std::remove(out.c_str());
}

TEST_CASE("stats: csv side outputs") {
  const std::string out = temp_path("stats.json");
  const std::string prefix = temp_path("plots");
  const CliResult r = run_cli("stats " + kFixtures + "/sample50.jsonl --out " + out +
                              " --csv " + prefix);
  REQUIRE(r.exit_code == 0);
  std::ifstream rel(prefix + ".relations.csv");
  std::ifstream bip(prefix + ".bipartite.csv");
  CHECK(rel.good());
  CHECK(bip.good());
  std::string header;
  std::getline(rel, header);
  CHECK(header == "predicate,count");
  std::remove(out.c_str());
  std::remove((prefix + ".relations.csv").c_str());
  std::remove((prefix + ".bipartite.csv").c_str());
}

TEST_CASE("score: toy corpus with the hashed provider") {
  const std::string out = temp_path("report.json");
  const CliResult r = run_cli("score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                              "/toy_gt.jsonl --workers 1 --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("B@1") != std::string::npos);

  std::ifstream in(out);
  REQUIRE(in.good());
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["bleu1"].get<double>() == Catch::Approx(58.18275568585107).margin(1e-6));
  CHECK(j["cider"].get<double>() == Catch::Approx(41.541449577377385).margin(1e-6));
  CHECK(j["meteor"].get<double>() == Catch::Approx(65.6105324074074).margin(1e-6));
  CHECK(j["n_zero_padded"] == 2);
  CHECK(j["provider_kind"] == "hashed-fallback");
  std::remove(out.c_str());
}

TEST_CASE("score: sequence predictions give the same report") {
  const std::string out_a = temp_path("report_a.json");
  const std::string out_b = temp_path("report_b.json");
  REQUIRE(run_cli("score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                  "/toy_gt.jsonl --out " + out_a).exit_code == 0);
  REQUIRE(run_cli("score " + kFixtures + "/toy_pred.sequence.jsonl " + kFixtures +
                  "/toy_gt.jsonl --out " + out_b).exit_code == 0);
  std::ifstream a(out_a), b(out_b);
  nlohmann::json ja = nlohmann::json::parse(a), jb = nlohmann::json::parse(b);
  CHECK(ja == jb);
  std::remove(out_a.c_str());
  std::remove(out_b.c_str());
}

TEST_CASE("score: empty prediction file zeroes every metric") {
  const std::string empty = temp_path("empty_pred.jsonl");
  {
    std::ofstream out(empty);
  }
  const std::string report = temp_path("zeros.json");
  const CliResult r = run_cli("score " + empty + " " + kFixtures +
                              "/toy_gt.jsonl --out " + report);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(report);
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["bleu1"] == 0.0);
  CHECK(j["bleu2"] == 0.0);
  CHECK(j["bleu3"] == 0.0);
  CHECK(j["cider"] == 0.0);
  CHECK(j["meteor"] == 0.0);
  CHECK(j["n_zero_padded"] == 6);
  std::remove(empty.c_str());
  std::remove(report.c_str());
}

TEST_CASE("score: precomputed provider runs and labels the report") {
  const std::string out = temp_path("pre.json");
  const CliResult r = run_cli(
      "score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
      "/toy_gt.jsonl --provider precomputed-file --embeddings-file " + kFixtures +
      "/toy_embeddings.jsonl --out " + out);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(out);
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["provider_kind"] == "precomputed-file");
  CHECK(j["bleu1"].get<double>() == Catch::Approx(58.18275568585107).margin(1e-6));
  std::remove(out.c_str());
}

TEST_CASE("score: per-video and csv outputs") {
  const std::string pv = temp_path("pv.jsonl");
  const std::string csv = temp_path("scores.csv");
  const CliResult r = run_cli("score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                              "/toy_gt.jsonl --per-video " + pv + " --csv " + csv);
  REQUIRE(r.exit_code == 0);
  std::ifstream pvf(pv);
  std::string line;
  int lines = 0;
  while (std::getline(pvf, line)) {
    CHECK_NOTHROW(nlohmann::json::parse(line));
    ++lines;
  }
  CHECK(lines == 3);
  std::ifstream csvf(csv);
  std::getline(csvf, line);
  CHECK(line.rfind("video_id,", 0) == 0);
  std::remove(pv.c_str());
  std::remove(csv.c_str());
}

TEST_CASE("score: unknown predicted video exits 4") {
  const std::string pred = temp_path("stranger.jsonl");
  {
    std::ofstream out(pred);
    out << R"({"video_id": "not_in_gt", "triplets": [{"subject": "a", "predicate": "b", "object": "c"}]})"
        << '\n';
  }
  const CliResult r = run_cli("score " + pred + " " + kFixtures + "/toy_gt.jsonl");
  CHECK(r.exit_code == 4);
  std::remove(pred.c_str());
}

TEST_CASE("score: missing input exits 2") {
  CHECK(run_cli("score missing.jsonl " + kFixtures + "/toy_gt.jsonl").exit_code == 2);
  CHECK(run_cli("score " + kFixtures + "/toy_pred.jsonl missing_gt.jsonl").exit_code == 2);
}

TEST_CASE("score: invalid ground truth exits 4") {
  const CliResult r = run_cli("score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                              "/broken.jsonl");
  CHECK(r.exit_code == 4);
}

TEST_CASE("convert: jsonl -> sequence -> jsonl round trip") {
  const std::string seq = temp_path("conv.sequence.jsonl");
  const std::string back = temp_path("conv.back.jsonl");
  REQUIRE(run_cli("convert " + kFixtures + "/toy_gt.jsonl --from jsonl --to sequence --out " +
                  seq).exit_code == 0);
  REQUIRE(run_cli("convert " + seq + " --from sequence --to jsonl --out " + back)
              .exit_code == 0);

  ovre::LoadResult original = ovre::load_annotations(kFixtures + "/toy_gt.jsonl");
  ovre::LoadResult rebuilt = ovre::load_annotations(back);
  REQUIRE(rebuilt.diagnostics.empty());
  REQUIRE(rebuilt.records.size() == original.records.size());
  for (std::size_t i = 0; i < rebuilt.records.size(); ++i) {
    CHECK(rebuilt.records[i].video_id == original.records[i].video_id);
    CHECK(rebuilt.records[i].split == original.records[i].split);
    CHECK(rebuilt.records[i].action_labels == original.records[i].action_labels);
    CHECK(ovre::same_triplets(rebuilt.records[i].triplet_set(),
                              original.records[i].triplet_set()));
  }
  // A 2-triplet record's sequence carries exactly one separator.
  std::ifstream seqf(seq);
  std::string line;
  bool saw_two = false;
  while (std::getline(seqf, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    if (j["video_id"] == "vid_b") {
      const std::string s = j["sequence"].get<std::string>();
      CHECK(s.find("<triplet>") != std::string::npos);
      CHECK(s.find("<triplet>") == s.rfind("<triplet>"));
      saw_two = true;
    }
  }
  CHECK(saw_two);
  std::remove(seq.c_str());
  std::remove(back.c_str());
}

TEST_CASE("convert: malformed sequence lines exit 4 with diagnostics") {
  const std::string bad = temp_path("bad.sequence.jsonl");
  {
    std::ofstream out(bad);
    out << R"({"video_id": "v1", "sequence": "cat , push"})" << '\n';
  }
  const CliResult r = run_cli("convert " + bad + " --from sequence --to jsonl");
  CHECK(r.exit_code == 4);
  CHECK(r.output.find("segment") != std::string::npos);
  std::remove(bad.c_str());
}

TEST_CASE("commands never mutate their input files") {
  std::ostringstream before;
  {
    std::ifstream in(kFixtures + "/toy_gt.jsonl");
    before << in.rdbuf();
  }
  REQUIRE(run_cli("score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                  "/toy_gt.jsonl").exit_code == 0);
  REQUIRE(run_cli("stats " + kFixtures + "/toy_gt.jsonl").exit_code == 0);
  std::ostringstream after;
  {
    std::ifstream in(kFixtures + "/toy_gt.jsonl");
    after << in.rdbuf();
  }
  CHECK(before.str() == after.str());
}

TEST_CASE("OVRE_EMBED_ENDPOINT feeds the remote provider") {
  // Endpoint comes from the environment; the closed discard port means the
  // provider is reached and fails, proving the wiring.
  const std::string cmd = "OVRE_EMBED_ENDPOINT=http://127.0.0.1:9 " + kBinary +
                          " score " + kFixtures + "/toy_pred.jsonl " + kFixtures +
                          "/toy_gt.jsonl --provider remote-service --retries 1 "
                          "--backoff-ms 1 >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 3);
}

TEST_CASE("config file supplies defaults that flags override") {
  const std::string cfg = temp_path("ovre.ini");
  {
    std::ofstream out(cfg);
    out << "[score]\nworkers=1\n";
  }
  const CliResult r = run_cli("--config " + cfg + " score " + kFixtures +
                              "/toy_pred.jsonl " + kFixtures + "/toy_gt.jsonl");
  CHECK(r.exit_code == 0);
  std::remove(cfg.c_str());
}
