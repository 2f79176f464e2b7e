// test_embedding.cpp - providers, cosine similarity, similarity matrices.
#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "ovre/embedding.hpp"
#include "ovre/providers.hpp"
#include "ovre/remote.hpp"

using namespace ovre;

namespace {

double l2(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Triplet trip(const std::string& s, const std::string& p, const std::string& o) {
  return {{s}, {p}, {o}};
}

// Counts how many texts reach the wrapped provider; for cache assertions.
class CountingProvider final : public EmbeddingProvider {
 public:
  std::string kind() const override { return "hashed-fallback"; }
  std::size_t dimension() const override { return inner_.dimension(); }
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    texts_seen += texts.size();
    return inner_.embed_batch(texts);
  }
  std::atomic<std::size_t> texts_seen{0};

 private:
  HashedProvider inner_{64};
};

std::string write_temp_jsonl(const std::vector<std::string>& lines) {
  static int counter = 0;
  std::string path = "embed_fixture_" + std::to_string(counter++) + ".jsonl";
  std::ofstream out(path);
  for (const auto& line : lines) out << line << '\n';
  return path;
}

// Binds, serves on a background thread, and always joins, so a failing
// assertion cannot leave a joinable thread behind.
struct StubServer {
  httplib::Server server;
  int port = 0;
  std::thread runner;

  explicit StubServer(httplib::Server::Handler handler) {
    server.Post("/embed", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    runner = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    runner.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("hashed_ngram_embed is deterministic and unit norm") {
  const EmbeddingVector a = hashed_ngram_embed("cat push monitor", 256);
  const EmbeddingVector b = hashed_ngram_embed("cat push monitor", 256);
  CHECK(a == b);
  CHECK(a.size() == 256);
  CHECK(l2(a) == Catch::Approx(1.0).margin(1e-9));
  CHECK(cosine_similarity(a, b) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("hashed_ngram_embed degenerate inputs") {
  const EmbeddingVector empty = hashed_ngram_embed("", 32);
  CHECK(empty[0] == 1.0);
  CHECK(l2(empty) == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(hashed_ngram_embed("x", 4), std::invalid_argument);
  // Short strings still embed.
  CHECK(l2(hashed_ngram_embed("ab", 8)) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("hashed embeddings separate unrelated text") {
  const EmbeddingVector a = hashed_ngram_embed("cat push monitor", 256);
  const EmbeddingVector c = hashed_ngram_embed("woman slices bread", 256);
  const double sim = cosine_similarity(a, c);
  CHECK(sim > -1.0 - 1e-9);
  CHECK(sim < 0.9);
}

TEST_CASE("cosine_similarity basics") {
  CHECK(cosine_similarity({1, 0}, {0, 1}) == 0.0);
  CHECK(cosine_similarity({1, 0}, {-1, 0}) == Catch::Approx(-1.0).margin(1e-12));
  CHECK(cosine_similarity({3, 4}, {3, 4}) == Catch::Approx(1.0).margin(1e-9));
  CHECK(cosine_similarity({0, 0}, {1, 0}) == 0.0);  // zero norm rule
  CHECK_THROWS_AS(cosine_similarity({1, 0}, {1, 0, 0}), DimensionMismatch);
}

TEST_CASE("embed_batch contract") {
  HashedProvider provider(64);
  CHECK(embed_batch({}, provider).empty());
  const auto out = embed_batch({"a b c", "a b c", "x"}, provider);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == out[1]);
  CHECK(out[0] != out[2]);
}

TEST_CASE("build_similarity_matrix shapes and values") {
  HashedProvider provider(128);
  const std::vector<Triplet> preds = {trip("cat", "push", "monitor"),
                                      trip("dog", "chases", "ball")};
  const std::vector<Triplet> gts = {trip("cat", "push", "monitor"),
                                    trip("dog", "chases", "ball"),
                                    trip("man", "holds", "guitar")};
  const SimilarityMatrix S = build_similarity_matrix(preds, gts, provider);
  REQUIRE(S.rows() == 2);
  REQUIRE(S.cols() == 3);
  CHECK(S.at(0, 0) == Catch::Approx(1.0).margin(1e-9));
  CHECK(S.at(1, 1) == Catch::Approx(1.0).margin(1e-9));
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = 0; j < S.cols(); ++j) {
      CHECK(S.at(i, j) >= -1.0 - 1e-9);
      CHECK(S.at(i, j) <= 1.0 + 1e-9);
    }

  const SimilarityMatrix empty = build_similarity_matrix(
      std::vector<Triplet>{}, gts, provider);
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 3);
  CHECK(empty.empty());
}

TEST_CASE("build_similarity_matrix permutation behavior") {
  HashedProvider provider(64);
  const std::vector<Triplet> preds = {trip("a", "b", "c"), trip("d", "e", "f")};
  const std::vector<Triplet> gts = {trip("g", "h", "i"), trip("j", "k", "l"),
                                    trip("a", "b", "c")};
  const SimilarityMatrix S = build_similarity_matrix(preds, gts, provider);
  const std::vector<Triplet> preds_swapped = {preds[1], preds[0]};
  const SimilarityMatrix T = build_similarity_matrix(preds_swapped, gts, provider);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(S.at(0, j) == T.at(1, j));
    CHECK(S.at(1, j) == T.at(0, j));
  }
}

TEST_CASE("build_similarity_matrix embeds each unique sentence once") {
  auto counter = std::make_shared<CountingProvider>();
  const std::vector<Triplet> preds = {trip("a", "b", "c"), trip("a", "b", "c"),
                                      trip("d", "e", "f")};
  const std::vector<Triplet> gts = {trip("a", "b", "c"), trip("g", "h", "i")};
  build_similarity_matrix(preds, gts, *counter);
  CHECK(counter->texts_seen == 3);  // "a b c", "d e f", "g h i"
}

TEST_CASE("caching provider reuses vectors across calls") {
  auto counter = std::make_shared<CountingProvider>();
  CachingProvider cache(counter);
  const std::vector<std::string> texts = {"one two three", "four five six"};
  const auto first = cache.embed_batch(texts);
  const auto second = cache.embed_batch(texts);
  CHECK(first == second);
  CHECK(counter->texts_seen == 2);
  CHECK(cache.cache_size() == 2);
  cache.embed_batch({"one two three", "seven eight nine"});
  CHECK(counter->texts_seen == 3);
}

TEST_CASE("caching provider is usable from concurrent workers") {
  auto counter = std::make_shared<CountingProvider>();
  CachingProvider cache(counter);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&] {
      for (int i = 0; i < 50; ++i)
        cache.embed_batch({"alpha beta", "gamma delta", "epsilon zeta"});
    });
  for (auto& t : pool) t.join();
  CHECK(cache.cache_size() == 3);
  const auto v = cache.embed_batch({"alpha beta"});
  CHECK(v[0] == hashed_ngram_embed("alpha beta", 64));
}

TEST_CASE("precomputed provider loads and serves vectors") {
  const std::string path = write_temp_jsonl({
      R"({"text": "cat push monitor", "vector": [1.0, 0.0, 0.0]})",
      R"({"text": "dog chases ball", "vector": [0.0, 1.0, 0.0]})",
      R"({"text": "dog chases ball", "vector": [0.0, 1.0, 0.0]})",
  });
  PrecomputedProvider provider(path);
  CHECK(provider.kind() == "precomputed-file");
  CHECK(provider.dimension() == 3);
  CHECK(provider.size() == 2);
  const auto out = provider.embed_batch({"dog chases ball", "cat push monitor"});
  CHECK(out[0] == EmbeddingVector{0.0, 1.0, 0.0});
  CHECK(out[1] == EmbeddingVector{1.0, 0.0, 0.0});
  CHECK_THROWS_AS(provider.embed_batch({"missing text"}), MissingEmbedding);
  std::remove(path.c_str());
}

TEST_CASE("precomputed provider rejects bad files") {
  SECTION("duplicate text with differing vector") {
    const std::string path = write_temp_jsonl({
        R"({"text": "a", "vector": [1.0, 0.0]})",
        R"({"text": "a", "vector": [0.0, 1.0]})",
    });
    CHECK_THROWS_AS(PrecomputedProvider(path), SchemaError);
    std::remove(path.c_str());
  }
  SECTION("ragged dimensions") {
    const std::string path = write_temp_jsonl({
        R"({"text": "a", "vector": [1.0, 0.0]})",
        R"({"text": "b", "vector": [1.0]})",
    });
    CHECK_THROWS_AS(PrecomputedProvider(path), DimensionMismatch);
    std::remove(path.c_str());
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(PrecomputedProvider("no_such_file.jsonl"), FileUnreadable);
  }
  SECTION("malformed line") {
    const std::string path = write_temp_jsonl({"not json"});
    CHECK_THROWS_AS(PrecomputedProvider(path), SchemaError);
    std::remove(path.c_str());
  }
}

TEST_CASE("resolve_provider dispatches on kind") {
  ProviderSpec spec;
  spec.kind = "hashed-fallback";
  spec.dimension = 64;
  CHECK(resolve_provider(spec)->kind() == "hashed-fallback");
  spec.kind = "no-such-kind";
  CHECK_THROWS_AS(resolve_provider(spec), std::invalid_argument);
  spec.kind = "precomputed-file";
  spec.path = "";
  CHECK_THROWS_AS(resolve_provider(spec), std::invalid_argument);
}

TEST_CASE("remote provider round trip against a stub service") {
  StubServer stub([](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out;
    out["dimension"] = 16;
    auto vectors = nlohmann::json::array();
    for (const auto& text : body["texts"])
      vectors.push_back(hashed_ngram_embed(text.get<std::string>(), 16));
    out["vectors"] = vectors;
    res.set_content(out.dump(), "application/json");
  });
  REQUIRE(stub.port > 0);

  RemoteProvider provider(stub.endpoint(), 3, 10);
  const auto out = provider.embed_batch({"cat push monitor", "dog chases ball"});
  REQUIRE(out.size() == 2);
  CHECK(provider.dimension() == 16);
  CHECK(out[0] == hashed_ngram_embed("cat push monitor", 16));
  CHECK(provider.attempts() == 1);
}

TEST_CASE("remote provider retries exactly as configured, then stays down") {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  REQUIRE(stub.port > 0);

  RemoteProvider provider(stub.endpoint(), 4, 1);
  CHECK_THROWS_AS(provider.embed_batch({"text"}), ProviderUnavailable);
  CHECK(hits == 4);
  CHECK(provider.attempts() == 4);
  // The session is dead: further batches fail without new requests.
  CHECK_THROWS_AS(provider.embed_batch({"more text"}), ProviderUnavailable);
  CHECK(hits == 4);
  CHECK(provider.attempts() == 4);
}

TEST_CASE("remote provider fails cleanly when the service is down") {
  RemoteProvider provider("http://127.0.0.1:9", 2, 1);  // discard port, closed
  CHECK_THROWS_AS(provider.embed_batch({"text"}), ProviderUnavailable);
  CHECK(provider.attempts() == 2);
}

TEST_CASE("remote provider rejects malformed responses after retries") {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });
  REQUIRE(stub.port > 0);

  RemoteProvider provider(stub.endpoint(), 2, 1);
  CHECK_THROWS_AS(provider.embed_batch({"text"}), ProviderUnavailable);
  CHECK(provider.attempts() == 2);
}
