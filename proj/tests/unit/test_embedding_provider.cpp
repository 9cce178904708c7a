#include <doctest.h>

#include "replaykit/data_io.hpp"
#include "replaykit/embedding_provider.hpp"
#include "support/expect.hpp"
#include "support/stub_server.hpp"
#include "support/tempdir.hpp"

using namespace replaykit;
using testing::error_code_of;
using testing::StubServer;

namespace {

ProviderConfig http_config(const std::string& url) {
  ProviderConfig cfg;
  cfg.mode = ProviderMode::Http;
  cfg.endpoint_url = url;
  cfg.batch_size = 3;
  cfg.max_in_flight = 4;
  cfg.timeout = std::chrono::milliseconds(5000);
  cfg.retry_backoff = std::chrono::milliseconds(1);
  return cfg;
}

std::vector<std::string> tagged_texts(int n) {
  std::vector<std::string> texts;
  for (int i = 0; i < n; ++i) texts.push_back("t" + std::to_string(i));
  return texts;
}

}  // namespace

TEST_CASE("caption keys are SHA-256 hex") {
  CHECK(caption_key("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(caption_key("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("file provider returns stored vectors unchanged") {
  EmbeddingTable table;
  table.add(caption_key("a red car"), std::vector<float>{0.25f, -3.0f, 7.5f});
  table.add("plain key", std::vector<float>{1.0f, 2.0f, 3.0f});
  FileEmbeddingProvider provider(table);
  CHECK(provider.embed_texts({}).empty());
  const auto out = provider.embed_texts({"a red car", "plain key", "a red car"});
  REQUIRE(out.size() == 3);
  CHECK(out[0] == Vector{0.25f, -3.0f, 7.5f});
  CHECK(out[1] == Vector{1.0f, 2.0f, 3.0f});
  CHECK(out[2] == out[0]);
  CHECK(error_code_of([&] { provider.embed_texts({"unknown caption"}); }) == ErrorCode::MissingEmbedding);
}

TEST_CASE("http provider: shape and order for a 768-dim service") {
  StubServer server(StubServer::tagged(768));
  HttpEmbeddingProvider provider(http_config(server.url()));
  const auto out = provider.embed_texts({"t1", "t0"});
  REQUIRE(out.size() == 2);
  CHECK(out[0].size() == 768);
  CHECK(out[1].size() == 768);
  CHECK(out[0][0] == 1.0f);
  CHECK(out[1][0] == 0.0f);
}

TEST_CASE("http provider: order preserved across concurrent batches") {
  StubServer server(StubServer::tagged(4, 15));
  auto cfg = http_config(server.url());
  cfg.max_in_flight = 6;
  HttpEmbeddingProvider provider(cfg);
  const auto texts = tagged_texts(61);
  const auto out = provider.embed_texts(texts);
  REQUIRE(out.size() == texts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i][0] == static_cast<float>(i));
    CHECK(out[i][1] == static_cast<float>(i) + 0.5f);
  }
  CHECK(server.calls() == 21);  // ceil(61 / 3)
}

TEST_CASE("http provider: cached texts issue no requests") {
  StubServer server(StubServer::tagged(4));
  HttpEmbeddingProvider provider(http_config(server.url()));
  const auto texts = tagged_texts(10);
  const auto first = provider.embed_texts(texts);
  const int calls = server.calls();
  const auto second = provider.embed_texts(texts);
  CHECK(server.calls() == calls);
  CHECK(second == first);

  // duplicates within one request are fetched once
  const auto third = provider.embed_texts({"t50", "t50", "t50"});
  CHECK(server.calls() == calls + 1);
  CHECK(third[0] == third[2]);
}

TEST_CASE("http provider: path prefix in the endpoint") {
  StubServer server(StubServer::tagged(2), "/v1");
  HttpEmbeddingProvider provider(http_config(server.url() + "/v1/"));
  CHECK(provider.embed_texts({"t3"})[0][0] == 3.0f);
}

TEST_CASE("http provider: 5xx is retried, then succeeds") {
  auto ok = StubServer::tagged(2);
  StubServer server([&](const nlohmann::json& body, int call, httplib::Response& res) {
    if (call < 2) {
      res.status = 503;
      return;
    }
    ok(body, call, res);
  });
  HttpEmbeddingProvider provider(http_config(server.url()));
  CHECK(provider.embed_texts({"t7"})[0][0] == 7.0f);
  CHECK(provider.remote_requests() == 3);
}

TEST_CASE("http provider: persistent 5xx becomes ServiceUnavailable after three retries") {
  StubServer server([](const nlohmann::json&, int, httplib::Response& res) { res.status = 500; });
  HttpEmbeddingProvider provider(http_config(server.url()));
  CHECK(error_code_of([&] { provider.embed_texts({"t1"}); }) == ErrorCode::ServiceUnavailable);
  CHECK(server.calls() == 4);
}

TEST_CASE("http provider: 4xx is not retried") {
  StubServer server([](const nlohmann::json&, int, httplib::Response& res) { res.status = 413; });
  HttpEmbeddingProvider provider(http_config(server.url()));
  CHECK(error_code_of([&] { provider.embed_texts({"t1"}); }) == ErrorCode::ServiceRejected);
  CHECK(server.calls() == 1);
}

TEST_CASE("http provider: unreachable service") {
  auto cfg = http_config("http://127.0.0.1:1");
  cfg.max_retries = 1;
  HttpEmbeddingProvider provider(cfg);
  CHECK(error_code_of([&] { provider.embed_texts({"t1"}); }) == ErrorCode::ServiceUnavailable);
}

TEST_CASE("http provider: malformed shapes") {
  StubServer short_rows([](const nlohmann::json&, int, httplib::Response& res) {
    res.set_content(R"({"dim":2,"embeddings":[[1,2]]})", "application/json");
  });
  HttpEmbeddingProvider a(http_config(short_rows.url()));
  CHECK(error_code_of([&] { a.embed_texts({"t1", "t2"}); }) == ErrorCode::DimensionMismatch);

  std::atomic<int> dim{3};
  StubServer shifting([&](const nlohmann::json& body, int, httplib::Response& res) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < body.at("texts").size(); ++i) rows.push_back(std::vector<float>(dim, 0.5f));
    res.set_content(nlohmann::json{{"dim", dim.load()}, {"embeddings", rows}}.dump(), "application/json");
  });
  HttpEmbeddingProvider b(http_config(shifting.url()));
  b.embed_texts({"t1"});
  dim = 5;
  CHECK(error_code_of([&] { b.embed_texts({"t2"}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("cache flush persists fetched vectors and is reloaded") {
  testing::TempDir dir;
  StubServer server(StubServer::tagged(4));
  auto cfg = http_config(server.url());
  cfg.cache_path = dir / "cache.emb";
  {
    HttpEmbeddingProvider provider(cfg);
    provider.embed_texts(tagged_texts(7));
    provider.cache_flush();
  }
  const auto table = load_embeddings(dir / "cache.emb");
  CHECK(table.size() == 7);
  CHECK(std::is_sorted(table.ids().begin(), table.ids().end()));
  REQUIRE(table.find(caption_key("t5")));
  CHECK((*table.find(caption_key("t5")))[0] == 5.0f);

  const int calls = server.calls();
  HttpEmbeddingProvider reloaded(cfg);
  const auto out = reloaded.embed_texts(tagged_texts(7));
  CHECK(server.calls() == calls);
  CHECK(out[6][0] == 6.0f);

  FileEmbeddingProvider no_cache(EmbeddingTable{});
  CHECK(error_code_of([&] { no_cache.cache_flush(); }) == ErrorCode::InvalidArgument);
}
