#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "replaykit/rng.hpp"
#include "replaykit/selection.hpp"
#include "support/expect.hpp"
#include "support/oracles.hpp"

using namespace replaykit;
using testing::error_code_of;

namespace {

AssetEmbedding at_angle(const std::string& id, double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  return {id, {std::cos(r), std::sin(r)}, 1};
}

std::vector<AssetEmbedding> random_unit(std::mt19937_64& gen, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<AssetEmbedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    double s = 0;
    for (auto& x : v) {
      x = g(gen);
      s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    out.push_back({"id" + std::to_string(100 + i), v, 1});
  }
  return out;
}

class TableProvider : public EmbeddingProvider {
 public:
  explicit TableProvider(std::map<std::string, Vector> rows) : EmbeddingProvider(std::nullopt), rows_(std::move(rows)) {}

 protected:
  std::vector<Vector> fetch(const std::vector<std::string>& texts) override {
    std::vector<Vector> out;
    for (const auto& t : texts) out.push_back(rows_.at(t));
    return out;
  }

 private:
  std::map<std::string, Vector> rows_;
};

}  // namespace

TEST_CASE("embed_asset normalizes and averages") {
  TableProvider provider({{"c", {3, 4}}, {"x", {1, 0}}, {"y", {0, 1}}, {"-x", {-1, 0}}, {"zero", {0, 0}}});

  const auto one = embed_asset({"a", "k", {"c"}, Split::Train}, provider, 11);
  CHECK(one.v[0] == doctest::Approx(0.6));
  CHECK(one.v[1] == doctest::Approx(0.8));
  CHECK(one.captions_used == 1);

  const auto two = embed_asset({"a", "k", {"x", "y"}, Split::Train}, provider, 11);
  CHECK(two.v[0] == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(two.v[1] == doctest::Approx(std::sqrt(2.0) / 2));

  CHECK(error_code_of([&] { embed_asset({"a", "k", {"x", "-x"}, Split::Train}, provider, 11); }) ==
        ErrorCode::DegenerateMean);
  CHECK(error_code_of([&] { embed_asset({"a", "k", {"zero"}, Split::Train}, provider, 11); }) ==
        ErrorCode::DegenerateMean);
  CHECK(error_code_of([&] { embed_asset({"a", "k", {" "}, Split::Train}, provider, 11); }) ==
        ErrorCode::NoValidCaptions);
}

TEST_CASE("embed_asset uses only the first M valid captions") {
  TableProvider provider({{"x", {1, 0}}, {"y", {0, 1}}});
  const auto e = embed_asset({"a", "k", {"", "x", "  ", "y"}, Split::Train}, provider, 1);
  CHECK(e.captions_used == 1);
  CHECK(e.v[0] == doctest::Approx(1.0));
}

TEST_CASE("unit norm holds for random caption sets") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vector> caps(1 + gen() % 11, Vector(8));
    for (auto& v : caps)
      for (auto& x : v) x = static_cast<float>(g(gen) * 10 + 1);
    const auto e = average_caption_embeddings("a", caps);
    double s = 0;
    for (double x : e.v) s += x * x;
    CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("k-center returns everything when k >= N") {
  const auto r = select_kcenter({at_angle("b", 0), at_angle("a", 10), at_angle("c", 20)}, 5);
  CHECK(r.ids == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("k-center with k = 1 picks the asset closest to the class mean") {
  const auto r = select_kcenter({at_angle("p", 0), at_angle("q", 40), at_angle("r", 70)}, 1);
  CHECK(r.ids == std::vector<std::string>{"q"});
}

TEST_CASE("k-center on four planar points") {
  // Sum of the four vectors is (cos 5, 1 + sin 5); the 5 and 90 degree
  // assets both score 1 + sin 5 against it, so the id order decides the
  // seed. The second pick is checked by brute force over the rest.
  std::vector<AssetEmbedding> pts{at_angle("deg000", 0), at_angle("deg005", 5), at_angle("deg090", 90),
                                  at_angle("deg180", 180)};
  const double s5 = std::cos(5 * std::numbers::pi / 180) * std::cos(5 * std::numbers::pi / 180) +
                    std::sin(5 * std::numbers::pi / 180) * (1 + std::sin(5 * std::numbers::pi / 180));
  const double s90 = 1 + std::sin(5 * std::numbers::pi / 180);
  REQUIRE(s5 == doctest::Approx(s90).epsilon(1e-14));

  double best = -1;
  std::string farthest;
  for (const auto& p : pts) {
    if (p.asset_id == "deg005") continue;
    const double d = 1 - (p.v[0] * pts[1].v[0] + p.v[1] * pts[1].v[1]);
    if (d > best) {
      best = d;
      farthest = p.asset_id;
    }
  }
  REQUIRE(farthest == "deg180");

  const auto r = select_kcenter(pts, 2);
  CHECK(r.ids == std::vector<std::string>{"deg005", "deg180"});
}

TEST_CASE("k-center degenerate mean falls back to the smallest id") {
  const auto r = select_kcenter({at_angle("m", 0), at_angle("n", 180)}, 1);
  CHECK(r.seed_fallback);
  CHECK(r.ids == std::vector<std::string>{"m"});
}

TEST_CASE("k-center keeps going through duplicate embeddings by id") {
  std::vector<AssetEmbedding> pts{at_angle("d", 30), at_angle("a", 30), at_angle("c", 30), at_angle("b", 30)};
  const auto r = select_kcenter(pts, 3);
  CHECK(r.ids == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("k-center errors") {
  CHECK(error_code_of([] { select_kcenter({at_angle("a", 0)}, 0); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { select_kcenter({}, 2); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { select_kcenter({at_angle("a", 0), at_angle("a", 9), at_angle("b", 1)}, 1); }) ==
        ErrorCode::DuplicateAssetId);
}

TEST_CASE("k-center properties on random instances") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + gen() % 11;
    const std::size_t dim = trial % 2 ? 8 : 2;
    auto pts = random_unit(gen, n, dim);
    const std::size_t k = 1 + gen() % std::min<std::size_t>(4, n - 1);
    const auto r = select_kcenter(pts, k);

    CHECK(r.ids.size() == std::min(k, n));
    CHECK(std::set<std::string>(r.ids.begin(), r.ids.end()).size() == r.ids.size());

    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(select_kcenter(shuffled, k).ids == r.ids);

    if (k + 1 < n) CHECK(select_kcenter(pts, k + 1).coverage <= r.coverage + 1e-12);

    // centres are at least as far apart as the final coverage radius
    std::map<std::string, const AssetEmbedding*> by_id;
    for (const auto& p : pts) by_id[p.asset_id] = &p;
    for (std::size_t i = 0; i < r.ids.size(); ++i)
      for (std::size_t j = i + 1; j < r.ids.size(); ++j)
        CHECK(cosine_distance(by_id[r.ids[i]]->v, by_id[r.ids[j]]->v) >= r.coverage - 1e-12);
  }
}

TEST_CASE("random selection") {
  const std::vector<std::string> ids{"c", "a", "b"};
  CHECK(select_random(ids, 5, 1, "cls") == std::vector<std::string>{"a", "b", "c"});
  CHECK(select_random(ids, 2, 9, "cls") == select_random({"b", "c", "a"}, 2, 9, "cls"));

  // k = 1 picks sorted_ids[rng.below(3)] from the (seed, class) stream
  CounterRng replayed(1234, "cls");
  const std::vector<std::string> sorted{"a", "b", "c"};
  CHECK(select_random(ids, 1, 1234, "cls") == std::vector<std::string>{sorted[replayed.below(3)]});

  // different classes draw from independent streams
  std::set<std::vector<std::string>> seen;
  for (int s = 0; s < 20; ++s) seen.insert(select_random({"1", "2", "3", "4", "5", "6"}, 3, s, "x"));
  CHECK(seen.size() > 5);
}

TEST_CASE("counter rng is a pure function of (seed, stream, counter)") {
  CounterRng a(7, "dog");
  CounterRng b(7, "dog");
  CounterRng c(7, "cat");
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  // the first output is mix(key + gamma)
  CounterRng d(7, "dog");
  CHECK(d.next() == CounterRng::mix(d.key() + CounterRng::kGamma));

  CounterRng e(99, "bins");
  std::array<int, 5> counts{};
  for (int i = 0; i < 50000; ++i) ++counts[e.below(5)];
  for (int cnt : counts) CHECK(std::abs(cnt - 10000) < 400);
}
