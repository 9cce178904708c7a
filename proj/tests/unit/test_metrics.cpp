#include <doctest.h>

#include <cmath>
#include <random>

#include "replaykit/metrics.hpp"
#include "support/expect.hpp"

using namespace replaykit;
using testing::error_code_of;

namespace {

GaussianMoments gm(Eigen::VectorXd mean, Eigen::MatrixXd cov) { return {std::move(mean), std::move(cov)}; }

Eigen::MatrixXd random_spd(std::mt19937_64& gen, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = g(gen);
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::VectorXd random_vec(std::mt19937_64& gen, int d) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = g(gen);
  return v;
}

EmbeddingTable table(std::initializer_list<std::pair<std::string, std::vector<float>>> rows) {
  EmbeddingTable t;
  for (const auto& [id, v] : rows) t.add(id, v);
  return t;
}

}  // namespace

TEST_CASE("clip score examples") {
  const auto text = table({{"a", {1, 0}}, {"b", {0, 1}}});
  CHECK(clip_score(table({{"a", {1, 0}}}), table({{"r", {2, 0}}}), {{"a", {"r"}}}) == doctest::Approx(100.0));
  CHECK(clip_score(table({{"a", {1, 0}}}), table({{"r", {0, 3}}}), {{"a", {"r"}}}) == doctest::Approx(0.0));

  // cosines 0.25 and 0.35 -> 30
  const double c1 = 0.25, c2 = 0.35;
  const auto renders = table({{"ra", {static_cast<float>(c1), static_cast<float>(std::sqrt(1 - c1 * c1))}},
                              {"rb", {static_cast<float>(std::sqrt(1 - c2 * c2)), static_cast<float>(c2)}}});
  CHECK(clip_score(text, renders, {{"a", {"ra"}}, {"b", {"rb"}}}) == doctest::Approx(30.0).epsilon(1e-6));

  // views are averaged before assets
  const auto views = table({{"v1", {1, 0}}, {"v2", {0, 1}}, {"v3", {0, 1}}});
  const auto per = clip_scores_per_asset(text, views, {{"a", {"v1", "v2"}}, {"b", {"v3"}}});
  CHECK(per.at("a") == doctest::Approx(50.0));
  CHECK(per.at("b") == doctest::Approx(100.0));
}

TEST_CASE("clip score errors") {
  const auto text = table({{"a", {1, 0}}});
  CHECK(error_code_of([&] { clip_score(text, table({{"r", {1, 0}}}), {{"a", {"missing"}}}); }) == ErrorCode::MissingFeature);
  CHECK(error_code_of([&] { clip_score(text, table({{"r", {1, 0}}}), {{"zz", {"r"}}}); }) == ErrorCode::MissingFeature);
  CHECK(error_code_of([&] { clip_score(text, table({{"r", {1, 0}}}), {{"a", {}}}); }) == ErrorCode::MissingFeature);
  CHECK(error_code_of([&] { clip_score(text, table({{"r", {1, 0, 0}}}), {{"a", {"r"}}}); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("moments examples") {
  FeatureSet f{"x", Eigen::MatrixXd(2, 2)};
  f.rows << 0, 0, 2, 0;
  const auto m = moments(f);
  CHECK(m.mean(0) == doctest::Approx(1.0));
  CHECK(m.mean(1) == doctest::Approx(0.0));
  CHECK(m.cov(0, 0) == doctest::Approx(2.0));
  CHECK(m.cov(0, 1) == doctest::Approx(0.0));
  CHECK(m.cov(1, 1) == doctest::Approx(0.0));

  FeatureSet c{"c", Eigen::MatrixXd::Constant(5, 3, 0.7)};
  CHECK(moments(c).cov.norm() == doctest::Approx(0.0));

  FeatureSet one{"one", Eigen::MatrixXd::Zero(1, 3)};
  CHECK(error_code_of([&] { moments(one); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("frechet distance examples") {
  const auto I = Eigen::MatrixXd::Identity(2, 2);
  const auto a = gm(Eigen::Vector2d(0, 0), I);
  CHECK(frechet_distance(a, a).value == doctest::Approx(0.0).epsilon(1e-9));
  const auto r = frechet_distance(a, gm(Eigen::Vector2d(3, 4), I));
  CHECK(std::abs(r.value - 25.0) < 1e-6);
  CHECK_FALSE(r.regularized);

  Eigen::MatrixXd s1(1, 1), s4(1, 1);
  s1 << 1;
  s4 << 4;
  CHECK(std::abs(frechet_distance(gm(Eigen::VectorXd::Zero(1), s1), gm(Eigen::VectorXd::Zero(1), s4)).value - 1.0) <
        1e-6);

  CHECK(error_code_of([&] { frechet_distance(a, gm(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3))); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("frechet distance regularizes singular covariances") {
  const auto z = gm(Eigen::Vector2d(1, 1), Eigen::MatrixXd::Zero(2, 2));
  const auto r = frechet_distance(z, z);
  CHECK(r.regularized);
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.value >= 0.0);
}

TEST_CASE("frechet distance symmetry and orthogonal invariance") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 25; ++t) {
    const int d = 2 + t % 6;
    const auto a = gm(random_vec(gen, d), random_spd(gen, d));
    const auto b = gm(random_vec(gen, d), random_spd(gen, d));
    const double ab = frechet_distance(a, b).value;
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - frechet_distance(b, a).value) < 1e-6 * std::max(1.0, ab));
    CHECK(frechet_distance(a, a).value < 1e-6);

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_spd(gen, d));
    const Eigen::MatrixXd q = qr.householderQ();
    const auto qa = gm(q * a.mean, q * a.cov * q.transpose());
    const auto qb = gm(q * b.mean, q * b.cov * q.transpose());
    CHECK(std::abs(frechet_distance(qa, qb).value - ab) < 1e-5 * std::max(1.0, ab));
  }
}

TEST_CASE("forgetting") {
  CHECK(forgetting(29.60, 24.46, Direction::HigherBetter) == doctest::Approx(17.36).epsilon(1e-3));
  CHECK(std::abs(forgetting(29.60, 24.46, Direction::HigherBetter) - 17.36) < 0.01);
  CHECK(std::abs(forgetting(75.22, 72.01, Direction::LowerBetter) + 4.27) < 0.01);
  CHECK(forgetting(5.0, 5.0, Direction::LowerBetter) == 0.0);
  CHECK(error_code_of([] { forgetting(0.0, 1.0, Direction::HigherBetter); }) == ErrorCode::DivisionByZero);
}

TEST_CASE("clip report pools per-asset scores") {
  const std::vector<double> base(40, 24.46), novel(40, 29.79);
  const auto r = assemble_clip_report("CLIP", base, novel, 29.60);
  CHECK(r.direction == Direction::HigherBetter);
  REQUIRE(r.all);
  CHECK(std::abs(*r.all - 27.12) < 0.01);
  REQUIRE(r.forgetting_pct);
  CHECK(std::abs(*r.forgetting_pct - 17.36) < 0.01);

  const auto same = assemble_clip_report("CLIP", {30.0}, {20.0}, 30.0);
  CHECK(*same.forgetting_pct == 0.0);
  CHECK_FALSE(assemble_clip_report("CLIP", {30.0}, {20.0}, std::nullopt).forgetting_pct);
}

TEST_CASE("fd report uses pooled features for All") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> g;
  auto sample = [&](int n, double shift) {
    FeatureSet f{"s", Eigen::MatrixXd(n, 3)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) f.rows(i, j) = g(gen) + shift;
    return f;
  };
  const auto bg = sample(200, 0), nr = sample(200, 1);
  const auto r = assemble_fd_report("FD", {bg, bg}, {nr, nr}, std::nullopt);
  CHECK(r.direction == Direction::LowerBetter);
  CHECK(r.base == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.novel == doctest::Approx(0.0).epsilon(1e-6));
  REQUIRE(r.all);
  CHECK(*r.all < 1e-6);
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("report table rendering") {
  const auto clip = assemble_clip_report("CLIP", {24.46}, {29.79}, 29.60);
  const auto fd = assemble_fd_report("FD", {FeatureSet{"g", Eigen::MatrixXd::Identity(3, 3)}, FeatureSet{"r", Eigen::MatrixXd::Identity(3, 3)}},
                                     {FeatureSet{"g", Eigen::MatrixXd::Identity(3, 3)}, FeatureSet{"r", Eigen::MatrixXd::Identity(3, 3)}},
                                     std::nullopt);
  const auto text = render_table({clip, fd});
  CHECK(text.find("Metric") != std::string::npos);
  CHECK(text.find("CLIP (up)") != std::string::npos);
  CHECK(text.find("FD (down)") != std::string::npos);
  CHECK(text.find("24.46") != std::string::npos);
  CHECK(text.find("27.12") != std::string::npos);
  CHECK(text.find("17.36") != std::string::npos);

  const auto j = to_json(clip);
  CHECK(j.at("direction") == "higher_better");
  CHECK(j.at("all").get<double>() == doctest::Approx(27.125));
}
