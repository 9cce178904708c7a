#include "replaykit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "replaykit/error.hpp"

namespace replaykit {

using nlohmann::json;

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigDecompositionFailure, "eigendecomposition did not converge");
  return solver;
}

bool is_singular(const Eigen::VectorXd& eigenvalues) {
  const double largest = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  return eigenvalues.minCoeff() <= 1e-12 * largest;
}

Eigen::MatrixXd psd_sqrt(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver) {
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

FeatureSet feature_set_from_table(std::string label, const EmbeddingTable& table) {
  FeatureSet fs{std::move(label), Eigen::MatrixXd(table.size(), table.dim())};
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) fs.rows(i, j) = row[j];
  }
  return fs;
}

FeatureSet pool(std::string label, const std::vector<const FeatureSet*>& sets) {
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  for (const auto* s : sets) {
    if (cols >= 0 && s->rows.cols() != cols)
      throw Error(ErrorCode::DimensionMismatch, "cannot pool feature sets of different dims");
    cols = s->rows.cols();
    rows += s->rows.rows();
  }
  FeatureSet out{std::move(label), Eigen::MatrixXd(rows, std::max<Eigen::Index>(cols, 0))};
  Eigen::Index at = 0;
  for (const auto* s : sets) {
    out.rows.middleRows(at, s->rows.rows()) = s->rows;
    at += s->rows.rows();
  }
  return out;
}

GaussianMoments moments(const FeatureSet& features) {
  const Eigen::Index n = features.rows.rows();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "feature set '" + features.label + "' has fewer than 2 rows");
  if (!features.rows.allFinite()) throw Error(ErrorCode::InvalidArgument, "feature set '" + features.label + "' has non-finite values");
  GaussianMoments m;
  m.mean = features.rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rows.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return m;
}

FrechetResult frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  const Eigen::Index d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || a.cov.cols() != d || b.cov.rows() != d || b.cov.cols() != d)
    throw Error(ErrorCode::DimensionMismatch, "moment dimensions disagree");

  Eigen::MatrixXd s1 = 0.5 * (a.cov + a.cov.transpose());
  Eigen::MatrixXd s2 = 0.5 * (b.cov + b.cov.transpose());
  FrechetResult result;
  if (d > 0 && (is_singular(eigen_of(s1).eigenvalues()) || is_singular(eigen_of(s2).eigenvalues()))) {
    s1.diagonal().array() += kCovarianceJitter;
    s2.diagonal().array() += kCovarianceJitter;
    result.regularized = true;
  }

  const Eigen::MatrixXd root1 = psd_sqrt(eigen_of(s1));
  Eigen::MatrixXd inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  const double trace_root = eigen_of(inner).eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (a.mean - b.mean).squaredNorm();
  result.value = std::max(0.0, mean_term + s1.trace() + s2.trace() - 2.0 * trace_root);
  return result;
}

double forgetting(double before, double after, Direction direction) {
  if (before == 0.0) throw Error(ErrorCode::DivisionByZero, "forgetting is undefined for a zero base score");
  const double delta = direction == Direction::HigherBetter ? before - after : after - before;
  return 100.0 * delta / before;
}

std::map<std::string, double> clip_scores_per_asset(const EmbeddingTable& text_features,
                                                    const EmbeddingTable& render_features,
                                                    const RenderGrouping& grouping) {
  if (!text_features.empty() && !render_features.empty() && text_features.dim() != render_features.dim())
    throw Error(ErrorCode::DimensionMismatch, "text and render features differ in dim");
  auto cosine = [](std::span<const float> a, std::span<const float> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += static_cast<double>(a[i]) * b[i];
      aa += static_cast<double>(a[i]) * a[i];
      bb += static_cast<double>(b[i]) * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };

  std::map<std::string, double> scores;
  for (const auto& [asset, views] : grouping) {
    const auto text = text_features.find(asset);
    if (!text) throw Error(ErrorCode::MissingFeature, "no text feature for asset '" + asset + "'");
    if (views.empty()) throw Error(ErrorCode::MissingFeature, "asset '" + asset + "' has no render features");
    double sum = 0.0;
    for (const auto& view : views) {
      const auto render = render_features.find(view);
      if (!render) throw Error(ErrorCode::MissingFeature, "no render feature '" + view + "'");
      sum += cosine(*text, *render);
    }
    scores.emplace(asset, 100.0 * sum / static_cast<double>(views.size()));
  }
  return scores;
}

double clip_score(const EmbeddingTable& text_features, const EmbeddingTable& render_features,
                  const RenderGrouping& grouping) {
  const auto scores = clip_scores_per_asset(text_features, render_features, grouping);
  if (scores.empty()) throw Error(ErrorCode::MissingFeature, "no assets to score");
  double sum = 0.0;
  for (const auto& [asset, s] : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

RenderGrouping grouping_from_json(const json& j) {
  try {
    return j.get<RenderGrouping>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("render grouping: ") + e.what());
  }
}

MetricReport assemble_clip_report(std::string metric, const std::vector<double>& base_scores,
                                  const std::vector<double>& novel_scores, std::optional<double> base_before) {
  MetricReport report;
  report.metric = std::move(metric);
  report.direction = Direction::HigherBetter;
  report.base = mean_of(base_scores);
  report.novel = mean_of(novel_scores);
  std::vector<double> pooled(base_scores);
  pooled.insert(pooled.end(), novel_scores.begin(), novel_scores.end());
  if (!pooled.empty()) report.all = mean_of(pooled);
  if (base_before) report.forgetting_pct = forgetting(*base_before, report.base, report.direction);
  report.notes.push_back("all = mean of pooled per-asset scores");
  return report;
}

MetricReport assemble_fd_report(std::string metric, const FdInputs& base, const FdInputs& novel,
                                std::optional<double> base_before) {
  MetricReport report;
  report.metric = std::move(metric);
  report.direction = Direction::LowerBetter;
  const auto base_fd = frechet_distance(moments(base.generated), moments(base.reference));
  const auto novel_fd = frechet_distance(moments(novel.generated), moments(novel.reference));
  const auto all_fd = frechet_distance(moments(pool("generated-all", {&base.generated, &novel.generated})),
                                       moments(pool("reference-all", {&base.reference, &novel.reference})));
  report.base = base_fd.value;
  report.novel = novel_fd.value;
  report.all = all_fd.value;
  if (base_before) report.forgetting_pct = forgetting(*base_before, report.base, report.direction);
  report.notes.push_back("all = FD between pooled generated and pooled reference features");
  if (base_fd.regularized || novel_fd.regularized || all_fd.regularized)
    report.notes.push_back("covariance jitter 1e-6 applied to a singular covariance");
  return report;
}

json to_json(const MetricReport& report) {
  json j{{"metric", report.metric},
         {"direction", std::string(to_string(report.direction))},
         {"base", report.base},
         {"novel", report.novel},
         {"all", report.all ? json(*report.all) : json(nullptr)},
         {"forgetting_pct", report.forgetting_pct ? json(*report.forgetting_pct) : json(nullptr)},
         {"notes", report.notes}};
  return j;
}

std::string render_table(const std::vector<MetricReport>& reports) {
  std::vector<std::vector<std::string>> cells{{"Metric", "Base", "Novel", "All", "F (%)"}};
  for (const auto& r : reports) {
    const std::string arrow = r.direction == Direction::HigherBetter ? " (up)" : " (down)";
    cells.push_back({r.metric + arrow, fixed2(r.base), fixed2(r.novel), r.all ? fixed2(*r.all) : "-",
                     r.forgetting_pct ? fixed2(*r.forgetting_pct) : "-"});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto pad = std::string(width[c] - cells[r][c].size(), ' ');
      out << (c == 0 ? cells[r][c] + pad : pad + cells[r][c]);
      out << (c + 1 < cells[r].size() ? " | " : "\n");
    }
    if (r == 0) {
      for (std::size_t c = 0; c < width.size(); ++c)
        out << std::string(width[c], '-') << (c + 1 < width.size() ? "-+-" : "\n");
    }
  }
  return out.str();
}

}  // namespace replaykit
