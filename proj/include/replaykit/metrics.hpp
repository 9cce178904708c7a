#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "replaykit/core_model.hpp"

namespace replaykit {

/// n x d matrix of precomputed features (one row per sample).
struct FeatureSet {
  std::string label;
  Eigen::MatrixXd rows;
};

FeatureSet feature_set_from_table(std::string label, const EmbeddingTable& table);

/// Stacks the rows of several feature sets. Throws DimensionMismatch.
FeatureSet pool(std::string label, const std::vector<const FeatureSet*>& sets);

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased (n - 1) covariance. Throws TooFewSamples for n < 2.
GaussianMoments moments(const FeatureSet& features);

inline constexpr double kCovarianceJitter = 1e-6;

struct FrechetResult {
  double value = 0.0;
  bool regularized = false;  // kCovarianceJitter was added to both diagonals
};

/// ||mu1 - mu2||^2 + Tr(S1) + Tr(S2) - 2 Tr((S1^1/2 S2 S1^1/2)^1/2).
///
/// Square roots come from symmetric eigendecompositions with negative
/// eigenvalues clamped to zero. If either covariance is singular both get
/// kCovarianceJitter on the diagonal. The result is clamped to >= 0.
FrechetResult frechet_distance(const GaussianMoments& a, const GaussianMoments& b);

/// Relative change of a base-split metric in percent; positive means the
/// metric got worse. Throws DivisionByZero when before == 0.
double forgetting(double before, double after, Direction direction);

/// asset id -> ids of its rendered views
using RenderGrouping = std::map<std::string, std::vector<std::string>>;

/// Per asset: 100 x mean over its views of cos(text, view).
/// Throws MissingFeature or DimensionMismatch.
std::map<std::string, double> clip_scores_per_asset(const EmbeddingTable& text_features,
                                                    const EmbeddingTable& render_features,
                                                    const RenderGrouping& grouping);

/// Mean of clip_scores_per_asset.
double clip_score(const EmbeddingTable& text_features, const EmbeddingTable& render_features,
                  const RenderGrouping& grouping);

RenderGrouping grouping_from_json(const nlohmann::json& j);

/// Base/novel per-asset CLIP scores; "all" is the mean of the pooled scores.
MetricReport assemble_clip_report(std::string metric, const std::vector<double>& base_scores,
                                  const std::vector<double>& novel_scores, std::optional<double> base_before);

struct FdInputs {
  FeatureSet generated;
  FeatureSet reference;
};

/// Base/novel FD; "all" is the FD between the pooled generated and pooled
/// reference features.
MetricReport assemble_fd_report(std::string metric, const FdInputs& base, const FdInputs& novel,
                                std::optional<double> base_before);

nlohmann::json to_json(const MetricReport& report);

/// Aligned plain-text table: Metric | Base | Novel | All | F (%).
std::string render_table(const std::vector<MetricReport>& reports);

}  // namespace replaykit
