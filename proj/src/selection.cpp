#include "replaykit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "replaykit/error.hpp"
#include "replaykit/rng.hpp"

namespace replaykit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Scores closer than this are ties; the scan runs in id order, so the
// smaller id keeps the slot.
constexpr double kTieTolerance = 1e-12;

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) { return 1.0 - dot(a, b); }

AssetEmbedding average_caption_embeddings(std::string asset_id, const std::vector<Vector>& caption_vectors) {
  if (caption_vectors.empty()) throw Error(ErrorCode::NoValidCaptions, "asset '" + asset_id + "' has no valid captions");
  const std::size_t dim = caption_vectors.front().size();
  std::vector<double> mean(dim, 0.0);
  std::vector<double> z(dim);
  for (const auto& e : caption_vectors) {
    if (e.size() != dim) throw Error(ErrorCode::DimensionMismatch, "caption embeddings of '" + asset_id + "' differ in dim");
    std::copy(e.begin(), e.end(), z.begin());
    const double n = norm(z);
    if (n < kDegenerateNorm)
      throw Error(ErrorCode::DegenerateMean, "asset '" + asset_id + "' has a zero-norm caption embedding");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += z[i] / n;
  }
  for (auto& x : mean) x /= static_cast<double>(caption_vectors.size());
  const double n = norm(mean);
  if (n < kDegenerateNorm)
    throw Error(ErrorCode::DegenerateMean, "caption embeddings of '" + asset_id + "' cancel out");
  for (auto& x : mean) x /= n;
  return {std::move(asset_id), std::move(mean), caption_vectors.size()};
}

AssetEmbedding embed_asset(const AssetRecord& record, EmbeddingProvider& provider, std::size_t max_captions) {
  const auto captions = valid_captions(record, max_captions);
  if (captions.empty()) throw Error(ErrorCode::NoValidCaptions, "asset '" + record.asset_id + "' has no valid captions");
  return average_caption_embeddings(record.asset_id, provider.embed_texts(captions));
}

std::vector<AssetEmbedding> embed_assets(const std::vector<AssetRecord>& records, EmbeddingProvider& provider,
                                         std::size_t max_captions) {
  std::vector<std::string> texts;
  std::vector<std::size_t> offsets{0};
  for (const auto& record : records) {
    auto captions = valid_captions(record, max_captions);
    if (captions.empty()) throw Error(ErrorCode::NoValidCaptions, "asset '" + record.asset_id + "' has no valid captions");
    texts.insert(texts.end(), std::make_move_iterator(captions.begin()), std::make_move_iterator(captions.end()));
    offsets.push_back(texts.size());
  }
  const auto vectors = provider.embed_texts(texts);
  std::vector<AssetEmbedding> out;
  out.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::vector<Vector> mine(vectors.begin() + static_cast<std::ptrdiff_t>(offsets[r]),
                             vectors.begin() + static_cast<std::ptrdiff_t>(offsets[r + 1]));
    out.push_back(average_caption_embeddings(records[r].asset_id, mine));
  }
  return out;
}

KCenterResult select_kcenter(std::vector<AssetEmbedding> assets, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (assets.empty()) throw Error(ErrorCode::InvalidArgument, "no assets to select from");
  std::sort(assets.begin(), assets.end(),
            [](const AssetEmbedding& a, const AssetEmbedding& b) { return a.asset_id < b.asset_id; });
  const std::size_t n = assets.size();
  const std::size_t dim = assets.front().v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (assets[i].v.size() != dim) throw Error(ErrorCode::DimensionMismatch, "asset embeddings differ in dim");
    if (i > 0 && assets[i].asset_id == assets[i - 1].asset_id)
      throw Error(ErrorCode::DuplicateAssetId, "asset '" + assets[i].asset_id + "' given twice");
  }

  KCenterResult result;
  if (k >= n) {
    for (const auto& a : assets) result.ids.push_back(a.asset_id);
    return result;
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& a : assets)
    for (std::size_t i = 0; i < dim; ++i) mean[i] += a.v[i];
  const double mean_norm = norm(mean);

  std::size_t seed = 0;
  if (mean_norm < kDegenerateNorm) {
    result.seed_fallback = true;
  } else {
    for (auto& x : mean) x /= mean_norm;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = dot(assets[i].v, mean);
      if (s > best + kTieTolerance) {
        best = s;
        seed = i;
      }
    }
  }

  std::vector<bool> chosen(n, false);
  std::vector<double> d_min(n);
  chosen[seed] = true;
  result.ids.push_back(assets[seed].asset_id);
  for (std::size_t i = 0; i < n; ++i) d_min[i] = cosine_distance(assets[i].v, assets[seed].v);

  while (result.ids.size() < k) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (pick == n || d_min[i] > d_min[pick] + kTieTolerance) pick = i;
    }
    chosen[pick] = true;
    result.ids.push_back(assets[pick].asset_id);
    for (std::size_t i = 0; i < n; ++i) d_min[i] = std::min(d_min[i], cosine_distance(assets[i].v, assets[pick].v));
  }

  result.coverage = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!chosen[i]) result.coverage = std::max(result.coverage, d_min[i]);
  return result;
}

std::vector<std::string> select_random(std::vector<std::string> ids, std::size_t k, std::uint64_t seed,
                                       std::string_view stream) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw Error(ErrorCode::DuplicateAssetId, "duplicate ids in random selection input");
  CounterRng rng(seed, stream);
  return draw_without_replacement(std::move(ids), k, rng);
}

}  // namespace replaykit
