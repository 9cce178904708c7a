#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "replaykit/core_model.hpp"
#include "replaykit/embedding_provider.hpp"

namespace replaykit {

/// Unit-norm caption-average embedding of one asset.
struct AssetEmbedding {
  std::string asset_id;
  std::vector<double> v;
  std::size_t captions_used = 0;
};

/// Norm threshold below which a mean direction is undefined.
inline constexpr double kDegenerateNorm = 1e-9;

/// Normalizes each caption vector, averages, and normalizes the mean.
/// Throws NoValidCaptions on an empty list and DegenerateMean when the
/// mean (or any caption vector) has norm below kDegenerateNorm.
AssetEmbedding average_caption_embeddings(std::string asset_id, const std::vector<Vector>& caption_vectors);

/// Embeds the first `max_captions` valid captions of `record`.
AssetEmbedding embed_asset(const AssetRecord& record, EmbeddingProvider& provider, std::size_t max_captions);

/// Same as embed_asset for many records, with one provider call.
std::vector<AssetEmbedding> embed_assets(const std::vector<AssetRecord>& records, EmbeddingProvider& provider,
                                         std::size_t max_captions);

struct KCenterResult {
  std::vector<std::string> ids;  // selection order
  bool seed_fallback = false;    // class mean was degenerate; seeded with the smallest id
  double coverage = 0.0;         // max over assets of cosine distance to the nearest center
};

/// Greedy farthest-point selection under cosine distance 1 - <u, v>.
///
/// Seeds with the asset closest to the normalized class mean, then adds
/// the asset with the largest distance to its nearest chosen center until
/// k are chosen. Scores within 1e-12 of each other tie, and ties go to the
/// lexicographically smallest id. Input is processed in id order, so the
/// result does not depend on input order. When k >= N all ids are returned in id order.
KCenterResult select_kcenter(std::vector<AssetEmbedding> assets, std::size_t k);

/// Uniform draw of min(k, N) distinct ids, keyed by (seed, stream). Ids
/// are sorted before drawing.
std::vector<std::string> select_random(std::vector<std::string> ids, std::size_t k, std::uint64_t seed,
                                       std::string_view stream);

/// Cosine distance 1 - <a, b> on unit vectors.
double cosine_distance(std::span<const double> a, std::span<const double> b);

}  // namespace replaykit
