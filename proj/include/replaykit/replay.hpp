#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "replaykit/core_model.hpp"
#include "replaykit/embedding_provider.hpp"

namespace replaykit {

inline constexpr const char* kToolVersion = "replaykit 0.3.0";

/// floor(replay_pct / 100 * novel_size), clamped to `available`.
std::uint64_t replay_budget(double replay_pct, std::uint64_t novel_size, std::uint64_t available);

struct ReplayOptions {
  std::size_t threads = 1;                           // per-class selection workers
  std::map<std::string, std::string> input_digests;  // copied into the manifest
};

/// Budget, per-class allocation, then per-class exemplar selection.
/// `base` must hold base-train assets only. `provider` may be null for the
/// random strategy. The manifest is identical for any thread count.
ReplayManifest create_replay_set(const ClassInventory& base, std::uint64_t novel_size, const ReplayParams& params,
                                 EmbeddingProvider* provider, const ReplayOptions& options = {});

/// Records that are not tagged as test.
std::vector<AssetRecord> training_records(const std::vector<AssetRecord>& records);

/// Replay records resolved against `base_records`, merged with `novel_records`
/// and sorted by asset id. Throws UnresolvedAssetId or DuplicateAssetId.
std::vector<AssetRecord> mix_training_view(const ReplayManifest& manifest, const std::vector<AssetRecord>& base_records,
                                           const std::vector<AssetRecord>& novel_records);

}  // namespace replaykit
