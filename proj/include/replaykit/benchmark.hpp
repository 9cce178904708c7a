#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "replaykit/core_model.hpp"

namespace replaykit {

inline constexpr const char* kTestSampler = "uniform-without-replacement/counter-splitmix64";

struct SplitSpec {
  std::vector<std::string> base_classes;
  std::vector<std::string> novel_classes;
  std::size_t min_class_size = 15;
  std::size_t max_classes = 90;
  std::size_t test_per_class = 5;
  std::uint64_t seed = 0;

  /// Throws OverlappingSplits or InvalidArgument.
  void validate() const;
};

nlohmann::json to_json(const SplitSpec& spec);
/// Missing numeric keys take their defaults.
SplitSpec split_spec_from_json(const nlohmann::json& j);

/// Class list given as a JSON array of strings or as plain text with one
/// label per line (blank lines and lines starting with '#' skipped).
std::vector<std::string> parse_class_list(std::string_view text);

/// Drops classes smaller than `min_class_size`, then keeps the
/// `max_classes` largest (ties: smaller label first).
ClassInventory filter_classes(const std::vector<AssetRecord>& records, std::size_t min_class_size,
                              std::size_t max_classes);

struct BenchmarkSplits {
  std::vector<AssetRecord> base_train;
  std::vector<AssetRecord> base_test;
  std::vector<AssetRecord> novel_train;
  std::vector<AssetRecord> novel_test;
  std::uint64_t seed = 0;
  std::string sampler = kTestSampler;
};

/// Per class, min(test_per_class, n - 1) assets go to test, drawn from the
/// id-sorted class list with a stream keyed by (seed, class label); the
/// rest go to train. Outputs are sorted by (class label, asset id) and carry
/// split tags. Throws UnknownClass or OverlappingSplits.
BenchmarkSplits build_splits(const ClassInventory& inventory, const SplitSpec& spec);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t total() const noexcept { return train + test; }
};

struct StageStats {
  std::map<std::string, SplitCounts> per_class;

  std::size_t classes() const noexcept { return per_class.size(); }
  std::size_t train() const noexcept;
  std::size_t test() const noexcept;
  std::size_t total() const noexcept { return train() + test(); }
  /// Per-class totals, largest first.
  std::vector<std::size_t> class_frequencies() const;
};

StageStats stage_stats(const std::vector<AssetRecord>& train, const std::vector<AssetRecord>& test);

struct SplitStatistics {
  StageStats base;
  StageStats novel;
  std::uint64_t seed = 0;
  std::string sampler;
};

SplitStatistics split_stats(const BenchmarkSplits& splits);

nlohmann::json to_json(const StageStats& stats);
nlohmann::json to_json(const SplitStatistics& stats);

}  // namespace replaykit
