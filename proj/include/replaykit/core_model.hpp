#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace replaykit {

enum class Split { Train, Test, Unassigned };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view text) noexcept;

/// One captioned 3D asset. The mesh itself is never stored, only its id.
struct AssetRecord {
  std::string asset_id;
  std::string class_label;
  std::vector<std::string> captions;  // source order is preserved
  Split split = Split::Unassigned;

  bool operator==(const AssetRecord&) const = default;
};

/// Strips leading/trailing Unicode whitespace from a UTF-8 string.
std::string_view trim_unicode(std::string_view text) noexcept;

/// A caption is valid when something remains after whitespace trimming.
bool is_valid_caption(std::string_view caption) noexcept;

/// First `max_captions` valid captions in source order, untrimmed.
std::vector<std::string> valid_captions(const AssetRecord& record, std::size_t max_captions);

/// Records grouped by class label. Labels compare byte-exact.
class ClassInventory {
 public:
  ClassInventory() = default;

  const std::map<std::string, std::vector<AssetRecord>>& classes() const noexcept {
    return classes_;
  }
  std::size_t class_count() const noexcept { return classes_.size(); }
  std::size_t count(const std::string& label) const;
  std::size_t total() const noexcept;
  bool contains(const std::string& label) const { return classes_.contains(label); }
  const std::vector<AssetRecord>& records(const std::string& label) const;

  /// Records flattened in (class label, asset id) order.
  std::vector<AssetRecord> flatten() const;

  /// Inventory restricted to `labels`. Throws UnknownClass.
  ClassInventory select(const std::vector<std::string>& labels) const;

 private:
  friend ClassInventory validate_inventory(std::vector<AssetRecord> records);
  std::map<std::string, std::vector<AssetRecord>> classes_;
};

/// Groups records by class, rejecting duplicate ids, empty labels and
/// records without a single valid caption. Within a class, records keep
/// their input order.
ClassInventory validate_inventory(std::vector<AssetRecord> records);

/// Id-keyed dense float matrix.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> row(std::size_t index) const;
  std::optional<std::span<const float>> find(std::string_view id) const;
  bool contains(std::string_view id) const;

  /// Throws DuplicateId, DimensionMismatch, or InvalidArgument for
  /// non-finite components. The first row fixes the dimension of an
  /// unsized table.
  void add(std::string id, std::span<const float> values);

  const std::vector<float>& data() const noexcept { return data_; }

  bool operator==(const EmbeddingTable& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Strategy { KCenter, Random };

std::string_view to_string(Strategy strategy) noexcept;
std::optional<Strategy> parse_strategy(std::string_view text) noexcept;

struct ReplayParams {
  double replay_pct = 20.0;      // r, in (0, 100]
  std::uint32_t m_min = 3;
  std::uint32_t m_max = 20;
  double p_max = 0.30;           // in (0, 1]
  std::uint32_t max_captions = 11;  // M
  Strategy strategy = Strategy::KCenter;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;

  bool operator==(const ReplayParams&) const = default;
};

struct ClassAllocation {
  std::string class_label;
  std::uint64_t n = 0;      // available base-train assets
  std::uint64_t cap = 0;    // effective cap
  std::uint64_t quota = 0;  // k_c

  bool operator==(const ClassAllocation&) const = default;
};

struct AllocationPlan {
  std::uint64_t budget = 0;
  double alpha = 0.0;
  std::vector<ClassAllocation> classes;  // sorted by class label
  std::uint64_t shortfall = 0;

  std::uint64_t total_quota() const noexcept;
  const ClassAllocation* find(std::string_view label) const noexcept;

  bool operator==(const AllocationPlan&) const = default;
};

struct ManifestMetadata {
  std::string tool_version;
  std::map<std::string, std::string> input_digests;  // role -> sha256 hex
  std::vector<std::string> seed_fallbacks;           // classes whose k-center seed fell back to the smallest id

  bool operator==(const ManifestMetadata&) const = default;
};

struct ReplayManifest {
  ReplayParams params;
  std::uint64_t novel_size = 0;
  AllocationPlan allocation;
  std::map<std::string, std::vector<std::string>> selections;  // in selection order
  ManifestMetadata metadata;

  std::size_t selected_count() const noexcept;

  bool operator==(const ReplayManifest&) const = default;
};

enum class Direction { HigherBetter, LowerBetter };

std::string_view to_string(Direction direction) noexcept;
std::optional<Direction> parse_direction(std::string_view text) noexcept;

struct MetricReport {
  std::string metric;
  Direction direction = Direction::HigherBetter;
  double base = 0.0;
  double novel = 0.0;
  std::optional<double> all;
  std::optional<double> forgetting_pct;
  std::vector<std::string> notes;
};

}  // namespace replaykit
