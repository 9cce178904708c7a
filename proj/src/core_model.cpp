#include "replaykit/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "replaykit/error.hpp"

namespace replaykit {

namespace {

bool is_unicode_space(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one code point starting at `pos`; returns its byte length, or 0
// for malformed input (treated as a non-space byte by callers).
std::size_t decode_at(std::string_view s, std::size_t pos, char32_t& cp) noexcept {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::size_t len = 0;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    len = 4;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view text) noexcept {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  if (text == "unassigned") return Split::Unassigned;
  return std::nullopt;
}

std::string_view trim_unicode(std::string_view text) noexcept {
  std::size_t begin = 0;
  while (begin < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_at(text, begin, cp);
    if (len == 0 || !is_unicode_space(cp)) break;
    begin += len;
  }
  std::size_t end = text.size();
  while (end > begin) {
    // back up to the start of the last code point
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) --start;
    char32_t cp = 0;
    const std::size_t len = decode_at(text, start, cp);
    if (len == 0 || start + len != end || !is_unicode_space(cp)) break;
    end = start;
  }
  return text.substr(begin, end - begin);
}

bool is_valid_caption(std::string_view caption) noexcept {
  return !trim_unicode(caption).empty();
}

std::vector<std::string> valid_captions(const AssetRecord& record, std::size_t max_captions) {
  std::vector<std::string> out;
  for (const auto& caption : record.captions) {
    if (out.size() >= max_captions) break;
    if (is_valid_caption(caption)) out.push_back(caption);
  }
  return out;
}

std::size_t ClassInventory::count(const std::string& label) const {
  auto it = classes_.find(label);
  return it == classes_.end() ? 0 : it->second.size();
}

std::size_t ClassInventory::total() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, records] : classes_) n += records.size();
  return n;
}

const std::vector<AssetRecord>& ClassInventory::records(const std::string& label) const {
  auto it = classes_.find(label);
  if (it == classes_.end()) throw Error(ErrorCode::UnknownClass, "class '" + label + "' not in inventory");
  return it->second;
}

std::vector<AssetRecord> ClassInventory::flatten() const {
  std::vector<AssetRecord> out;
  out.reserve(total());
  for (const auto& [label, records] : classes_) {
    auto first = out.insert(out.end(), records.begin(), records.end());
    std::sort(first, out.end(),
              [](const AssetRecord& a, const AssetRecord& b) { return a.asset_id < b.asset_id; });
  }
  return out;
}

ClassInventory ClassInventory::select(const std::vector<std::string>& labels) const {
  ClassInventory out;
  for (const auto& label : labels) out.classes_[label] = records(label);
  return out;
}

ClassInventory validate_inventory(std::vector<AssetRecord> records) {
  ClassInventory inventory;
  std::unordered_map<std::string, std::size_t> seen;
  seen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& record = records[i];
    if (record.class_label.empty())
      throw Error(ErrorCode::EmptyClassLabel, "record '" + record.asset_id + "' has an empty class label");
    if (std::none_of(record.captions.begin(), record.captions.end(),
                     [](const std::string& c) { return is_valid_caption(c); }))
      throw Error(ErrorCode::EmptyCaptions, "record '" + record.asset_id + "' has no non-empty caption");
    if (!seen.emplace(record.asset_id, i).second)
      throw Error(ErrorCode::DuplicateAssetId, "asset id '" + record.asset_id + "' appears more than once");
    inventory.classes_[record.class_label].push_back(std::move(record));
  }
  return inventory;
}

std::span<const float> EmbeddingTable::row(std::size_t index) const {
  if (index >= ids_.size()) throw Error(ErrorCode::InvalidArgument, "row index out of range");
  return {data_.data() + index * dim_, dim_};
}

std::optional<std::span<const float>> EmbeddingTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

bool EmbeddingTable::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

void EmbeddingTable::add(std::string id, std::span<const float> values) {
  if (dim_ == 0 && ids_.empty()) dim_ = values.size();
  if (values.size() != dim_ || dim_ == 0)
    throw Error(ErrorCode::DimensionMismatch, "row '" + id + "' has " + std::to_string(values.size()) +
                                                  " components, table dim is " + std::to_string(dim_));
  if (!std::all_of(values.begin(), values.end(), [](float x) { return std::isfinite(x); }))
    throw Error(ErrorCode::InvalidArgument, "row '" + id + "' has non-finite components");
  if (index_.contains(id)) throw Error(ErrorCode::DuplicateId, "id '" + id + "' already in table");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::string_view to_string(Strategy strategy) noexcept {
  return strategy == Strategy::KCenter ? "kcenter" : "random";
}

std::optional<Strategy> parse_strategy(std::string_view text) noexcept {
  if (text == "kcenter") return Strategy::KCenter;
  if (text == "random") return Strategy::Random;
  return std::nullopt;
}

void ReplayParams::validate() const {
  if (!(replay_pct > 0.0 && replay_pct <= 100.0))
    throw Error(ErrorCode::InvalidArgument, "replay_pct must be in (0, 100]");
  if (m_min < 1) throw Error(ErrorCode::InvalidArgument, "m_min must be positive");
  if (m_max < m_min) throw Error(ErrorCode::InvalidArgument, "m_max must be >= m_min");
  if (!(p_max > 0.0 && p_max <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p_max must be in (0, 1]");
  if (max_captions < 1) throw Error(ErrorCode::InvalidArgument, "max_captions must be positive");
}

std::uint64_t AllocationPlan::total_quota() const noexcept {
  return std::accumulate(classes.begin(), classes.end(), std::uint64_t{0},
                         [](std::uint64_t s, const ClassAllocation& c) { return s + c.quota; });
}

const ClassAllocation* AllocationPlan::find(std::string_view label) const noexcept {
  for (const auto& c : classes)
    if (c.class_label == label) return &c;
  return nullptr;
}

std::size_t ReplayManifest::selected_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, ids] : selections) n += ids.size();
  return n;
}

std::string_view to_string(Direction direction) noexcept {
  return direction == Direction::HigherBetter ? "higher_better" : "lower_better";
}

std::optional<Direction> parse_direction(std::string_view text) noexcept {
  if (text == "higher_better" || text == "higher") return Direction::HigherBetter;
  if (text == "lower_better" || text == "lower") return Direction::LowerBetter;
  return std::nullopt;
}

}  // namespace replaykit
