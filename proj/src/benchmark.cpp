#include "replaykit/benchmark.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "replaykit/error.hpp"
#include "replaykit/rng.hpp"

namespace replaykit {

using nlohmann::json;

namespace {

bool by_class_then_id(const AssetRecord& a, const AssetRecord& b) {
  if (a.class_label != b.class_label) return a.class_label < b.class_label;
  return a.asset_id < b.asset_id;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void SplitSpec::validate() const {
  if (min_class_size == 0 || max_classes == 0 || test_per_class == 0)
    throw Error(ErrorCode::InvalidArgument, "min_class_size, max_classes and test_per_class must be positive");
  std::set<std::string> base;
  for (const auto& c : base_classes)
    if (!base.insert(c).second) throw Error(ErrorCode::InvalidArgument, "base class '" + c + "' listed twice");
  std::set<std::string> novel;
  for (const auto& c : novel_classes) {
    if (!novel.insert(c).second) throw Error(ErrorCode::InvalidArgument, "novel class '" + c + "' listed twice");
    if (base.contains(c)) throw Error(ErrorCode::OverlappingSplits, "class '" + c + "' is both base and novel");
  }
}

json to_json(const SplitSpec& spec) {
  return json{{"base_classes", spec.base_classes},   {"novel_classes", spec.novel_classes},
              {"min_class_size", spec.min_class_size}, {"max_classes", spec.max_classes},
              {"test_per_class", spec.test_per_class}, {"seed", spec.seed}};
}

SplitSpec split_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "split spec is not a JSON object");
  SplitSpec spec;
  spec.base_classes = value_or<std::vector<std::string>>(j, "base_classes", {});
  spec.novel_classes = value_or<std::vector<std::string>>(j, "novel_classes", {});
  spec.min_class_size = value_or<std::size_t>(j, "min_class_size", spec.min_class_size);
  spec.max_classes = value_or<std::size_t>(j, "max_classes", spec.max_classes);
  spec.test_per_class = value_or<std::size_t>(j, "test_per_class", spec.test_per_class);
  spec.seed = value_or<std::uint64_t>(j, "seed", spec.seed);
  return spec;
}

std::vector<std::string> parse_class_list(std::string_view text) {
  const std::string_view body = trim_unicode(text);
  if (!body.empty() && body.front() == '[') {
    try {
      return json::parse(body).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("class list: ") + e.what());
    }
  }
  std::vector<std::string> labels;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view label = trim_unicode(line);
    if (label.empty() || label.front() == '#') continue;
    labels.emplace_back(label);
  }
  return labels;
}

ClassInventory filter_classes(const std::vector<AssetRecord>& records, std::size_t min_class_size,
                              std::size_t max_classes) {
  const ClassInventory all = validate_inventory(records);
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [label, members] : all.classes())
    if (members.size() >= min_class_size) kept.emplace_back(label, members.size());
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > max_classes) kept.resize(max_classes);
  std::vector<std::string> labels;
  for (auto& [label, n] : kept) labels.push_back(std::move(label));
  return all.select(labels);
}

BenchmarkSplits build_splits(const ClassInventory& inventory, const SplitSpec& spec) {
  spec.validate();
  BenchmarkSplits splits;
  splits.seed = spec.seed;

  auto assign = [&](const std::vector<std::string>& classes, std::vector<AssetRecord>& train,
                    std::vector<AssetRecord>& test) {
    for (const auto& label : classes) {
      if (!inventory.contains(label)) throw Error(ErrorCode::UnknownClass, "class '" + label + "' not in inventory");
      std::vector<AssetRecord> members = inventory.records(label);
      std::sort(members.begin(), members.end(), by_class_then_id);
      std::vector<std::size_t> order(members.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      const std::size_t n_test = std::min(spec.test_per_class, members.size() - 1);
      CounterRng rng(spec.seed, label);
      const auto drawn = draw_without_replacement(std::move(order), n_test, rng);
      std::vector<bool> is_test(members.size(), false);
      for (std::size_t i : drawn) is_test[i] = true;
      for (std::size_t i = 0; i < members.size(); ++i) {
        members[i].split = is_test[i] ? Split::Test : Split::Train;
        (is_test[i] ? test : train).push_back(std::move(members[i]));
      }
    }
    std::sort(train.begin(), train.end(), by_class_then_id);
    std::sort(test.begin(), test.end(), by_class_then_id);
  };
  assign(spec.base_classes, splits.base_train, splits.base_test);
  assign(spec.novel_classes, splits.novel_train, splits.novel_test);
  return splits;
}

std::size_t StageStats::train() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, c] : per_class) n += c.train;
  return n;
}

std::size_t StageStats::test() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, c] : per_class) n += c.test;
  return n;
}

std::vector<std::size_t> StageStats::class_frequencies() const {
  std::vector<std::size_t> freq;
  for (const auto& [label, c] : per_class) freq.push_back(c.total());
  std::sort(freq.begin(), freq.end(), std::greater<>());
  return freq;
}

StageStats stage_stats(const std::vector<AssetRecord>& train, const std::vector<AssetRecord>& test) {
  StageStats stats;
  for (const auto& r : train) ++stats.per_class[r.class_label].train;
  for (const auto& r : test) ++stats.per_class[r.class_label].test;
  return stats;
}

SplitStatistics split_stats(const BenchmarkSplits& splits) {
  return {stage_stats(splits.base_train, splits.base_test), stage_stats(splits.novel_train, splits.novel_test),
          splits.seed, splits.sampler};
}

json to_json(const StageStats& stats) {
  json per_class = json::object();
  for (const auto& [label, c] : stats.per_class)
    per_class[label] = {{"train", c.train}, {"test", c.test}, {"total", c.total()}};
  return json{{"classes", stats.classes()},
              {"train", stats.train()},
              {"test", stats.test()},
              {"total", stats.total()},
              {"per_class", per_class},
              {"class_frequencies", stats.class_frequencies()}};
}

json to_json(const SplitStatistics& stats) {
  return json{{"base", to_json(stats.base)},
              {"novel", to_json(stats.novel)},
              {"seed", stats.seed},
              {"sampler", stats.sampler}};
}

}  // namespace replaykit
