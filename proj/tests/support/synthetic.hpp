#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "replaykit/core_model.hpp"
#include "replaykit/embedding_provider.hpp"

namespace replaykit::testing {

struct SyntheticDataset {
  std::vector<AssetRecord> base;   // train-tagged base assets
  std::vector<AssetRecord> novel;  // train-tagged novel assets
  EmbeddingTable captions;         // caption_key -> raw vector
};

inline std::string padded(std::size_t i, int width = 3) {
  std::string s = std::to_string(i);
  return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0, '0') + s;
}

/// Long-tailed toy inventory: class c has about head / (c + 1)^0.8 assets
/// (at least `floor_size`), each with 2..11 captions. Caption vectors are a
/// class prototype plus an asset offset plus caption noise.
inline SyntheticDataset make_long_tailed(std::size_t base_classes = 45, std::size_t novel_classes = 10,
                                         std::uint64_t seed = 7, std::size_t dim = 16, double head = 120.0,
                                         std::size_t floor_size = 6) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> caption_count(2, 11);
  static const char* kAdjectives[] = {"red", "small", "wooden", "shiny", "striped", "plastic", "old", "round"};

  SyntheticDataset data;
  auto make_class = [&](const std::string& label, std::size_t size, std::vector<AssetRecord>& out) {
    std::vector<double> proto(dim);
    for (auto& x : proto) x = gauss(gen);
    for (std::size_t a = 0; a < size; ++a) {
      AssetRecord r;
      r.asset_id = label + "_" + padded(a);
      r.class_label = label;
      r.split = Split::Train;
      std::vector<double> offset(dim);
      for (auto& x : offset) x = 0.6 * gauss(gen);
      const int n_captions = caption_count(gen);
      for (int c = 0; c < n_captions; ++c) {
        std::string caption = std::string("a ") + kAdjectives[(a + c) % 8] + " " + label + " toy #" + padded(a) + "." +
                              std::to_string(c);
        std::vector<float> v(dim);
        for (std::size_t i = 0; i < dim; ++i) v[i] = static_cast<float>(proto[i] + offset[i] + 0.2 * gauss(gen));
        data.captions.add(caption_key(caption), v);
        r.captions.push_back(std::move(caption));
      }
      out.push_back(std::move(r));
    }
  };

  for (std::size_t c = 0; c < base_classes; ++c) {
    const auto size = std::max<std::size_t>(floor_size, static_cast<std::size_t>(head / std::pow(c + 1.0, 0.8)));
    make_class("base" + padded(c, 2), size, data.base);
  }
  for (std::size_t c = 0; c < novel_classes; ++c) {
    const auto size = std::max<std::size_t>(floor_size, static_cast<std::size_t>(head / std::pow(c + 1.0, 0.8)));
    make_class("novel" + padded(c, 2), size, data.novel);
  }
  return data;
}

}  // namespace replaykit::testing
