#include "replaykit/replay.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "replaykit/allocation.hpp"
#include "replaykit/error.hpp"
#include "replaykit/selection.hpp"

namespace replaykit {

namespace {

struct ClassJob {
  std::string label;
  std::size_t quota = 0;
  const std::vector<AssetRecord>* records = nullptr;
  std::vector<AssetEmbedding> embeddings;
  std::vector<std::string> selected;
  bool seed_fallback = false;
};

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::uint64_t replay_budget(double replay_pct, std::uint64_t novel_size, std::uint64_t available) {
  if (!(replay_pct > 0.0 && replay_pct <= 100.0)) throw Error(ErrorCode::InvalidArgument, "replay_pct must be in (0, 100]");
  // r * N is exact for integral r; the slack guards against 0.1-style percentages
  const auto raw = static_cast<std::uint64_t>(std::floor(replay_pct * static_cast<double>(novel_size) / 100.0 + 1e-9));
  return std::min(raw, available);
}

ReplayManifest create_replay_set(const ClassInventory& base, std::uint64_t novel_size, const ReplayParams& params,
                                 EmbeddingProvider* provider, const ReplayOptions& options) {
  params.validate();
  if (novel_size == 0) throw Error(ErrorCode::InvalidArgument, "novel size must be positive");
  if (params.strategy == Strategy::KCenter && provider == nullptr)
    throw Error(ErrorCode::InvalidArgument, "k-center selection needs an embedding provider");

  ReplayManifest manifest;
  manifest.params = params;
  manifest.novel_size = novel_size;
  manifest.metadata.tool_version = kToolVersion;
  manifest.metadata.input_digests = options.input_digests;

  const std::uint64_t budget = replay_budget(params.replay_pct, novel_size, base.total());
  manifest.allocation = allocate_budget(base, budget, CapParams{params.m_min, params.m_max, params.p_max});

  std::vector<ClassJob> jobs;
  for (const auto& c : manifest.allocation.classes)
    jobs.push_back({c.class_label, static_cast<std::size_t>(c.quota), &base.records(c.class_label), {}, {}, false});

  if (params.strategy == Strategy::KCenter) {
    // one provider call for every class that needs selection
    std::vector<AssetRecord> pending;
    for (const auto& job : jobs)
      if (job.quota > 0 && job.quota < job.records->size())
        pending.insert(pending.end(), job.records->begin(), job.records->end());
    auto embedded = embed_assets(pending, *provider, params.max_captions);
    std::size_t offset = 0;
    for (auto& job : jobs) {
      if (!(job.quota > 0 && job.quota < job.records->size())) continue;
      const auto first = embedded.begin() + static_cast<std::ptrdiff_t>(offset);
      job.embeddings.assign(std::make_move_iterator(first),
                            std::make_move_iterator(first + static_cast<std::ptrdiff_t>(job.records->size())));
      offset += job.records->size();
    }
  }

  parallel_for(jobs.size(), options.threads, [&](std::size_t i) {
    ClassJob& job = jobs[i];
    if (job.quota == 0) return;
    if (params.strategy == Strategy::Random) {
      std::vector<std::string> ids;
      for (const auto& r : *job.records) ids.push_back(r.asset_id);
      job.selected = select_random(std::move(ids), job.quota, params.seed, job.label);
    } else if (job.quota >= job.records->size()) {
      for (const auto& r : *job.records) job.selected.push_back(r.asset_id);
      std::sort(job.selected.begin(), job.selected.end());
    } else {
      auto result = select_kcenter(std::move(job.embeddings), job.quota);
      job.selected = std::move(result.ids);
      job.seed_fallback = result.seed_fallback;
    }
  });

  for (auto& job : jobs) {
    if (job.seed_fallback) manifest.metadata.seed_fallbacks.push_back(job.label);
    manifest.selections.emplace(job.label, std::move(job.selected));
  }
  return manifest;
}

std::vector<AssetRecord> training_records(const std::vector<AssetRecord>& records) {
  std::vector<AssetRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const AssetRecord& r) { return r.split != Split::Test; });
  return out;
}

std::vector<AssetRecord> mix_training_view(const ReplayManifest& manifest, const std::vector<AssetRecord>& base_records,
                                           const std::vector<AssetRecord>& novel_records) {
  std::unordered_map<std::string, const AssetRecord*> by_id;
  for (const auto& r : base_records) by_id.emplace(r.asset_id, &r);

  std::vector<AssetRecord> out;
  std::unordered_set<std::string> seen;
  for (const auto& [label, ids] : manifest.selections) {
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorCode::UnresolvedAssetId, "replay id '" + id + "' not in base metadata");
      if (it->second->class_label != label)
        throw Error(ErrorCode::UnresolvedAssetId, "replay id '" + id + "' is not in class '" + label + "'");
      if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateAssetId, "replay id '" + id + "' selected twice");
      out.push_back(*it->second);
    }
  }
  for (const auto& r : novel_records) {
    if (!seen.insert(r.asset_id).second)
      throw Error(ErrorCode::DuplicateAssetId, "asset '" + r.asset_id + "' is in both replay and novel data");
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const AssetRecord& a, const AssetRecord& b) { return a.asset_id < b.asset_id; });
  return out;
}

}  // namespace replaykit
