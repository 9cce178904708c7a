#include <limits>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "replaykit/allocation.hpp"
#include "replaykit/benchmark.hpp"
#include "replaykit/data_io.hpp"
#include "replaykit/error.hpp"
#include "replaykit/metrics.hpp"
#include "replaykit/replay.hpp"
#include "replaykit/selection.hpp"

namespace py = pybind11;
using namespace replaykit;

namespace {

py::dict plan_dict(const AllocationPlan& plan) {
  py::dict quotas, caps;
  for (const auto& c : plan.classes) {
    quotas[py::str(c.class_label)] = c.quota;
    caps[py::str(c.class_label)] = c.cap;
  }
  py::dict out;
  out["budget"] = plan.budget;
  out["alpha"] = plan.alpha;
  out["shortfall"] = plan.shortfall;
  out["quotas"] = quotas;
  out["caps"] = caps;
  return out;
}

std::vector<AssetEmbedding> assets_from(const std::vector<std::string>& ids, const Eigen::MatrixXd& vectors) {
  if (static_cast<Eigen::Index>(ids.size()) != vectors.rows())
    throw Error(ErrorCode::DimensionMismatch, "ids and vector rows differ in length");
  std::vector<AssetEmbedding> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::VectorXd row = vectors.row(static_cast<Eigen::Index>(i));
    out.push_back({ids[i], std::vector<double>(row.data(), row.data() + row.size()), 1});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class-incremental replay selection and evaluation metrics";

  py::register_exception<Error>(m, "ReplayKitError", PyExc_ValueError);

  m.attr("__version__") = kToolVersion;

  m.def("replay_budget", &replay_budget, py::arg("replay_pct"), py::arg("novel_size"),
        py::arg("available") = std::numeric_limits<std::uint64_t>::max());

  m.def("effective_cap", &effective_cap, py::arg("n"), py::arg("m_max") = 20, py::arg("p_max") = 0.30);

  m.def(
      "total_for_alpha",
      [](const ClassCounts& counts, double alpha, std::uint64_t m_min, std::uint64_t m_max, double p_max) {
        return total_for_alpha(counts, alpha, {m_min, m_max, p_max});
      },
      py::arg("counts"), py::arg("alpha"), py::arg("m_min") = 3, py::arg("m_max") = 20, py::arg("p_max") = 0.30);

  m.def(
      "allocate_budget",
      [](const ClassCounts& counts, std::uint64_t budget, std::uint64_t m_min, std::uint64_t m_max, double p_max) {
        return plan_dict(allocate_budget(counts, budget, {m_min, m_max, p_max}));
      },
      py::arg("counts"), py::arg("budget"), py::arg("m_min") = 3, py::arg("m_max") = 20, py::arg("p_max") = 0.30);

  m.def(
      "select_kcenter",
      [](const std::vector<std::string>& ids, const Eigen::MatrixXd& vectors, std::size_t k) {
        const auto r = select_kcenter(assets_from(ids, vectors), k);
        py::dict out;
        out["ids"] = r.ids;
        out["seed_fallback"] = r.seed_fallback;
        out["coverage"] = r.coverage;
        return out;
      },
      py::arg("ids"), py::arg("vectors"), py::arg("k"),
      "Greedy farthest-point selection over unit-norm asset vectors (one row per id).");

  m.def("select_random", &select_random, py::arg("ids"), py::arg("k"), py::arg("seed"), py::arg("stream"));

  m.def(
      "moments",
      [](const Eigen::MatrixXd& rows) {
        const auto g = moments(FeatureSet{"features", rows});
        return py::make_tuple(g.mean, g.cov);
      },
      py::arg("rows"));

  m.def(
      "frechet_distance",
      [](const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1, const Eigen::VectorXd& mu2,
         const Eigen::MatrixXd& cov2) {
        const auto r = frechet_distance({mu1, cov1}, {mu2, cov2});
        return py::make_tuple(r.value, r.regularized);
      },
      py::arg("mu1"), py::arg("cov1"), py::arg("mu2"), py::arg("cov2"));

  m.def(
      "frechet_distance_features",
      [](const Eigen::MatrixXd& generated, const Eigen::MatrixXd& reference) {
        const auto r = frechet_distance(moments({"generated", generated}), moments({"reference", reference}));
        return py::make_tuple(r.value, r.regularized);
      },
      py::arg("generated"), py::arg("reference"));

  m.def(
      "forgetting",
      [](double before, double after, const std::string& direction) {
        const auto d = parse_direction(direction);
        if (!d) throw Error(ErrorCode::InvalidArgument, "unknown direction '" + direction + "'");
        return forgetting(before, after, *d);
      },
      py::arg("before"), py::arg("after"), py::arg("direction"));

  m.def(
      "clip_score_files",
      [](const std::string& text, const std::string& render, const std::string& grouping) {
        return clip_score(load_embeddings(text), load_embeddings(render), grouping_from_json(load_json(grouping)));
      },
      py::arg("text"), py::arg("render"), py::arg("grouping"));

  m.def(
      "split_stats_json",
      [](const std::string& metadata, const std::string& spec_json) {
        const auto spec = split_spec_from_json(nlohmann::json::parse(spec_json));
        const auto inventory = filter_classes(load_metadata(metadata), spec.min_class_size, spec.max_classes);
        return to_json(split_stats(build_splits(inventory, spec))).dump();
      },
      py::arg("metadata"), py::arg("spec_json"));

  m.def(
      "replay_manifest_json",
      [](const std::string& metadata, std::uint64_t novel_size, const std::optional<std::string>& embeddings,
         double replay_pct, std::uint32_t m_min, std::uint32_t m_max, double p_max, std::uint32_t max_captions,
         const std::string& strategy, std::uint64_t seed, std::size_t threads) {
        ReplayParams params;
        params.replay_pct = replay_pct;
        params.m_min = m_min;
        params.m_max = m_max;
        params.p_max = p_max;
        params.max_captions = max_captions;
        const auto parsed = parse_strategy(strategy);
        if (!parsed) throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + strategy + "'");
        params.strategy = *parsed;
        params.seed = seed;
        const auto base = validate_inventory(training_records(load_metadata(metadata)));
        std::unique_ptr<EmbeddingProvider> provider;
        if (embeddings) provider = std::make_unique<FileEmbeddingProvider>(load_embeddings(*embeddings));
        py::gil_scoped_release release;
        return canonical_dump(to_json(create_replay_set(base, novel_size, params, provider.get(), {threads, {}})));
      },
      py::arg("metadata"), py::arg("novel_size"), py::arg("embeddings") = std::nullopt, py::arg("replay_pct") = 20.0,
      py::arg("m_min") = 3, py::arg("m_max") = 20, py::arg("p_max") = 0.30, py::arg("max_captions") = 11,
      py::arg("strategy") = "kcenter", py::arg("seed") = 0, py::arg("threads") = 1);
}
