#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "replaykit/allocation.hpp"
#include "replaykit/benchmark.hpp"
#include "replaykit/data_io.hpp"
#include "replaykit/digest.hpp"
#include "replaykit/embedding_provider.hpp"
#include "replaykit/error.hpp"
#include "replaykit/metrics.hpp"
#include "replaykit/replay.hpp"
#include "replaykit/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace replaykit::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_endpoint() {
  const char* value = std::getenv("REPLAYKIT_ENDPOINT");
  return value ? value : "";
}

std::string format(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

struct ProviderFlags {
  std::string embeddings;  // file mode table
  std::string endpoint = env_endpoint();
  std::string cache;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  int timeout_ms = 30000;

  void attach(CLI::App* app, bool with_table_flag) {
    if (with_table_flag) app->add_option("--embeddings", embeddings, "Caption embedding table (file mode)");
    app->add_option("--endpoint", endpoint, "Embedding service URL (http mode; default $REPLAYKIT_ENDPOINT)");
    app->add_option("--cache", cache, "Write-through cache file for fetched caption embeddings");
    app->add_option("--batch-size", batch_size, "Texts per HTTP request")->check(CLI::PositiveNumber);
    app->add_option("--max-in-flight", max_in_flight, "Concurrent HTTP requests")->check(CLI::PositiveNumber);
    app->add_option("--timeout-ms", timeout_ms, "HTTP timeout in milliseconds")->check(CLI::PositiveNumber);
  }

  ProviderConfig config(std::optional<ProviderMode> forced = std::nullopt) const {
    ProviderConfig cfg;
    cfg.mode = forced ? *forced : (embeddings.empty() ? ProviderMode::Http : ProviderMode::File);
    cfg.table_path = embeddings;
    cfg.endpoint_url = endpoint;
    cfg.batch_size = batch_size;
    cfg.max_in_flight = max_in_flight;
    cfg.timeout = std::chrono::milliseconds(timeout_ms);
    if (!cache.empty()) cfg.cache_path = cache;
    if (cfg.mode == ProviderMode::File && cfg.table_path.empty()) throw UsageError("file provider needs --embeddings/--table");
    if (cfg.mode == ProviderMode::Http && cfg.endpoint_url.empty())
      throw UsageError("need --embeddings or --endpoint (or REPLAYKIT_ENDPOINT)");
    return cfg;
  }
};

struct CapFlags {
  std::uint32_t m_min = 3;
  std::uint32_t m_max = 20;
  double p_max = 0.30;

  void attach(CLI::App* app) {
    app->add_option("--m-min", m_min, "Per-class minimum quota")->check(CLI::PositiveNumber);
    app->add_option("--m-max", m_max, "Per-class maximum quota")->check(CLI::PositiveNumber);
    app->add_option("--p-max", p_max, "Maximum share of a class, as 0.30 or 30");
  }
  CapParams caps() const { return {m_min, m_max, normalize_fraction(p_max)}; }
};

std::uint64_t novel_size_from(std::optional<std::uint64_t> size, const std::string& novel_metadata) {
  if (size) return *size;
  if (!novel_metadata.empty()) return training_records(load_metadata(novel_metadata)).size();
  throw UsageError("need --novel-size or --novel-metadata");
}

ClassInventory base_inventory(const std::string& metadata) {
  return validate_inventory(training_records(load_metadata(metadata)));
}

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << canonical_dump(j);
  else
    save_json(j, path);
}

// ---- split ---------------------------------------------------------------

struct SplitCmd {
  std::string metadata, spec_path, base_classes, novel_classes, out_dir;
  std::size_t min_class_size = 15, max_classes = 90, test_per_class = 5;
  std::uint64_t seed = 0;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("split", "Build class-incremental base/novel splits");
    app->add_option("--metadata", metadata, "Asset metadata (JSON lines)")->required();
    app->add_option("--spec", spec_path, "Split spec JSON (class lists and sizes)");
    app->add_option("--base-classes", base_classes, "Base class list (JSON array or one label per line)");
    app->add_option("--novel-classes", novel_classes, "Novel class list (JSON array or one label per line)");
    app->add_option("--min-class-size", min_class_size, "Drop classes smaller than this");
    app->add_option("--max-classes", max_classes, "Keep at most this many largest classes");
    app->add_option("--test-per-class", test_per_class, "Test assets per class");
    app->add_option("--seed", seed, "Test sampling seed");
    app->add_option("--out", out_dir, "Output directory")->required();
  }

  int exec(std::ostream& out) const {
    SplitSpec spec;
    if (!spec_path.empty()) spec = split_spec_from_json(load_json(spec_path));
    if (!base_classes.empty()) spec.base_classes = parse_class_list(read_file(base_classes));
    if (!novel_classes.empty()) spec.novel_classes = parse_class_list(read_file(novel_classes));
    if (spec_path.empty() || app->count("--min-class-size")) spec.min_class_size = min_class_size;
    if (spec_path.empty() || app->count("--max-classes")) spec.max_classes = max_classes;
    if (spec_path.empty() || app->count("--test-per-class")) spec.test_per_class = test_per_class;
    if (spec_path.empty() || app->count("--seed")) spec.seed = seed;
    if (spec.base_classes.empty() || spec.novel_classes.empty())
      throw UsageError("split needs base and novel class lists (--spec or --base-classes/--novel-classes)");

    const auto inventory = filter_classes(load_metadata(metadata), spec.min_class_size, spec.max_classes);
    const auto splits = build_splits(inventory, spec);
    const auto stats = split_stats(splits);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_metadata(dir / "base_train.jsonl", splits.base_train);
    save_metadata(dir / "base_test.jsonl", splits.base_test);
    save_metadata(dir / "novel_train.jsonl", splits.novel_train);
    save_metadata(dir / "novel_test.jsonl", splits.novel_test);
    json stats_json = to_json(stats);
    stats_json["filtered_classes"] = inventory.class_count();
    save_json(stats_json, dir / "stats.json");
    save_json(to_json(spec), dir / "split_spec.json");

    out << "classes kept after filtering: " << inventory.class_count() << "\n";
    out << "base:  " << stats.base.classes() << " classes, " << stats.base.train() << " train, "
        << stats.base.test() << " test, " << stats.base.total() << " total\n";
    out << "novel: " << stats.novel.classes() << " classes, " << stats.novel.train() << " train, "
        << stats.novel.test() << " test, " << stats.novel.total() << " total\n";
    out << "seed: " << spec.seed << "\n";
    return kOk;
  }
};

// ---- embed ---------------------------------------------------------------

struct EmbedCmd {
  std::string metadata, provider = "http", out_path;
  std::uint32_t max_captions = 11;
  ProviderFlags flags;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("embed", "Embed captions into a caption-keyed table");
    app->add_option("--metadata", metadata, "Asset metadata (JSON lines)")->required();
    app->add_option("--provider", provider, "file | http")->check(CLI::IsMember({"file", "http"}));
    app->add_option("--table", flags.embeddings, "Source table (file provider)");
    flags.attach(app, false);
    app->add_option("--max-captions", max_captions, "Captions per asset")->check(CLI::PositiveNumber);
    app->add_option("--out", out_path, "Output embedding table")->required();
  }

  int exec(std::ostream& out) const {
    const auto mode = provider == "file" ? ProviderMode::File : ProviderMode::Http;
    auto source = make_provider(flags.config(mode));
    std::vector<std::string> texts;
    for (const auto& record : load_metadata(metadata))
      for (auto& caption : valid_captions(record, max_captions)) texts.push_back(std::move(caption));
    const auto vectors = source->embed_texts(texts);

    EmbeddingTable table;
    std::vector<std::pair<std::string, std::size_t>> keyed;
    for (std::size_t i = 0; i < texts.size(); ++i) keyed.emplace_back(caption_key(texts[i]), i);
    std::sort(keyed.begin(), keyed.end());
    keyed.erase(std::unique(keyed.begin(), keyed.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    for (const auto& [key, i] : keyed) table.add(key, vectors[i]);
    save_embeddings(out_path, table);
    if (!flags.cache.empty()) source->cache_flush();
    out << "embedded " << table.size() << " distinct captions (dim " << table.dim() << ")\n";
    return kOk;
  }
};

// ---- replay --------------------------------------------------------------

struct ReplayCmd {
  std::string metadata, novel_metadata, out_path = "manifest.json", mix_out, strategy = "kcenter";
  std::optional<std::uint64_t> novel_size;
  double replay_pct = 20.0;
  std::uint32_t max_captions = 11;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  CapFlags caps;
  ProviderFlags flags;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("replay", "Create a replay manifest");
    app->add_option("--metadata", metadata, "Base metadata; test-tagged records are ignored")->required();
    flags.attach(app, true);
    app->add_option("--novel-size", novel_size, "Novel training-set size");
    app->add_option("--novel-metadata", novel_metadata, "Novel metadata (size = non-test records)");
    app->add_option("--replay-pct", replay_pct, "Replay budget as % of the novel size")->check(CLI::Range(0.0, 100.0));
    caps.attach(app);
    app->add_option("--max-captions", max_captions, "Captions per asset")->check(CLI::PositiveNumber);
    app->add_option("--strategy", strategy, "kcenter | random")->check(CLI::IsMember({"kcenter", "random"}));
    app->add_option("--seed", seed, "Seed (random strategy)");
    app->add_option("--threads", threads, "Selection threads")->check(CLI::PositiveNumber);
    app->add_option("--out", out_path, "Manifest path");
    app->add_option("--mix-out", mix_out, "Also write replay + novel training metadata here");
  }

  int exec(std::ostream& out) const {
    ReplayParams params;
    params.replay_pct = replay_pct;
    params.m_min = caps.m_min;
    params.m_max = caps.m_max;
    params.p_max = normalize_fraction(caps.p_max);
    params.max_captions = max_captions;
    params.strategy = *parse_strategy(strategy);
    params.seed = seed;

    const auto size = novel_size_from(novel_size, novel_metadata);
    const auto base_records = training_records(load_metadata(metadata));
    const auto base = validate_inventory(base_records);

    ReplayOptions options;
    options.threads = threads;
    options.input_digests["metadata"] = sha256_file(metadata);
    std::unique_ptr<EmbeddingProvider> provider;
    if (params.strategy == Strategy::KCenter) {
      const auto cfg = flags.config();
      if (cfg.mode == ProviderMode::File) options.input_digests["embeddings"] = sha256_file(cfg.table_path);
      else options.input_digests["endpoint"] = sha256_hex(cfg.endpoint_url);
      provider = make_provider(cfg);
    }
    if (!novel_metadata.empty()) options.input_digests["novel_metadata"] = sha256_file(novel_metadata);

    const auto manifest = create_replay_set(base, size, params, provider.get(), options);
    save_manifest(manifest, out_path);
    if (provider && !flags.cache.empty()) provider->cache_flush();
    if (!mix_out.empty()) {
      if (novel_metadata.empty()) throw UsageError("--mix-out needs --novel-metadata");
      save_metadata(mix_out, mix_training_view(manifest, base_records, training_records(load_metadata(novel_metadata))));
    }

    out << "budget B: " << manifest.allocation.budget << "\n";
    out << "selected: " << manifest.selected_count() << " across " << manifest.allocation.classes.size()
        << " classes (shortfall " << manifest.allocation.shortfall << ")\n";
    out << "alpha: " << manifest.allocation.alpha << "\n";
    out << "strategy: " << to_string(params.strategy) << "\n";
    out << "seed: " << params.seed << "\n";
    return kOk;
  }
};

// ---- allocate ------------------------------------------------------------

struct AllocateCmd {
  std::string metadata, out_path;
  std::optional<std::uint64_t> budget, novel_size;
  double replay_pct = 20.0;
  CapFlags caps;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("allocate", "Compute per-class replay quotas");
    app->add_option("--metadata", metadata, "Base metadata; test-tagged records are ignored")->required();
    app->add_option("--budget", budget, "Replay budget B");
    app->add_option("--novel-size", novel_size, "Derive B from the novel size and --replay-pct");
    app->add_option("--replay-pct", replay_pct, "Replay budget as % of the novel size")->check(CLI::Range(0.0, 100.0));
    caps.attach(app);
    app->add_option("--out", out_path, "Plan JSON (default: stdout)");
  }

  int exec(std::ostream& out) const {
    const auto base = base_inventory(metadata);
    std::uint64_t b = 0;
    if (budget)
      b = *budget;
    else if (novel_size)
      b = replay_budget(replay_pct, *novel_size, base.total());
    else
      throw UsageError("allocate needs --budget or --novel-size");
    emit_json(to_json(allocate_budget(base, b, caps.caps())), out_path, out);
    return kOk;
  }
};

// ---- select --------------------------------------------------------------

struct SelectCmd {
  std::string metadata, class_label, plan_path, out_path, strategy = "kcenter";
  std::optional<std::size_t> k;
  std::uint32_t max_captions = 11;
  std::uint64_t seed = 0;
  ProviderFlags flags;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("select", "Select exemplars for one class or for a whole plan");
    app->add_option("--metadata", metadata, "Base metadata; test-tagged records are ignored")->required();
    flags.attach(app, true);
    app->add_option("--class", class_label, "Class to select from (with --k)");
    app->add_option("--k", k, "Number of exemplars")->check(CLI::PositiveNumber);
    app->add_option("--plan", plan_path, "Allocation plan JSON (selects every class)");
    app->add_option("--strategy", strategy, "kcenter | random")->check(CLI::IsMember({"kcenter", "random"}));
    app->add_option("--max-captions", max_captions, "Captions per asset")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Seed (random strategy)");
    app->add_option("--out", out_path, "Selections JSON (default: stdout)");
  }

  int exec(std::ostream& out) const {
    const auto base = base_inventory(metadata);
    std::map<std::string, std::size_t> quotas;
    if (!plan_path.empty()) {
      for (const auto& c : plan_from_json(load_json(plan_path)).classes) quotas[c.class_label] = c.quota;
    } else if (!class_label.empty() && k) {
      quotas[class_label] = *k;
    } else {
      throw UsageError("select needs --plan or --class with --k");
    }

    const auto mode = parse_strategy(strategy).value();
    std::unique_ptr<EmbeddingProvider> provider;
    if (mode == Strategy::KCenter) provider = make_provider(flags.config());

    json selections = json::object();
    json fallbacks = json::array();
    for (const auto& [label, quota] : quotas) {
      const auto& records = base.records(label);
      std::vector<std::string> ids;
      if (quota == 0) {
      } else if (mode == Strategy::Random) {
        for (const auto& r : records) ids.push_back(r.asset_id);
        ids = select_random(std::move(ids), quota, seed, label);
      } else {
        auto result = select_kcenter(embed_assets(records, *provider, max_captions), quota);
        ids = std::move(result.ids);
        if (result.seed_fallback) fallbacks.push_back(label);
      }
      selections[label] = ids;
    }
    emit_json(json{{"selections", selections}, {"strategy", strategy}, {"seed", seed}, {"seed_fallbacks", fallbacks}},
              out_path, out);
    return kOk;
  }
};

// ---- eval ----------------------------------------------------------------

struct EvalCmd {
  CLI::App* app = nullptr;
  CLI::App* clip = nullptr;
  CLI::App* fd = nullptr;
  CLI::App* forget = nullptr;
  CLI::App* report = nullptr;
  std::string text, render, grouping;
  std::string generated, reference;
  double before = 0.0, after = 0.0;
  std::string direction;
  std::string config, out_path;

  void attach(CLI::App& root) {
    app = root.add_subcommand("eval", "Evaluation metrics");
    app->require_subcommand(1);
    clip = app->add_subcommand("clip", "CLIP score of text vs rendered-view features");
    clip->add_option("--text", text, "Text features table (one row per asset)")->required();
    clip->add_option("--render", render, "Render features table")->required();
    clip->add_option("--grouping", grouping, "JSON map asset id -> render ids")->required();

    fd = app->add_subcommand("fd", "Frechet distance between two feature sets");
    fd->add_option("--generated", generated, "Generated features table")->required();
    fd->add_option("--reference", reference, "Reference features table")->required();

    forget = app->add_subcommand("forgetting", "Relative base-class drop in percent");
    forget->add_option("--before", before, "Base score before novel training")->required();
    forget->add_option("--after", after, "Base score after novel training")->required();
    forget->add_option("--direction", direction, "higher | lower")
        ->required()
        ->check(CLI::IsMember({"higher", "lower", "higher_better", "lower_better"}));

    report = app->add_subcommand("report", "Base/Novel/All/F table from a report config");
    report->add_option("--config", config, "Report config JSON")->required();
    report->add_option("--out", out_path, "Also write the report JSON here");
  }

  int exec(std::ostream& out) const {
    if (clip->parsed()) {
      const double score = clip_score(load_embeddings(text), load_embeddings(render),
                                      grouping_from_json(load_json(grouping)));
      out << format("%.4f", score) << "\n";
    } else if (fd->parsed()) {
      const auto result = frechet_distance(moments(feature_set_from_table("generated", load_embeddings(generated))),
                                           moments(feature_set_from_table("reference", load_embeddings(reference))));
      out << format("%.6f", result.value) << "\n";
      if (result.regularized) out << "note: covariance jitter 1e-6 applied\n";
    } else if (forget->parsed()) {
      out << format("%.2f", forgetting(before, after, *parse_direction(direction))) << "\n";
    } else if (report->parsed()) {
      run_report(out);
    }
    return kOk;
  }

  void run_report(std::ostream& out) const {
    const fs::path base_dir = fs::path(config).parent_path();
    auto resolve = [&](const json& j, const char* key) {
      if (!j.contains(key) || !j.at(key).is_string())
        throw Error(ErrorCode::SchemaError, std::string("report config: missing path '") + key + "'");
      const fs::path p = j.at(key).get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    };
    auto before_of = [](const json& j) -> std::optional<double> {
      if (j.contains("base_before") && j.at("base_before").is_number()) return j.at("base_before").get<double>();
      return std::nullopt;
    };
    auto clip_split = [&](const json& j) {
      std::vector<double> scores;
      for (const auto& [asset, s] : clip_scores_per_asset(load_embeddings(resolve(j, "text")),
                                                         load_embeddings(resolve(j, "render")),
                                                         grouping_from_json(load_json(resolve(j, "grouping")))))
        scores.push_back(s);
      return scores;
    };
    auto fd_split = [&](const json& j) {
      return FdInputs{feature_set_from_table("generated", load_embeddings(resolve(j, "generated"))),
                      feature_set_from_table("reference", load_embeddings(resolve(j, "reference")))};
    };

    const json cfg = load_json(config);
    std::vector<MetricReport> reports;
    try {
      for (const auto& entry : cfg.value("clip", json::array()))
        reports.push_back(assemble_clip_report(entry.value("metric", "CLIP"), clip_split(entry.at("base")),
                                               clip_split(entry.at("novel")), before_of(entry)));
      for (const auto& entry : cfg.value("fd", json::array()))
        reports.push_back(assemble_fd_report(entry.value("metric", "FD"), fd_split(entry.at("base")),
                                             fd_split(entry.at("novel")), before_of(entry)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("report config: ") + e.what());
    }

    out << render_table(reports);
    if (!out_path.empty()) {
      json j = json::array();
      for (const auto& r : reports) j.push_back(to_json(r));
      save_json(json{{"reports", j}}, out_path);
    }
  }
};

// ---- stats ---------------------------------------------------------------

struct StatsCmd {
  std::string split_dir, metadata, out_path;
  CLI::App* app = nullptr;

  void attach(CLI::App& root) {
    app = root.add_subcommand("stats", "Class-frequency statistics for a split directory or metadata file");
    app->add_option("--split-dir", split_dir, "Directory written by `split`");
    app->add_option("--metadata", metadata, "Single metadata file");
    app->add_option("--out", out_path, "Statistics JSON (default: stdout)");
  }

  int exec(std::ostream& out) const {
    if (!split_dir.empty()) {
      const fs::path dir(split_dir);
      BenchmarkSplits splits;
      splits.base_train = load_metadata(dir / "base_train.jsonl");
      splits.base_test = load_metadata(dir / "base_test.jsonl");
      splits.novel_train = load_metadata(dir / "novel_train.jsonl");
      splits.novel_test = load_metadata(dir / "novel_test.jsonl");
      json stats = to_json(split_stats(splits));
      stats.erase("seed");
      stats.erase("sampler");
      emit_json(stats, out_path, out);
    } else if (!metadata.empty()) {
      std::vector<AssetRecord> train, test;
      for (auto& r : load_metadata(metadata)) (r.split == Split::Test ? test : train).push_back(std::move(r));
      emit_json(to_json(stage_stats(train, test)), out_path, out);
    } else {
      throw UsageError("stats needs --split-dir or --metadata");
    }
    return kOk;
  }
};

}  // namespace

double normalize_fraction(double value) {
  if (!(value > 0.0) || value > 100.0) throw UsageError("expected a fraction in (0, 1] or a percentage in (1, 100]");
  return value > 1.0 ? value / 100.0 : value;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"replaykit: replay memories, class-incremental splits and continual-learning metrics", "replaykit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SplitCmd split;
  EmbedCmd embed;
  ReplayCmd replay;
  AllocateCmd allocate;
  SelectCmd select;
  EvalCmd eval;
  StatsCmd stats;
  split.attach(app);
  embed.attach(app);
  replay.attach(app);
  allocate.attach(app);
  select.attach(app);
  eval.attach(app);
  stats.attach(app);

  if (args.empty()) {
    err << app.help();
    return kUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (split.app->parsed()) return split.exec(out);
    if (embed.app->parsed()) return embed.exec(out);
    if (replay.app->parsed()) return replay.exec(out);
    if (allocate.app->parsed()) return allocate.exec(out);
    if (select.app->parsed()) return select.exec(out);
    if (eval.app->parsed()) return eval.exec(out);
    if (stats.app->parsed()) return stats.exec(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::InvalidArgument) return kUsage;
    return e.category() == ErrorCategory::Service ? kService : kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  err << app.help();
  return kUsage;
}

}  // namespace replaykit::cli
