#include "replaykit/embedding_provider.hpp"

#include <exception>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "replaykit/data_io.hpp"
#include "replaykit/digest.hpp"
#include "replaykit/error.hpp"

namespace replaykit {

using nlohmann::json;

void ProviderConfig::validate() const {
  if (mode == ProviderMode::File && table_path.empty())
    throw Error(ErrorCode::InvalidArgument, "file provider needs a table path");
  if (mode == ProviderMode::Http) {
    if (endpoint_url.empty()) throw Error(ErrorCode::InvalidArgument, "http provider needs an endpoint url");
    if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
    if (max_in_flight == 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be positive");
    if (max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
  }
}

std::string caption_key(std::string_view caption) { return sha256_hex(caption); }

EmbeddingProvider::EmbeddingProvider(std::optional<std::filesystem::path> cache_path)
    : cache_path_(std::move(cache_path)) {
  if (cache_path_ && std::filesystem::exists(*cache_path_)) {
    const EmbeddingTable table = load_embeddings(*cache_path_);
    dim_ = table.dim();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto row = table.row(i);
      cache_.emplace(table.ids()[i], Vector(row.begin(), row.end()));
    }
  }
}

void EmbeddingProvider::check_dim(std::size_t dim) {
  if (dim_ == 0) dim_ = dim;
  if (dim != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "embedding dim " + std::to_string(dim) + " disagrees with established dim " + std::to_string(dim_));
}

std::size_t EmbeddingProvider::dim() const {
  std::lock_guard lock(mutex_);
  return dim_;
}

std::vector<Vector> EmbeddingProvider::embed_texts(const std::vector<std::string>& texts) {
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(caption_key(t));

  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  {
    std::lock_guard lock(mutex_);
    std::unordered_map<std::string, bool> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.contains(keys[i]) || queued.contains(keys[i])) continue;
      queued.emplace(keys[i], true);
      missing.push_back(texts[i]);
      missing_keys.push_back(keys[i]);
    }
  }

  if (!missing.empty()) {
    std::vector<Vector> fetched = fetch(missing);
    if (fetched.size() != missing.size())
      throw Error(ErrorCode::DimensionMismatch, "provider returned " + std::to_string(fetched.size()) +
                                                    " vectors for " + std::to_string(missing.size()) + " texts");
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < fetched.size(); ++i) {
      check_dim(fetched[i].size());
      cache_.insert_or_assign(missing_keys[i], std::move(fetched[i]));
    }
  }

  std::vector<Vector> out;
  out.reserve(texts.size());
  std::lock_guard lock(mutex_);
  for (const auto& key : keys) out.push_back(cache_.at(key));
  return out;
}

EmbeddingTable EmbeddingProvider::cache_table() const {
  std::lock_guard lock(mutex_);
  EmbeddingTable table(dim_);
  for (const auto& [key, vec] : cache_) table.add(key, vec);
  return table;
}

void EmbeddingProvider::cache_flush() {
  if (!cache_path_) throw Error(ErrorCode::InvalidArgument, "no cache path configured");
  save_embeddings(*cache_path_, cache_table());
}

FileEmbeddingProvider::FileEmbeddingProvider(EmbeddingTable table, std::optional<std::filesystem::path> cache_path)
    : EmbeddingProvider(std::move(cache_path)), table_(std::move(table)) {}

std::vector<Vector> FileEmbeddingProvider::fetch(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto row = table_.find(caption_key(text));
    if (!row) row = table_.find(text);
    if (!row) throw Error(ErrorCode::MissingEmbedding, "caption not in table: \"" + text + "\"");
    out.emplace_back(row->begin(), row->end());
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig config)
    : EmbeddingProvider(config.cache_path), config_(std::move(config)) {
  config_.validate();
  const std::string& url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  host_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/embed";
}

std::vector<Vector> HttpEmbeddingProvider::post_batch(const std::vector<std::string>& batch) {
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  const std::string body = json{{"texts", batch}}.dump();

  std::string last_failure;
  auto backoff = config_.retry_backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++requests_;
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 400 && res->status < 500)
      throw Error(ErrorCode::ServiceRejected,
                  "embedding service returned " + std::to_string(res->status) + ": " + res->body);
    if (res->status != 200) {
      last_failure = "status " + std::to_string(res->status);
      continue;
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      last_failure = std::string("malformed response: ") + e.what();
      continue;
    }
    std::vector<Vector> rows;
    std::size_t dim = 0;
    try {
      dim = parsed.at("dim").get<std::size_t>();
      rows = parsed.at("embeddings").get<std::vector<Vector>>();
    } catch (const json::exception& e) {
      last_failure = std::string("malformed response: ") + e.what();
      continue;
    }
    if (rows.size() != batch.size())
      throw Error(ErrorCode::DimensionMismatch, "service returned " + std::to_string(rows.size()) +
                                                    " embeddings for " + std::to_string(batch.size()) + " texts");
    for (const auto& row : rows)
      if (row.size() != dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "service row has " + std::to_string(row.size()) + " components, header dim " + std::to_string(dim));
    return rows;
  }
  throw Error(ErrorCode::ServiceUnavailable, config_.endpoint_url + path_ + " failed after " +
                                                 std::to_string(config_.max_retries + 1) + " attempts (" +
                                                 last_failure + ")");
}

std::vector<Vector> HttpEmbeddingProvider::fetch(const std::vector<std::string>& texts) {
  const std::size_t batch_count = (texts.size() + config_.batch_size - 1) / config_.batch_size;
  std::vector<std::vector<Vector>> results(batch_count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t b = next.fetch_add(1);
      if (b >= batch_count) return;
      const auto first = texts.begin() + static_cast<std::ptrdiff_t>(b * config_.batch_size);
      const auto last = texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), (b + 1) * config_.batch_size));
      try {
        results[b] = post_batch(std::vector<std::string>(first, last));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };

  {
    std::vector<std::jthread> workers;
    const std::size_t n = std::min(config_.max_in_flight, batch_count);
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<Vector> out;
  out.reserve(texts.size());
  for (auto& batch : results)
    for (auto& row : batch) out.push_back(std::move(row));
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.mode == ProviderMode::File)
    return std::make_unique<FileEmbeddingProvider>(load_embeddings(config.table_path), config.cache_path);
  return std::make_unique<HttpEmbeddingProvider>(config);
}

}  // namespace replaykit
