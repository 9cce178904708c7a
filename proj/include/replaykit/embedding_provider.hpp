#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "replaykit/core_model.hpp"

namespace replaykit {

using Vector = std::vector<float>;

enum class ProviderMode { File, Http };

struct ProviderConfig {
  ProviderMode mode = ProviderMode::File;
  std::filesystem::path table_path;  // file mode
  std::string endpoint_url;          // http mode, e.g. "http://127.0.0.1:8080" or with a path prefix
  std::size_t batch_size = 64;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 4;
  std::optional<std::filesystem::path> cache_path;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{200};  // doubled after each failed attempt

  void validate() const;
};

/// Cache/table key for a caption: SHA-256 of its UTF-8 bytes, lowercase hex.
std::string caption_key(std::string_view caption);

/// Text encoder front end. Results are raw (unnormalized) vectors in request
/// order. Every fetched vector goes through an in-memory cache keyed by
/// caption_key, which cache_flush() persists as an embedding table.
class EmbeddingProvider {
 public:
  explicit EmbeddingProvider(std::optional<std::filesystem::path> cache_path);
  virtual ~EmbeddingProvider() = default;

  EmbeddingProvider(const EmbeddingProvider&) = delete;
  EmbeddingProvider& operator=(const EmbeddingProvider&) = delete;

  std::vector<Vector> embed_texts(const std::vector<std::string>& texts);

  /// Writes the cache to cache_path. Throws InvalidArgument if no cache
  /// path is configured and IoError on write failure.
  void cache_flush();

  /// Snapshot of the cache as a table with ids sorted.
  EmbeddingTable cache_table() const;

  std::size_t dim() const;

 protected:
  /// Produces vectors for texts that missed the cache, in the given order.
  virtual std::vector<Vector> fetch(const std::vector<std::string>& texts) = 0;

 private:
  void check_dim(std::size_t dim);

  std::optional<std::filesystem::path> cache_path_;
  mutable std::mutex mutex_;
  std::map<std::string, Vector> cache_;
  std::size_t dim_ = 0;
};

/// Looks captions up in a local table, first by caption_key and then by
/// the caption text itself.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  FileEmbeddingProvider(EmbeddingTable table, std::optional<std::filesystem::path> cache_path = std::nullopt);

 protected:
  std::vector<Vector> fetch(const std::vector<std::string>& texts) override;

 private:
  EmbeddingTable table_;
};

/// Client for POST {endpoint}/embed with {"texts": [...]} returning
/// {"dim": d, "embeddings": [[...]]}. Batches run on up to max_in_flight
/// concurrent connections. 5xx and transport failures are retried with
/// exponential backoff; 4xx fail immediately.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(ProviderConfig config);

  /// Number of POST attempts issued so far.
  std::size_t remote_requests() const noexcept { return requests_.load(); }

 protected:
  std::vector<Vector> fetch(const std::vector<std::string>& texts) override;

 private:
  std::vector<Vector> post_batch(const std::vector<std::string>& batch);

  ProviderConfig config_;
  std::string host_;       // scheme://host:port
  std::string path_;       // prefix + "/embed"
  std::atomic<std::size_t> requests_{0};
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config);

}  // namespace replaykit
