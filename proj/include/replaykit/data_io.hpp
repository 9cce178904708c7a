#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "replaykit/core_model.hpp"

namespace replaykit {

// Metadata: newline-delimited JSON objects
//   {"asset_id": str, "class_label": str, "captions": [str], "split"?: str}
std::vector<AssetRecord> parse_metadata(std::istream& in);
std::vector<AssetRecord> load_metadata(const std::filesystem::path& path);
void write_metadata(std::ostream& out, const std::vector<AssetRecord>& records);
void save_metadata(const std::filesystem::path& path, const std::vector<AssetRecord>& records);

nlohmann::json to_json(const AssetRecord& record);

// Embedding tables: one JSON header line
//   {"count": n, "dim": d, "dtype": "f32le", "ids": [...]}\n
// followed by n*d little-endian float32 values, row-major.
EmbeddingTable read_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

nlohmann::json to_json(const ReplayParams& params);
ReplayParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AllocationPlan& plan);
AllocationPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReplayManifest& manifest);
ReplayManifest manifest_from_json(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

void save_manifest(const ReplayManifest& manifest, const std::filesystem::path& path);
ReplayManifest load_manifest(const std::filesystem::path& path);

void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

/// Reads the whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace replaykit
