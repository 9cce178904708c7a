#include "replaykit/data_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "replaykit/error.hpp"

namespace replaykit {

using nlohmann::json;

namespace {

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw Error(ErrorCode::MissingField,
                "line " + std::to_string(line) + ": missing string field '" + key + "'");
  return it->get<std::string>();
}

AssetRecord record_from_line(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": not a JSON object");

  AssetRecord record;
  record.asset_id = required_string(obj, "asset_id", line);
  record.class_label = required_string(obj, "class_label", line);

  auto captions = obj.find("captions");
  if (captions == obj.end() || !captions->is_array())
    throw Error(ErrorCode::MissingField, "line " + std::to_string(line) + ": missing array field 'captions'");
  for (const auto& c : *captions) {
    if (!c.is_string()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": caption is not a string");
    record.captions.push_back(c.get<std::string>());
  }
  if (record.captions.empty())
    throw Error(ErrorCode::EmptyCaptions, "line " + std::to_string(line) + ": captions list is empty");

  if (auto split = obj.find("split"); split != obj.end() && !split->is_null()) {
    if (!split->is_string()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": split is not a string");
    auto parsed = parse_split(split->get<std::string>());
    if (!parsed) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": unknown split '" + split->get<std::string>() + "'");
    record.split = *parsed;
  }
  return record;
}

void put_f32le(std::string& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xFF));
}

float get_f32le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<float>(bits);
}

template <typename T>
T get_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::SchemaError, std::string("missing key '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& get_object(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_object())
    throw Error(ErrorCode::SchemaError, std::string("missing object '") + key + "'");
  return *it;
}

}  // namespace

std::vector<AssetRecord> parse_metadata(std::istream& in) {
  std::vector<AssetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_unicode(line).empty()) continue;
    records.push_back(record_from_line(line, line_no));
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed");
  return records;
}

std::vector<AssetRecord> load_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_metadata(in);
}

json to_json(const AssetRecord& record) {
  return json{{"asset_id", record.asset_id},
              {"class_label", record.class_label},
              {"captions", record.captions},
              {"split", std::string(to_string(record.split))}};
}

void write_metadata(std::ostream& out, const std::vector<AssetRecord>& records) {
  for (const auto& record : records) out << to_json(record).dump() << '\n';
}

void save_metadata(const std::filesystem::path& path, const std::vector<AssetRecord>& records) {
  std::ostringstream out;
  write_metadata(out, records);
  write_file(path, out.str());
}

EmbeddingTable read_embeddings(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw Error(ErrorCode::HeaderMismatch, "missing header line");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::HeaderMismatch, std::string("header is not JSON: ") + e.what());
  }
  std::uint64_t count = 0;
  std::uint64_t dim = 0;
  std::vector<std::string> ids;
  try {
    count = header.at("count").get<std::uint64_t>();
    dim = header.at("dim").get<std::uint64_t>();
    if (header.at("dtype").get<std::string>() != "f32le")
      throw Error(ErrorCode::HeaderMismatch, "unsupported dtype " + header.at("dtype").dump());
    ids = header.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMismatch, e.what());
  }
  if (ids.size() != count)
    throw Error(ErrorCode::HeaderMismatch,
                "header count " + std::to_string(count) + " but " + std::to_string(ids.size()) + " ids");
  if (count > 0 && dim == 0) throw Error(ErrorCode::HeaderMismatch, "dim must be positive");

  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::uint64_t expected = count * dim * 4;
  if (body.size() < expected)
    throw Error(ErrorCode::TruncatedBody,
                "body has " + std::to_string(body.size()) + " bytes, expected " + std::to_string(expected));
  if (body.size() > expected)
    throw Error(ErrorCode::HeaderMismatch,
                "body has " + std::to_string(body.size() - expected) + " trailing bytes");

  EmbeddingTable table(dim);
  std::vector<float> row(dim);
  const auto* bytes = reinterpret_cast<const unsigned char*>(body.data());
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) row[j] = get_f32le(bytes + (i * dim + j) * 4);
    table.add(ids[i], row);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  const json header{{"count", table.size()}, {"dim", table.dim()}, {"dtype", "f32le"}, {"ids", table.ids()}};
  std::string body;
  body.reserve(table.data().size() * 4);
  for (float x : table.data()) put_f32le(body, x);
  out << header.dump() << '\n';
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ostringstream out(std::ios::binary);
  write_embeddings(out, table);
  write_file(path, out.str());
}

json to_json(const ReplayParams& p) {
  return json{{"replay_pct", p.replay_pct}, {"m_min", p.m_min},
              {"m_max", p.m_max},           {"p_max", p.p_max},
              {"max_captions", p.max_captions}, {"strategy", std::string(to_string(p.strategy))},
              {"seed", p.seed}};
}

ReplayParams params_from_json(const json& j) {
  ReplayParams p;
  p.replay_pct = get_field<double>(j, "replay_pct");
  p.m_min = get_field<std::uint32_t>(j, "m_min");
  p.m_max = get_field<std::uint32_t>(j, "m_max");
  p.p_max = get_field<double>(j, "p_max");
  p.max_captions = get_field<std::uint32_t>(j, "max_captions");
  const auto strategy = get_field<std::string>(j, "strategy");
  auto parsed = parse_strategy(strategy);
  if (!parsed) throw Error(ErrorCode::SchemaError, "unknown strategy '" + strategy + "'");
  p.strategy = *parsed;
  p.seed = get_field<std::uint64_t>(j, "seed");
  return p;
}

json to_json(const AllocationPlan& plan) {
  json classes = json::array();
  for (const auto& c : plan.classes)
    classes.push_back({{"class_label", c.class_label}, {"n", c.n}, {"cap", c.cap}, {"quota", c.quota}});
  return json{{"budget", plan.budget}, {"alpha", plan.alpha}, {"classes", classes},
              {"shortfall", plan.shortfall}, {"total", plan.total_quota()}};
}

AllocationPlan plan_from_json(const json& j) {
  AllocationPlan plan;
  plan.budget = get_field<std::uint64_t>(j, "budget");
  plan.alpha = get_field<double>(j, "alpha");
  plan.shortfall = get_field<std::uint64_t>(j, "shortfall");
  auto classes = j.find("classes");
  if (classes == j.end() || !classes->is_array()) throw Error(ErrorCode::SchemaError, "missing array 'classes'");
  for (const auto& c : *classes) {
    plan.classes.push_back({get_field<std::string>(c, "class_label"), get_field<std::uint64_t>(c, "n"),
                            get_field<std::uint64_t>(c, "cap"), get_field<std::uint64_t>(c, "quota")});
  }
  return plan;
}

json to_json(const ReplayManifest& m) {
  return json{{"params", to_json(m.params)},
              {"novel_size", m.novel_size},
              {"allocation", to_json(m.allocation)},
              {"selections", m.selections},
              {"metadata",
               {{"tool_version", m.metadata.tool_version},
                {"input_digests", m.metadata.input_digests},
                {"seed_fallbacks", m.metadata.seed_fallbacks}}}};
}

ReplayManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "manifest is not a JSON object");
  ReplayManifest m;
  m.params = params_from_json(get_object(j, "params"));
  m.novel_size = get_field<std::uint64_t>(j, "novel_size");
  m.allocation = plan_from_json(get_object(j, "allocation"));
  m.selections = get_field<std::map<std::string, std::vector<std::string>>>(j, "selections");
  const json& meta = get_object(j, "metadata");
  m.metadata.tool_version = get_field<std::string>(meta, "tool_version");
  m.metadata.input_digests = get_field<std::map<std::string, std::string>>(meta, "input_digests");
  m.metadata.seed_fallbacks = get_field<std::vector<std::string>>(meta, "seed_fallbacks");
  return m;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

void save_manifest(const ReplayManifest& manifest, const std::filesystem::path& path) {
  save_json(to_json(manifest), path);
}

ReplayManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(load_json(path));
}

void save_json(const json& j, const std::filesystem::path& path) { write_file(path, canonical_dump(j)); }

json load_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed on " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed on " + path.string());
}

}  // namespace replaykit
