#include "careermatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"
#include "careermatch/text.hpp"

namespace careermatch::matcher {

namespace {

constexpr double kUnitTolerance = 1e-12;

bool is_unit(const Vector& v) { return std::abs(embedding::norm(v) - 1.0) <= kUnitTolerance; }

std::string entry_line(const IndexEntry& e) {
  std::string line = "{\"id\":" + json_quote(e.esco_id) + ",\"vector\":";
  append_vector(line, e.vector.values());
  line += "}";
  return line;
}

std::string checksum_of(const std::vector<IndexEntry>& entries) {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : entries) {
    h = fnv1a64(entry_line(e), h);
    h = fnv1a64("\n", h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Index Index::build(std::vector<IndexEntry> entries, IndexMetadata metadata) {
  if (entries.empty()) throw ValidationError("cannot build an index from zero centroids");
  const std::size_t dim = entries.front().vector.dim();
  for (auto& e : entries) {
    if (e.esco_id.empty()) throw ValidationError("index entry with an empty esco_id");
    if (e.vector.dim() != dim) {
      throw ValidationError("index entry '" + e.esco_id + "' has dim " + std::to_string(e.vector.dim()) +
                            ", expected " + std::to_string(dim));
    }
    if (!is_unit(e.vector)) e.vector = embedding::l2_normalize(e.vector);
  }
  std::sort(entries.begin(), entries.end(),
            [](const IndexEntry& a, const IndexEntry& b) { return a.esco_id < b.esco_id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].esco_id == entries[i - 1].esco_id) {
      throw ValidationError("duplicate index entry '" + entries[i].esco_id + "'");
    }
  }
  Index index;
  index.dim_ = dim;
  index.entries_ = std::move(entries);
  index.metadata_ = std::move(metadata);
  return index;
}

const IndexEntry* Index::find(std::string_view esco_id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), esco_id,
                             [](const IndexEntry& e, std::string_view id) { return e.esco_id < id; });
  return it != entries_.end() && it->esco_id == esco_id ? &*it : nullptr;
}

std::vector<Recommendation> Index::recommend(const Vector& query, std::size_t k) const {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (query.dim() != dim_) {
    throw ValidationError("query dim " + std::to_string(query.dim()) + " does not match index dim " +
                          std::to_string(dim_));
  }
  if (embedding::norm(query) == 0.0) throw ValidationError("query vector is zero");

  std::vector<double> scores(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) scores[i] = embedding::cosine(query, entries_[i].vector);

  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min(k, order.size());
  // entries are id-sorted, so the position breaks score ties by id
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });

  std::vector<Recommendation> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) out.push_back({entries_[order[r]].esco_id, scores[order[r]], r + 1});
  return out;
}

Index build_index(const embedding::EmbeddingStore& centroids, IndexMetadata metadata) {
  std::vector<IndexEntry> entries;
  entries.reserve(centroids.size());
  for (const auto& rec : centroids.records()) entries.push_back({rec.id, rec.vector});
  return Index::build(std::move(entries), std::move(metadata));
}

std::string save_index(const Index& index) {
  std::string out = "{\"format_version\":" + std::to_string(kFormatVersion) +
                    ",\"dim\":" + std::to_string(index.dim()) + ",\"count\":" + std::to_string(index.size()) +
                    ",\"metric\":\"cosine\",\"metadata\":{\"model\":" + json_quote(index.metadata().model) +
                    ",\"centroid_kind\":" + json_quote(index.metadata().centroid_kind) +
                    ",\"build_timestamp\":" + json_quote(index.metadata().build_timestamp) +
                    "},\"checksum\":\"" + checksum_of(index.entries()) + "\",\"entries\":[\n";
  const auto& entries = index.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out += entry_line(entries[i]);
    out += i + 1 < entries.size() ? ",\n" : "\n";
  }
  out += "]}\n";
  return out;
}

Index load_index(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("index parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("index snapshot must be a JSON object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw ValidationError("index snapshot lacks an integer format_version");
  }
  if (doc["format_version"].get<long long>() != kFormatVersion) {
    throw ValidationError("unsupported index format_version " + doc["format_version"].dump() + " (expected " +
                          std::to_string(kFormatVersion) + ")");
  }
  if (doc.value("metric", "") != "cosine") throw ValidationError("index metric must be 'cosine'");
  if (!doc.contains("dim") || !doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0) {
    throw ValidationError("index dim must be a positive integer");
  }
  if (!doc.contains("count") || !doc["count"].is_number_unsigned()) {
    throw ValidationError("index count must be a non-negative integer");
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) throw ValidationError("index lacks an entries array");
  if (!doc.contains("checksum") || !doc["checksum"].is_string()) throw ValidationError("index lacks a checksum");
  const auto dim = doc["dim"].get<std::size_t>();
  const auto count = doc["count"].get<std::size_t>();
  const auto& raw = doc["entries"];
  if (raw.size() != count) {
    throw ValidationError("index count " + std::to_string(count) + " does not match " + std::to_string(raw.size()) +
                          " entries");
  }
  if (count == 0) throw ValidationError("index has no entries");

  IndexMetadata meta;
  if (doc.contains("metadata")) {
    const auto& m = doc["metadata"];
    if (!m.is_object()) throw ValidationError("index metadata must be an object");
    meta.model = m.value("model", "");
    meta.centroid_kind = m.value("centroid_kind", "");
    meta.build_timestamp = m.value("build_timestamp", "");
  }

  std::vector<IndexEntry> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& e = raw[i];
    const std::string where = "index entry " + std::to_string(i) + ": ";
    if (!e.is_object() || !e.contains("id") || !e["id"].is_string() || !e.contains("vector") ||
        !e["vector"].is_array()) {
      throw ValidationError(where + "expected {\"id\":string,\"vector\":[...]}");
    }
    if (e["vector"].size() != dim) {
      throw ValidationError(where + "vector has " + std::to_string(e["vector"].size()) + " components, dim is " +
                            std::to_string(dim));
    }
    std::vector<double> comps;
    comps.reserve(dim);
    for (const auto& x : e["vector"]) {
      if (!x.is_number()) throw ValidationError(where + "non-numeric component");
      comps.push_back(x.get<double>());
    }
    IndexEntry entry{e["id"].get<std::string>(), Vector(std::move(comps))};
    if (entry.esco_id.empty()) throw ValidationError(where + "empty id");
    if (!is_unit(entry.vector)) throw ValidationError(where + "vector '" + entry.esco_id + "' is not unit norm");
    if (!entries.empty() && !(entries.back().esco_id < entry.esco_id)) {
      throw ValidationError(where + "entries are not in strictly ascending id order");
    }
    entries.push_back(std::move(entry));
  }
  const std::string expected = checksum_of(entries);
  if (doc["checksum"].get<std::string>() != expected) {
    throw ValidationError("index checksum mismatch: header says " + doc["checksum"].get<std::string>() +
                          ", entries hash to " + expected);
  }

  Index index;
  index.dim_ = dim;
  index.entries_ = std::move(entries);
  index.metadata_ = std::move(meta);
  return index;
}

void save_index_file(const Index& index, const std::string& path) { write_file(path, save_index(index)); }

Index load_index_file(const std::string& path) {
  try {
    return load_index(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace careermatch::matcher
