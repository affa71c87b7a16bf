#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "careermatch/embedding.hpp"

namespace careermatch::matcher {

using embedding::Vector;

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kIndexExtension = ".cbidx.json";

struct IndexMetadata {
  std::string model;          // embedder label
  std::string centroid_kind;  // e.g. job_centroids, ad_centroids, descriptions
  std::string build_timestamp;

  bool operator==(const IndexMetadata&) const = default;
};

struct IndexEntry {
  std::string esco_id;
  Vector vector;

  bool operator==(const IndexEntry&) const = default;
};

struct Recommendation {
  std::string esco_id;
  double score = 0.0;
  std::size_t rank = 0;

  bool operator==(const Recommendation&) const = default;
};

/// Immutable exact-search index over unit vectors, entries sorted by id.
class Index {
 public:
  /// Normalizes entries and sorts them by esco_id. Throws on empty input,
  /// duplicate ids or mixed dims.
  static Index build(std::vector<IndexEntry> entries, IndexMetadata metadata);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  const IndexMetadata& metadata() const noexcept { return metadata_; }
  const IndexEntry* find(std::string_view esco_id) const;

  /// Top-min(k, size) entries by cosine, descending; ties go to the smaller id.
  std::vector<Recommendation> recommend(const Vector& query, std::size_t k) const;

  bool operator==(const Index&) const = default;

 private:
  Index() = default;
  friend Index load_index(std::string_view);

  std::size_t dim_ = 0;
  std::vector<IndexEntry> entries_;
  IndexMetadata metadata_;
};

/// Builds from an embedding store (e.g. job centroids).
Index build_index(const embedding::EmbeddingStore& centroids, IndexMetadata metadata);

/// Canonical snapshot: one JSON document whose header fields (format_version,
/// dim, count, metric, metadata, checksum) precede the entries, one entry per
/// line, shortest round-trip decimals. Byte-stable for equal indexes.
std::string save_index(const Index& index);
Index load_index(std::string_view bytes);

void save_index_file(const Index& index, const std::string& path);
Index load_index_file(const std::string& path);

}  // namespace careermatch::matcher
