#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace careermatch::embedding {

/// Dense binary64 vector; every component finite, dim >= 1.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<double> components);

  std::size_t dim() const noexcept { return data_.size(); }
  std::span<const double> values() const noexcept { return data_; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  bool empty() const noexcept { return data_.empty(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);

/// v / ||v||. Throws on a zero vector.
Vector l2_normalize(const Vector& v);

/// dot(a,b) / (||a|| ||b||), clamped to [-1, 1].
double cosine(const Vector& a, const Vector& b);

/// Feature-hashing bag-of-tokens embedder. Each token t contributes
/// +/-1 to bucket (h mod dim), h = FNV-1a-64(seed as 8 LE bytes || t), sign
/// from bit 63 of h; the sum is L2-normalized.
Vector hash_embed(std::string_view text, std::size_t dim = 256, std::uint64_t seed = 0);

struct ProviderInfo {
  std::string model;
  std::size_t dim = 0;
};

/// Source of text embeddings. Implementations are safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual ProviderInfo info() const = 0;
  /// Index-aligned with `texts`; every vector has info().dim components.
  virtual std::vector<Vector> embed(std::span<const std::string> texts) const = 0;

  Vector embed_one(const std::string& text) const;
};

class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);
  ProviderInfo info() const override;
  std::vector<Vector> embed(std::span<const std::string> texts) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Client for `POST /embed` ({"texts":[...]} -> {"model","dim","vectors"}).
/// The provider's model/dim are learned from a probe request on first use of
/// info().
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(std::string endpoint, std::size_t batch_size = 64, double timeout_seconds = 60.0);
  ProviderInfo info() const override;
  std::vector<Vector> embed(std::span<const std::string> texts) const override;

 private:
  std::vector<Vector> embed_batch(std::span<const std::string> texts, ProviderInfo* seen) const;

  std::string endpoint_;
  std::size_t batch_size_;
  double timeout_seconds_;
  mutable std::mutex info_mutex_;
  mutable std::optional<ProviderInfo> info_;
};

/// Validates a /embed response body against the request size.
std::vector<Vector> decode_embed_response(std::string_view body, std::size_t expected_count, ProviderInfo* info);

struct EmbeddingRecord {
  std::string id;
  Vector vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

/// Insertion-ordered set of records sharing one dimension, unique ids.
class EmbeddingStore {
 public:
  void add(std::string id, Vector vector);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return records_.empty() ? 0 : records_.front().vector.dim(); }
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  const Vector* find(const std::string& id) const;

  bool operator==(const EmbeddingStore& other) const { return records_ == other.records_; }

 private:
  std::vector<EmbeddingRecord> records_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

/// JSONL `{"id":...,"vector":[...]}`, shortest round-trip decimals.
EmbeddingStore read_embeddings(std::string_view jsonl);
std::string write_embeddings(const EmbeddingStore& store);
EmbeddingStore load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingStore& store, const std::string& path);

/// Builds a provider from a spec string: "builtin-hash" or an http:// URL.
std::shared_ptr<const EmbeddingProvider> make_provider(const std::string& spec, std::size_t dim = 256,
                                                       std::uint64_t seed = 0);

}  // namespace careermatch::embedding
