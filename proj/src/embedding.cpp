#include "careermatch/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"
#include "careermatch/text.hpp"
#include "http_client.hpp"

namespace careermatch::embedding {

Vector::Vector(std::vector<double> components) : data_(std::move(components)) {
  if (data_.empty()) throw ValidationError("vector must have at least one component");
  for (double x : data_) {
    if (!std::isfinite(x)) throw ValidationError("vector has a non-finite component");
  }
}

double dot(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const Vector& v) {
  double sum = 0.0;
  for (double x : v.values()) sum += x * x;
  return std::sqrt(sum);
}

Vector l2_normalize(const Vector& v) {
  if (v.empty()) throw ValidationError("cannot normalize an empty vector");
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero-norm vector");
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x /= n;
  return Vector(std::move(out));
}

double cosine(const Vector& a, const Vector& b) {
  const double d = dot(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("cosine of a zero vector is undefined");
  return std::clamp(d / (na * nb), -1.0, 1.0);
}

Vector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("hash_embed: dim must be positive");
  auto tokens = tokenize(text);
  if (tokens.empty()) throw ValidationError("hash_embed: text has no tokens");

  char seed_bytes[8];
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<char>((seed >> (8 * i)) & 0xFF);
  const std::uint64_t seeded = fnv1a64(std::string_view(seed_bytes, 8));

  std::vector<double> acc(dim, 0.0);
  for (const auto& t : tokens) {
    const std::uint64_t h = fnv1a64(t, seeded);
    const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
    acc[h % dim] += sign;
  }
  Vector v(std::move(acc));
  if (norm(v) == 0.0) throw ValidationError("hash_embed: token contributions cancel to a zero vector");
  return l2_normalize(v);
}

Vector EmbeddingProvider::embed_one(const std::string& text) const {
  auto out = embed(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw ValidationError("builtin-hash dim must be positive");
}

ProviderInfo HashEmbedder::info() const {
  return {"builtin-hash-" + std::to_string(dim_) + "-seed" + std::to_string(seed_), dim_};
}

std::vector<Vector> HashEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t, dim_, seed_));
  return out;
}

std::vector<Vector> decode_embed_response(std::string_view body, std::size_t expected_count, ProviderInfo* info) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("embed response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
    throw ProtocolError("embed response lacks a 'vectors' array");
  }
  if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
    throw ProtocolError("embed response lacks a positive integer 'dim'");
  }
  const auto dim = doc["dim"].get<std::size_t>();
  const auto& vectors = doc["vectors"];
  if (vectors.size() != expected_count) {
    throw ProtocolError("embed response count mismatch: sent " + std::to_string(expected_count) + " texts, got " +
                        std::to_string(vectors.size()) + " vectors");
  }
  std::vector<Vector> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (!v.is_array()) throw ProtocolError("embed response vector " + std::to_string(i) + " is not an array");
    if (v.size() != dim) {
      throw ProtocolError("embed response dim inconsistency: vector " + std::to_string(i) + " has " +
                          std::to_string(v.size()) + " components, declared dim " + std::to_string(dim));
    }
    std::vector<double> comps;
    comps.reserve(dim);
    for (const auto& x : v) {
      if (!x.is_number()) throw ProtocolError("embed response vector " + std::to_string(i) + " has a non-number");
      comps.push_back(x.get<double>());
    }
    try {
      out.emplace_back(std::move(comps));
    } catch (const ValidationError& e) {
      throw ProtocolError("embed response vector " + std::to_string(i) + ": " + e.what());
    }
  }
  if (info != nullptr) {
    info->dim = dim;
    info->model = doc.contains("model") && doc["model"].is_string() ? doc["model"].get<std::string>() : "unknown";
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t batch_size, double timeout_seconds)
    : endpoint_(std::move(endpoint)), batch_size_(std::max<std::size_t>(1, batch_size)),
      timeout_seconds_(timeout_seconds) {}

std::vector<Vector> RemoteEmbedder::embed_batch(std::span<const std::string> texts, ProviderInfo* seen) const {
  nlohmann::json req = {{"texts", nlohmann::json::array()}};
  for (const auto& t : texts) req["texts"].push_back(t);
  const auto body = detail::post_json(endpoint_, "/embed", req.dump(), timeout_seconds_);
  try {
    return decode_embed_response(body, texts.size(), seen);
  } catch (const ProtocolError& e) {
    throw ProtocolError(endpoint_ + "/embed (" + std::to_string(texts.size()) + " texts): " + e.what());
  }
}

ProviderInfo RemoteEmbedder::info() const {
  std::lock_guard lock(info_mutex_);
  if (!info_) {
    const std::string probe = "probe";
    ProviderInfo seen;
    embed_batch(std::span<const std::string>(&probe, 1), &seen);
    info_ = seen;
  }
  return *info_;
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) throw ValidationError("embed: no texts given");
  std::vector<Vector> out;
  out.reserve(texts.size());
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
    ProviderInfo seen;
    auto vecs = embed_batch(batch, &seen);
    if (dim && *dim != seen.dim) {
      throw ProtocolError(endpoint_ + "/embed: dim changed between batches (" + std::to_string(*dim) + " vs " +
                          std::to_string(seen.dim) + ")");
    }
    dim = seen.dim;
    for (auto& v : vecs) out.push_back(std::move(v));
  }
  return out;
}

void EmbeddingStore::add(std::string id, Vector vector) {
  if (id.empty()) throw ValidationError("embedding record has an empty id");
  if (vector.empty()) throw ValidationError("embedding record '" + id + "' has no components");
  if (!records_.empty() && vector.dim() != dim()) {
    throw ValidationError("record '" + id + "' has dim " + std::to_string(vector.dim()) + ", store has dim " +
                          std::to_string(dim()));
  }
  auto [it, inserted] = by_id_.emplace(id, records_.size());
  if (!inserted) throw ValidationError("duplicate embedding id '" + id + "'");
  records_.push_back({std::move(id), std::move(vector)});
}

const Vector* EmbeddingStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second].vector;
}

EmbeddingStore read_embeddings(std::string_view jsonl) {
  EmbeddingStore store;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string()) {
      throw ValidationError(where + "missing string key 'id'");
    }
    if (!obj.contains("vector") || !obj["vector"].is_array()) {
      throw ValidationError(where + "missing array key 'vector'");
    }
    std::vector<double> comps;
    comps.reserve(obj["vector"].size());
    for (const auto& x : obj["vector"]) {
      if (!x.is_number()) throw ValidationError(where + "vector component is not a number");
      comps.push_back(x.get<double>());
    }
    try {
      store.add(obj["id"].get<std::string>(), Vector(std::move(comps)));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  });
  return store;
}

std::string write_embeddings(const EmbeddingStore& store) {
  std::string out;
  for (const auto& rec : store.records()) {
    out += "{\"id\":" + json_quote(rec.id) + ",\"vector\":";
    append_vector(out, rec.vector.values());
    out += "}\n";
  }
  return out;
}

EmbeddingStore load_embeddings(const std::string& path) {
  try {
    return read_embeddings(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_embeddings(const EmbeddingStore& store, const std::string& path) {
  write_file(path, write_embeddings(store));
}

std::shared_ptr<const EmbeddingProvider> make_provider(const std::string& spec, std::size_t dim, std::uint64_t seed) {
  if (spec.empty() || spec == "builtin-hash") return std::make_shared<HashEmbedder>(dim, seed);
  if (spec.rfind("http://", 0) == 0) {
    return std::make_shared<RemoteEmbedder>(spec);
  }
  throw ValidationError("unknown embedding provider '" + spec + "' (expected builtin-hash or http://host:port)");
}

}  // namespace careermatch::embedding
