#include "careermatch/centroid.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"

namespace careermatch::centroid {

namespace {

Vector mean_direction(const std::vector<const Vector*>& members, bool normalize_members, const std::string& id) {
  const std::size_t dim = members.front()->dim();
  std::vector<double> sum(dim, 0.0);
  for (const Vector* m : members) {
    if (m->dim() != dim) {
      throw ValidationError("occupation '" + id + "': member dims differ (" + std::to_string(m->dim()) + " vs " +
                            std::to_string(dim) + ")");
    }
    const Vector unit = normalize_members ? embedding::l2_normalize(*m) : *m;
    for (std::size_t i = 0; i < dim; ++i) sum[i] += unit[i];
  }
  const auto n = static_cast<double>(members.size());
  for (double& x : sum) x /= n;
  Vector mean(std::move(sum));
  if (embedding::norm(mean) == 0.0) {
    throw ValidationError("occupation '" + id + "': member embeddings cancel to a zero mean");
  }
  return embedding::l2_normalize(mean);
}

}  // namespace

std::string_view to_string(CentroidSource source) {
  return source == CentroidSource::kHybrid ? "hybrid" : "description_only";
}

std::map<std::string, AdCentroid> compute_ad_centroids(const std::vector<GroupedEmbedding>& members,
                                                       const CentroidOptions& options) {
  std::map<std::string, std::vector<const Vector*>> groups;
  for (const auto& m : members) {
    if (m.esco_id.empty()) throw ValidationError("ad embedding with an empty esco_id");
    groups[m.esco_id].push_back(&m.vector);
  }
  std::map<std::string, AdCentroid> out;
  for (const auto& [id, group] : groups) {
    out.emplace(id, AdCentroid{id, mean_direction(group, options.normalize_members, id), group.size()});
  }
  return out;
}

std::vector<GroupedEmbedding> group_ad_embeddings(const std::vector<corpus::JobAd>& ads,
                                                  const embedding::EmbeddingStore& ad_embeddings) {
  std::vector<GroupedEmbedding> out;
  out.reserve(ads.size());
  for (const auto& ad : ads) {
    const Vector* v = ad_embeddings.find(ad.ad_id);
    if (v == nullptr) throw ValidationError("no embedding for ad '" + ad.ad_id + "'");
    out.push_back({ad.esco_id, *v});
  }
  return out;
}

std::map<std::string, JobCentroid> compute_job_centroids(const std::map<std::string, AdCentroid>& ad_centroids,
                                                         const std::map<std::string, Vector>& description_embeddings,
                                                         const std::vector<corpus::EscoOccupation>& occupations) {
  std::map<std::string, JobCentroid> out;
  for (const auto& occ : occupations) {
    auto desc_it = description_embeddings.find(occ.esco_id);
    if (desc_it == description_embeddings.end()) {
      throw ValidationError("missing description embedding for occupation '" + occ.esco_id + "'");
    }
    const Vector desc = embedding::l2_normalize(desc_it->second);
    auto ad_it = ad_centroids.find(occ.esco_id);
    if (ad_it == ad_centroids.end()) {
      out.emplace(occ.esco_id, JobCentroid{occ.esco_id, desc, CentroidSource::kDescriptionOnly});
      continue;
    }
    const Vector& ad = ad_it->second.vector;
    if (ad.dim() != desc.dim()) {
      throw ValidationError("occupation '" + occ.esco_id + "': ad centroid dim " + std::to_string(ad.dim()) +
                            " vs description dim " + std::to_string(desc.dim()));
    }
    std::vector<double> mid(desc.dim());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = (ad[i] + desc[i]) / 2.0;
    Vector hybrid(std::move(mid));
    if (embedding::norm(hybrid) == 0.0) {
      throw ValidationError("occupation '" + occ.esco_id + "': ad centroid and description are antipodal");
    }
    out.emplace(occ.esco_id, JobCentroid{occ.esco_id, embedding::l2_normalize(hybrid), CentroidSource::kHybrid});
  }
  return out;
}

std::string ad_centroid_metadata(const std::map<std::string, AdCentroid>& centroids) {
  nlohmann::ordered_json doc;
  doc["kind"] = "ad_centroids";
  doc["sources"] = nlohmann::ordered_json::object();
  doc["n_ads"] = nlohmann::ordered_json::object();
  for (const auto& [id, c] : centroids) doc["n_ads"][id] = c.n_ads;
  return doc.dump(2) + "\n";
}

std::string job_centroid_metadata(const std::map<std::string, JobCentroid>& centroids,
                                  const std::map<std::string, AdCentroid>& ad_centroids) {
  nlohmann::ordered_json doc;
  doc["kind"] = "job_centroids";
  doc["sources"] = nlohmann::ordered_json::object();
  doc["n_ads"] = nlohmann::ordered_json::object();
  for (const auto& [id, c] : centroids) {
    doc["sources"][id] = std::string(to_string(c.source));
    auto ad = ad_centroids.find(id);
    doc["n_ads"][id] = ad == ad_centroids.end() ? 0 : ad->second.n_ads;
  }
  return doc.dump(2) + "\n";
}

embedding::EmbeddingStore to_store(const std::map<std::string, AdCentroid>& centroids) {
  embedding::EmbeddingStore store;
  for (const auto& [id, c] : centroids) store.add(id, c.vector);
  return store;
}

embedding::EmbeddingStore to_store(const std::map<std::string, JobCentroid>& centroids) {
  embedding::EmbeddingStore store;
  for (const auto& [id, c] : centroids) store.add(id, c.vector);
  return store;
}

std::map<std::string, AdCentroid> read_ad_centroids(const embedding::EmbeddingStore& store,
                                                    std::string_view metadata_json) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(metadata_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("centroid metadata is not valid JSON: ") + e.what());
  }
  if (!meta.is_object() || meta.value("kind", "") != "ad_centroids") {
    throw ValidationError("centroid metadata kind must be 'ad_centroids'");
  }
  const auto& n_ads = meta.contains("n_ads") ? meta["n_ads"] : nlohmann::json::object();
  std::map<std::string, AdCentroid> out;
  for (const auto& rec : store.records()) {
    std::size_t n = 1;
    if (n_ads.contains(rec.id)) {
      if (!n_ads[rec.id].is_number_unsigned() || n_ads[rec.id].get<std::size_t>() == 0) {
        throw ValidationError("centroid metadata n_ads for '" + rec.id + "' must be a positive integer");
      }
      n = n_ads[rec.id].get<std::size_t>();
    }
    // written centroids are already unit; only repair foreign inputs
    const bool unit = std::abs(embedding::norm(rec.vector) - 1.0) <= 1e-12;
    out.emplace(rec.id, AdCentroid{rec.id, unit ? rec.vector : embedding::l2_normalize(rec.vector), n});
  }
  return out;
}

}  // namespace careermatch::centroid
