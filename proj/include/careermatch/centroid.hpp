#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "careermatch/corpus.hpp"
#include "careermatch/embedding.hpp"

namespace careermatch::centroid {

using embedding::Vector;

struct AdCentroid {
  std::string esco_id;
  Vector vector;  // unit norm
  std::size_t n_ads = 0;
};

enum class CentroidSource { kHybrid, kDescriptionOnly };

std::string_view to_string(CentroidSource source);

struct JobCentroid {
  std::string esco_id;
  Vector vector;  // unit norm
  CentroidSource source = CentroidSource::kDescriptionOnly;
};

struct CentroidOptions {
  /// Average unit-normalized members (mean direction) rather than raw vectors.
  bool normalize_members = true;
};

/// One member vector with its grouping key (the ad's gold esco_id).
struct GroupedEmbedding {
  std::string esco_id;
  Vector vector;
};

/// Per occupation: mean of the (normalized) member embeddings, re-normalized.
/// Members are summed in input order.
std::map<std::string, AdCentroid> compute_ad_centroids(const std::vector<GroupedEmbedding>& members,
                                                       const CentroidOptions& options = {});

/// Joins ad embeddings (keyed by ad_id) to their ads' gold esco_id. Ads
/// without an embedding are an error; embeddings without an ad are ignored.
std::vector<GroupedEmbedding> group_ad_embeddings(const std::vector<corpus::JobAd>& ads,
                                                  const embedding::EmbeddingStore& ad_embeddings);

/// Hybrid job centroids: normalize((ad_centroid + normalize(desc)) / 2) where
/// an ad centroid exists, normalize(desc) otherwise. Covers every occupation.
std::map<std::string, JobCentroid> compute_job_centroids(const std::map<std::string, AdCentroid>& ad_centroids,
                                                         const std::map<std::string, Vector>& description_embeddings,
                                                         const std::vector<corpus::EscoOccupation>& occupations);

/// Sidecar metadata:
/// {"kind":"ad_centroids"|"job_centroids","sources":{id:src},"n_ads":{id:n}}.
std::string ad_centroid_metadata(const std::map<std::string, AdCentroid>& centroids);
std::string job_centroid_metadata(const std::map<std::string, JobCentroid>& centroids,
                                  const std::map<std::string, AdCentroid>& ad_centroids);

embedding::EmbeddingStore to_store(const std::map<std::string, AdCentroid>& centroids);
embedding::EmbeddingStore to_store(const std::map<std::string, JobCentroid>& centroids);

/// Reads an ad-centroid set back from its embedding file and sidecar.
std::map<std::string, AdCentroid> read_ad_centroids(const embedding::EmbeddingStore& store,
                                                    std::string_view metadata_json);

}  // namespace careermatch::centroid
