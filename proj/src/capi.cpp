#include "careermatch/careermatch.h"

#include <cstring>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "careermatch/adfilter.hpp"
#include "careermatch/centroid.hpp"
#include "careermatch/corpus.hpp"
#include "careermatch/embedding.hpp"
#include "careermatch/error.hpp"
#include "careermatch/evaluation.hpp"
#include "careermatch/matcher.hpp"
#include "careermatch/service.hpp"
#include "careermatch/text.hpp"

using namespace careermatch;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

struct cm_occupations {
  std::vector<corpus::EscoOccupation> items;
};

struct cm_ads {
  std::vector<corpus::JobAd> items;
};

struct cm_filter {
  std::shared_ptr<const adfilter::RelevanceFilter> classifier;
  adfilter::Preprocessor preprocess;
};

struct cm_embedder {
  std::shared_ptr<const embedding::EmbeddingProvider> provider;
};

struct cm_store {
  embedding::EmbeddingStore store;
};

struct cm_index {
  matcher::Index index;
};

struct cm_server {
  service::ServiceConfig config;
  std::shared_ptr<service::RecommendationService> service;
  std::unique_ptr<service::HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

cm_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return CM_ERR_VALIDATION;
    case ErrorKind::kIo:
      return CM_ERR_IO;
    case ErrorKind::kProtocol:
      return CM_ERR_PROTOCOL;
    case ErrorKind::kNotFound:
      return CM_ERR_NOT_FOUND;
    case ErrorKind::kConflict:
      return CM_ERR_CONFLICT;
  }
  return CM_ERR_INTERNAL;
}

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
cm_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return CM_OK;
  } catch (const InvalidArgument& e) {
    g_last_error = e.what();
    return CM_ERR_INVALID_ARGUMENT;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return CM_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CM_ERR_INTERNAL;
  }
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
  return *p;
}

const char* need_str(const char* s, const char* what) {
  if (s == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
  return s;
}

void set_out(char** out, const std::string& value) {
  if (out == nullptr) return;
  char* buf = static_cast<char*>(std::malloc(value.size() + 1));
  if (buf == nullptr) throw std::bad_alloc();
  std::memcpy(buf, value.c_str(), value.size() + 1);
  *out = buf;
}

json parse_config(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    auto doc = json::parse(text);
    if (!doc.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string ad_text(const corpus::JobAd& ad) {
  return trim(ad.title).empty() ? ad.body : ad.title + "\n\n" + ad.body;
}

std::string maybe_read(const char* path) { return path == nullptr ? std::string() : read_file(path); }

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

}  // namespace

extern "C" {

const char* cm_version(void) { return "1.0.0"; }

const char* cm_status_name(cm_status status) {
  switch (status) {
    case CM_OK:
      return "ok";
    case CM_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case CM_ERR_VALIDATION:
      return "validation";
    case CM_ERR_IO:
      return "io";
    case CM_ERR_PROTOCOL:
      return "protocol";
    case CM_ERR_NOT_FOUND:
      return "not_found";
    case CM_ERR_CONFLICT:
      return "conflict";
    case CM_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* cm_last_error(void) { return g_last_error.c_str(); }

void cm_string_free(char* s) { std::free(s); }

// ---- corpus -----------------------------------------------------------------

cm_status cm_occupations_load(const char* csv_path, cm_occupations** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cm_occupations{corpus::load_esco(need_str(csv_path, "csv_path"))};
  });
}

void cm_occupations_free(cm_occupations* occupations) { delete occupations; }

size_t cm_occupations_count(const cm_occupations* occupations) {
  return occupations ? occupations->items.size() : 0;
}

cm_status cm_occupations_get(const cm_occupations* occupations, const char* esco_id, char** json_out) {
  return guarded([&] {
    const auto& occs = need(occupations, "occupations");
    const std::string id = need_str(esco_id, "esco_id");
    for (const auto& o : occs.items) {
      if (o.esco_id == id) {
        ojson doc = {{"esco_id", o.esco_id}, {"title", o.title}, {"description", o.description},
                     {"skills", o.skills},   {"synonyms", o.synonyms}};
        set_out(json_out, dump(doc));
        return;
      }
    }
    throw NotFoundError("unknown esco_id '" + id + "'");
  });
}

cm_status cm_occupations_export_pairs(const cm_occupations* occupations, const char* out_path,
                                      char** summary_json) {
  return guarded([&] {
    const auto pairs = corpus::export_training_pairs(need(occupations, "occupations").items);
    write_file(need_str(out_path, "out_path"), corpus::serialize_pairs(pairs));
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& p : pairs) ++counts[static_cast<int>(p.kind)];
    ojson doc = {{"pairs", pairs.size()},
                 {"skill", counts[0]},
                 {"synonym", counts[1]},
                 {"description", counts[2]},
                 {"output", out_path}};
    set_out(summary_json, dump(doc));
  });
}

cm_status cm_ads_load(const char* jsonl_path, cm_ads** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cm_ads{corpus::load_ads(need_str(jsonl_path, "jsonl_path"))};
  });
}

void cm_ads_free(cm_ads* ads) { delete ads; }

size_t cm_ads_count(const cm_ads* ads) { return ads ? ads->items.size() : 0; }

cm_status cm_corpus_stats(const cm_occupations* occupations, const cm_ads* ads, char** json_out) {
  return guarded([&] {
    static const std::vector<corpus::EscoOccupation> kNoOccs;
    static const std::vector<corpus::JobAd> kNoAds;
    const auto s = corpus::corpus_stats(occupations ? occupations->items : kNoOccs, ads ? ads->items : kNoAds);
    ojson doc;
    if (occupations) doc["occupations"] = s.occupations;
    if (ads) doc["ads"] = s.ads;
    if (occupations && ads) {
      doc["covered_occupations"] = s.covered_occupations;
      doc["unknown_refs"] = s.unknown_refs;
    }
    set_out(json_out, dump(doc));
  });
}

// ---- ad filtering ---------------------------------------------------------------

cm_status cm_filter_create(const char* config_json, cm_filter** out) {
  return guarded([&] {
    need(out, "out");
    const auto cfg = parse_config(config_json, "filter config");
    const auto mode = adfilter::parse_filter_mode(cfg.value("mode", std::string("token-cutoff")));
    std::string classifier = cfg.value("classifier", std::string("baseline"));
    if (cfg.value("mode", std::string()) == "classifier-baseline") classifier = "baseline";
    auto filter = adfilter::make_filter(classifier, cfg.value("cue_config", std::string()));
    const double threshold = cfg.value("threshold", adfilter::kDefaultThreshold);
    const auto budget = cfg.value("budget", adfilter::kDefaultTokenBudget);
    *out = new cm_filter{filter, adfilter::Preprocessor(mode, filter, threshold, budget)};
  });
}

void cm_filter_free(cm_filter* filter) { delete filter; }

cm_status cm_filter_apply(const cm_filter* filter, const char* text, char** text_out) {
  return guarded([&] { set_out(text_out, need(filter, "filter").preprocess.apply(need_str(text, "text"))); });
}

cm_status cm_filter_ads(const cm_filter* filter, const cm_ads* ads, const char* out_path, char** summary_json) {
  return guarded([&] {
    const auto& f = need(filter, "filter");
    std::vector<corpus::JobAd> reduced = need(ads, "ads").items;
    std::size_t words_before = 0;
    std::size_t words_after = 0;
    for (auto& ad : reduced) {
      words_before += count_words(ad.body);
      try {
        ad.body = f.preprocess.apply(ad.body);
      } catch (const Error& e) {
        throw Error(e.kind(), "ad '" + ad.ad_id + "': " + e.what());
      }
      words_after += count_words(ad.body);
    }
    write_file(need_str(out_path, "out_path"), corpus::serialize_ads(reduced));
    ojson doc = {{"ads", reduced.size()},
                 {"filter", f.preprocess.label()},
                 {"words_before", words_before},
                 {"words_after", words_after},
                 {"output", out_path}};
    set_out(summary_json, dump(doc));
  });
}

cm_status cm_filter_evaluate(const cm_filter* filter, const char* labeled_jsonl_path, char** report_json) {
  return guarded([&] {
    const auto& f = need(filter, "filter");
    const auto data = read_file(need_str(labeled_jsonl_path, "labeled_jsonl_path"));
    std::vector<adfilter::Paragraph> paragraphs;
    std::vector<bool> labels;
    for_each_line(data, [&](std::string_view line, std::size_t line_no) {
      if (trim(line).empty()) return;
      const std::string where = "line " + std::to_string(line_no) + ": ";
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ValidationError(where + "invalid JSON (" + e.what() + ")");
      }
      if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
        throw ValidationError(where + "missing string key 'text'");
      }
      if (!obj.contains("label")) throw ValidationError(where + "missing key 'label'");
      const auto& lab = obj["label"];
      bool label;
      if (lab.is_boolean()) label = lab.get<bool>();
      else if (lab.is_number_integer() && (lab.get<int>() == 0 || lab.get<int>() == 1)) label = lab.get<int>() == 1;
      else throw ValidationError(where + "label must be 0, 1, true or false");
      adfilter::Paragraph p;
      p.ad_id = obj.value("ad_id", std::string());
      p.index = obj.value("index", std::size_t{0});
      p.text = obj["text"].get<std::string>();
      p.label = label;
      paragraphs.push_back(std::move(p));
      labels.push_back(label);
    });
    const auto scores = f.classifier->score(paragraphs);
    if (scores.size() != paragraphs.size()) throw ProtocolError("classifier returned a misaligned score list");
    std::vector<bool> verdicts;
    for (double s : scores) verdicts.push_back(s >= adfilter::kDefaultThreshold);
    const auto verdict_arr = std::make_unique<bool[]>(verdicts.size());
    const auto label_arr = std::make_unique<bool[]>(labels.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      verdict_arr[i] = verdicts[i];
      label_arr[i] = labels[i];
    }
    const auto r = adfilter::evaluate_filter(std::span<const bool>(verdict_arr.get(), verdicts.size()),
                                             std::span<const bool>(label_arr.get(), labels.size()));
    ojson doc = {{"classifier", f.classifier->name()},
                 {"items", verdicts.size()},
                 {"accuracy", r.accuracy},
                 {"precision", r.precision},
                 {"recall", r.recall},
                 {"f1", r.f1},
                 {"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}}}};
    set_out(report_json, dump(doc));
  });
}

// ---- embeddings -----------------------------------------------------------------

cm_status cm_embedder_create(const char* config_json, cm_embedder** out) {
  return guarded([&] {
    need(out, "out");
    const auto cfg = parse_config(config_json, "embedder config");
    const auto provider = cfg.value("provider", std::string("builtin-hash"));
    std::shared_ptr<const embedding::EmbeddingProvider> p;
    if (provider == "builtin-hash") {
      p = std::make_shared<embedding::HashEmbedder>(cfg.value("dim", std::size_t{256}),
                                                    cfg.value("seed", std::uint64_t{0}));
    } else if (provider.rfind("http://", 0) == 0) {
      p = std::make_shared<embedding::RemoteEmbedder>(provider, cfg.value("batch_size", std::size_t{64}),
                                                      cfg.value("timeout", 60.0));
    } else {
      throw InvalidArgument("unknown provider '" + provider + "' (expected builtin-hash or http://host:port)");
    }
    *out = new cm_embedder{std::move(p)};
  });
}

void cm_embedder_free(cm_embedder* embedder) { delete embedder; }

cm_status cm_embedder_info(const cm_embedder* embedder, char** json_out) {
  return guarded([&] {
    const auto info = need(embedder, "embedder").provider->info();
    set_out(json_out, dump(ojson{{"model", info.model}, {"dim", info.dim}}));
  });
}

cm_status cm_embedder_embed(const cm_embedder* embedder, const char* text, double* out, size_t capacity,
                            size_t* dim) {
  return guarded([&] {
    const auto v = need(embedder, "embedder").provider->embed_one(need_str(text, "text"));
    if (dim) *dim = v.dim();
    if (out) std::memcpy(out, v.values().data(), std::min(capacity, v.dim()) * sizeof(double));
  });
}

cm_status cm_embed_ads(const cm_embedder* embedder, const cm_ads* ads, const cm_filter* filter,
                       const char* out_path, char** summary_json) {
  return guarded([&] {
    const auto& e = need(embedder, "embedder");
    const auto& items = need(ads, "ads").items;
    need_str(out_path, "out_path");
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& ad : items) {
      try {
        texts.push_back(filter ? filter->preprocess.apply(ad_text(ad)) : ad_text(ad));
      } catch (const Error& err) {
        throw Error(err.kind(), "ad '" + ad.ad_id + "': " + err.what());
      }
    }
    embedding::EmbeddingStore store;
    if (!texts.empty()) {
      auto vectors = e.provider->embed(texts);
      for (std::size_t i = 0; i < items.size(); ++i) store.add(items[i].ad_id, std::move(vectors[i]));
    }
    embedding::save_embeddings(store, out_path);
    const auto info = e.provider->info();
    set_out(summary_json, dump(ojson{{"records", store.size()}, {"dim", info.dim}, {"model", info.model},
                                     {"output", out_path}}));
  });
}

cm_status cm_embed_descriptions(const cm_embedder* embedder, const cm_occupations* occupations,
                                const char* out_path, char** summary_json) {
  return guarded([&] {
    const auto& e = need(embedder, "embedder");
    const auto& items = need(occupations, "occupations").items;
    need_str(out_path, "out_path");
    std::vector<std::string> texts;
    std::size_t title_fallbacks = 0;
    for (const auto& o : items) {
      if (o.description.empty()) ++title_fallbacks;
      texts.push_back(o.description.empty() ? o.title : o.description);
    }
    embedding::EmbeddingStore store;
    if (!texts.empty()) {
      auto vectors = e.provider->embed(texts);
      for (std::size_t i = 0; i < items.size(); ++i) store.add(items[i].esco_id, std::move(vectors[i]));
    }
    embedding::save_embeddings(store, out_path);
    const auto info = e.provider->info();
    set_out(summary_json, dump(ojson{{"records", store.size()}, {"dim", info.dim}, {"model", info.model},
                                     {"title_fallbacks", title_fallbacks}, {"output", out_path}}));
  });
}

cm_status cm_store_load(const char* jsonl_path, cm_store** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cm_store{embedding::load_embeddings(need_str(jsonl_path, "jsonl_path"))};
  });
}

cm_status cm_store_save(const cm_store* store, const char* jsonl_path) {
  return guarded([&] { embedding::save_embeddings(need(store, "store").store, need_str(jsonl_path, "jsonl_path")); });
}

void cm_store_free(cm_store* store) { delete store; }

size_t cm_store_count(const cm_store* store) { return store ? store->store.size() : 0; }

size_t cm_store_dim(const cm_store* store) { return store ? store->store.dim() : 0; }

cm_status cm_store_get(const cm_store* store, const char* id, double* out, size_t capacity, size_t* dim) {
  return guarded([&] {
    const std::string key = need_str(id, "id");
    const auto* v = need(store, "store").store.find(key);
    if (v == nullptr) throw NotFoundError("no embedding for '" + key + "'");
    if (dim) *dim = v->dim();
    if (out) std::memcpy(out, v->values().data(), std::min(capacity, v->dim()) * sizeof(double));
  });
}

// ---- centroids ------------------------------------------------------------------

cm_status cm_ad_centroids(const cm_store* ad_embeddings, const cm_ads* ads, int normalize_members,
                          const char* out_path, const char* metadata_path, char** summary_json) {
  return guarded([&] {
    const auto grouped = centroid::group_ad_embeddings(need(ads, "ads").items, need(ad_embeddings, "ad_embeddings").store);
    const auto centroids = centroid::compute_ad_centroids(grouped, {normalize_members != 0});
    embedding::save_embeddings(centroid::to_store(centroids), need_str(out_path, "out_path"));
    write_file(need_str(metadata_path, "metadata_path"), centroid::ad_centroid_metadata(centroids));
    set_out(summary_json, dump(ojson{{"kind", "ad_centroids"},
                                     {"centroids", centroids.size()},
                                     {"ads", grouped.size()},
                                     {"normalize_members", normalize_members != 0},
                                     {"output", out_path},
                                     {"metadata", metadata_path}}));
  });
}

cm_status cm_job_centroids(const cm_store* ad_centroids, const char* ad_metadata_path, const cm_store* descriptions,
                           const cm_occupations* occupations, const char* out_path, const char* metadata_path,
                           char** summary_json) {
  return guarded([&] {
    std::map<std::string, centroid::AdCentroid> ads;
    if (ad_centroids != nullptr) {
      const std::string meta = ad_metadata_path ? read_file(ad_metadata_path) : R"({"kind":"ad_centroids"})";
      ads = centroid::read_ad_centroids(ad_centroids->store, meta);
    }
    std::map<std::string, embedding::Vector> desc;
    for (const auto& rec : need(descriptions, "descriptions").store.records()) desc.emplace(rec.id, rec.vector);
    const auto jobs = centroid::compute_job_centroids(ads, desc, need(occupations, "occupations").items);
    embedding::save_embeddings(centroid::to_store(jobs), need_str(out_path, "out_path"));
    write_file(need_str(metadata_path, "metadata_path"), centroid::job_centroid_metadata(jobs, ads));
    std::size_t hybrid = 0;
    for (const auto& [id, j] : jobs) hybrid += j.source == centroid::CentroidSource::kHybrid ? 1 : 0;
    set_out(summary_json, dump(ojson{{"kind", "job_centroids"},
                                     {"centroids", jobs.size()},
                                     {"hybrid", hybrid},
                                     {"description_only", jobs.size() - hybrid},
                                     {"output", out_path},
                                     {"metadata", metadata_path}}));
  });
}

// ---- index ----------------------------------------------------------------------

cm_status cm_index_build(const cm_store* centroids, const char* metadata_json, cm_index** out) {
  return guarded([&] {
    need(out, "out");
    const auto cfg = parse_config(metadata_json, "index metadata");
    matcher::IndexMetadata meta{cfg.value("model", std::string()), cfg.value("centroid_kind", std::string()),
                                cfg.value("build_timestamp", std::string())};
    *out = new cm_index{matcher::build_index(need(centroids, "centroids").store, std::move(meta))};
  });
}

cm_status cm_index_load(const char* path, cm_index** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cm_index{matcher::load_index_file(need_str(path, "path"))};
  });
}

cm_status cm_index_save(const cm_index* index, const char* path) {
  return guarded([&] { matcher::save_index_file(need(index, "index").index, need_str(path, "path")); });
}

void cm_index_free(cm_index* index) { delete index; }

size_t cm_index_count(const cm_index* index) { return index ? index->index.size() : 0; }

size_t cm_index_dim(const cm_index* index) { return index ? index->index.dim() : 0; }

cm_status cm_index_recommend(const cm_index* index, const double* query, size_t dim, size_t k, char** json_out) {
  return guarded([&] {
    const auto& idx = need(index, "index").index;
    need(query, "query");
    const auto recs = idx.recommend(embedding::Vector(std::vector<double>(query, query + dim)), k);
    ojson arr = ojson::array();
    for (const auto& r : recs) arr.push_back({{"esco_id", r.esco_id}, {"score", r.score}, {"rank", r.rank}});
    set_out(json_out, dump(ojson{{"recommendations", std::move(arr)}}));
  });
}

cm_status cm_recommend_text(const cm_index* index, const cm_embedder* embedder, const cm_filter* filter,
                            const cm_occupations* occupations, const char* text, size_t k, char** json_out) {
  return guarded([&] {
    const auto& idx = need(index, "index").index;
    const auto& e = need(embedder, "embedder");
    const std::string raw = need_str(text, "text");
    if (trim(raw).empty()) throw ValidationError("resume text is empty");
    const std::string processed = filter ? filter->preprocess.apply(raw) : raw;
    const auto recs = idx.recommend(e.provider->embed_one(processed), k);
    std::map<std::string, const corpus::EscoOccupation*> by_id;
    if (occupations) {
      for (const auto& o : occupations->items) by_id.emplace(o.esco_id, &o);
    }
    ojson arr = ojson::array();
    for (const auto& r : recs) {
      ojson row = {{"rank", r.rank}, {"esco_id", r.esco_id}, {"score", r.score}};
      if (auto it = by_id.find(r.esco_id); it != by_id.end()) row["title"] = it->second->title;
      arr.push_back(std::move(row));
    }
    set_out(json_out, dump(ojson{{"model", e.provider->info().model},
                                 {"filter", filter ? filter->preprocess.label() : std::string("none")},
                                 {"k", k},
                                 {"recommendations", std::move(arr)}}));
  });
}

// ---- evaluation -------------------------------------------------------------------

cm_status cm_eval_rerank(const cm_index* index, const cm_embedder* embedder, const cm_filter* const* filters,
                         size_t filter_count, const char* queries_path, const char* gold_path, size_t k, int as_csv,
                         char** report_out) {
  return guarded([&] {
    const auto& idx = need(index, "index").index;
    const auto& e = need(embedder, "embedder");
    if (filter_count == 0 || filters == nullptr) throw InvalidArgument("at least one filter is required");
    std::vector<adfilter::Preprocessor> modes;
    for (size_t i = 0; i < filter_count; ++i) modes.push_back(need(filters[i], "filter").preprocess);
    const auto queries =
        evaluation::parse_queries(read_file(need_str(queries_path, "queries_path")), maybe_read(gold_path));
    const auto cmp = evaluation::run_filter_comparison(idx, queries, *e.provider, modes, k);
    if (as_csv) {
      set_out(report_out, evaluation::to_csv(cmp));
    } else if (cmp.columns.size() == 1) {
      set_out(report_out, evaluation::to_json(cmp.columns.front()));
    } else {
      set_out(report_out, evaluation::to_json(cmp));
    }
  });
}

cm_status cm_eval_compare(const cm_index* const* indexes, const char* const* names, size_t count,
                          const cm_embedder* embedder, const cm_filter* filter, const char* queries_path,
                          const char* gold_path, size_t k, int as_csv, char** report_out) {
  return guarded([&] {
    if (count == 0 || indexes == nullptr || names == nullptr) throw InvalidArgument("at least one space is required");
    std::vector<evaluation::NamedSpace> spaces;
    for (size_t i = 0; i < count; ++i) {
      spaces.push_back({need_str(names[i], "name"), &need(indexes[i], "index").index});
    }
    const auto queries =
        evaluation::parse_queries(read_file(need_str(queries_path, "queries_path")), maybe_read(gold_path));
    const auto cmp = evaluation::run_embedding_comparison(spaces, queries, *need(embedder, "embedder").provider,
                                                          need(filter, "filter").preprocess, k);
    set_out(report_out, as_csv ? evaluation::to_csv(cmp) : evaluation::to_json(cmp));
  });
}

cm_status cm_eval_judgments(const char* judgments_path, const char* rankings_path, size_t k, int as_csv,
                            char** report_out) {
  return guarded([&] {
    const auto judgments = evaluation::parse_judgments(read_file(need_str(judgments_path, "judgments_path")));
    const auto rankings = evaluation::parse_rankings(read_file(need_str(rankings_path, "rankings_path")));
    const auto report = evaluation::evaluate_judgments(rankings, judgments, k);
    set_out(report_out, as_csv ? evaluation::to_csv(report) : evaluation::to_json(report));
  });
}

// ---- service ----------------------------------------------------------------------

cm_status cm_service_config_resolve(const char* config_path, const char* flags_json, char** resolved_json) {
  return guarded([&] {
    json file = json::object();
    if (config_path != nullptr && *config_path != '\0') {
      try {
        file = json::parse(read_file(config_path));
      } catch (const json::parse_error& e) {
        throw ValidationError(std::string(config_path) + ": invalid JSON (" + e.what() + ")");
      }
    }
    const auto cfg = service::resolve_config(file, service::process_env(), parse_config(flags_json, "flags"));
    set_out(resolved_json, service::to_json(cfg).dump(2) + "\n");
  });
}

cm_status cm_server_create(const char* resolved_config_json, cm_server** out) {
  return guarded([&] {
    need(out, "out");
    const auto cfg = service::resolve_config(parse_config(resolved_config_json, "service config"),
                                               [](const std::string&) { return std::optional<std::string>(); },
                                               json::object());
    auto server = std::make_unique<cm_server>();
    server->config = cfg;
    server->service = service::RecommendationService::from_config(cfg);
    auto reload = [cfg] { return service::load_snapshot(cfg.index_path, cfg.esco_path); };
    server->http = std::make_unique<service::HttpServer>(server->service, cfg.threads, reload);
    *out = server.release();
  });
}

cm_status cm_server_bind(cm_server* server, int* port) {
  return guarded([&] {
    auto& s = need(server, "server");
    const int bound = const_cast<cm_server&>(s).http->bind(s.config.host, s.config.port);
    if (port) *port = bound;
  });
}

cm_status cm_server_run(cm_server* server) {
  return guarded([&] { const_cast<cm_server&>(need(server, "server")).http->run(); });
}

void cm_server_stop(cm_server* server) {
  if (server && server->http) server->http->stop();
}

void cm_server_free(cm_server* server) { delete server; }

}  // extern "C"
