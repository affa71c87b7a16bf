/*
 * careermatch C API.
 *
 * Every object is an opaque handle created by a *_create / *_load function
 * and released with the matching *_free. Functions return a cm_status; on
 * failure cm_last_error() holds a message for the calling thread. Strings
 * returned through `char**` out-parameters are owned by the caller and must
 * be released with cm_string_free().
 *
 * Handles are immutable once created and may be shared across threads,
 * except cm_server which is driven by one owner.
 */
#ifndef CAREERMATCH_H
#define CAREERMATCH_H

#include <stddef.h>

#if defined(_WIN32)
#define CM_API __declspec(dllexport)
#else
#define CM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cm_status {
  CM_OK = 0,
  CM_ERR_INVALID_ARGUMENT = 1, /* null handle / bad flag value */
  CM_ERR_VALIDATION = 2,       /* malformed input data, contract violation */
  CM_ERR_IO = 3,               /* file system */
  CM_ERR_PROTOCOL = 4,         /* remote provider / classifier */
  CM_ERR_NOT_FOUND = 5,
  CM_ERR_CONFLICT = 6,
  CM_ERR_INTERNAL = 7
} cm_status;

typedef struct cm_occupations cm_occupations;
typedef struct cm_ads cm_ads;
typedef struct cm_filter cm_filter;
typedef struct cm_embedder cm_embedder;
typedef struct cm_store cm_store;
typedef struct cm_index cm_index;
typedef struct cm_server cm_server;

CM_API const char* cm_version(void);
CM_API const char* cm_status_name(cm_status status);
/* Message of the last failure on this thread ("" if none). */
CM_API const char* cm_last_error(void);
CM_API void cm_string_free(char* s);

/* ---- corpus ------------------------------------------------------------ */

/* Taxonomy CSV: esco_id,title,description,skills,synonyms */
CM_API cm_status cm_occupations_load(const char* csv_path, cm_occupations** out);
CM_API void cm_occupations_free(cm_occupations* occupations);
CM_API size_t cm_occupations_count(const cm_occupations* occupations);
/* Full record as JSON; CM_ERR_NOT_FOUND for unknown ids. */
CM_API cm_status cm_occupations_get(const cm_occupations* occupations, const char* esco_id, char** json_out);
/* Writes training pairs JSONL; summary counts per kind. */
CM_API cm_status cm_occupations_export_pairs(const cm_occupations* occupations, const char* out_path,
                                             char** summary_json);

/* Ads JSONL: ad_id, esco_id, title, body */
CM_API cm_status cm_ads_load(const char* jsonl_path, cm_ads** out);
CM_API void cm_ads_free(cm_ads* ads);
CM_API size_t cm_ads_count(const cm_ads* ads);

/* Either handle may be NULL. */
CM_API cm_status cm_corpus_stats(const cm_occupations* occupations, const cm_ads* ads, char** json_out);

/* ---- ad filtering -------------------------------------------------------- */

/*
 * config_json keys (all optional):
 *   "mode":       "token-cutoff" (default) | "classifier" | "classifier-baseline"
 *   "classifier": "baseline" (default) | "http://host:port"
 *   "cue_config": path to a cue lexicon JSON
 *   "threshold":  0.5, "budget": 512
 */
CM_API cm_status cm_filter_create(const char* config_json, cm_filter** out);
CM_API void cm_filter_free(cm_filter* filter);
CM_API cm_status cm_filter_apply(const cm_filter* filter, const char* text, char** text_out);
/* Writes the ads with reduced bodies to out_path (ads JSONL). */
CM_API cm_status cm_filter_ads(const cm_filter* filter, const cm_ads* ads, const char* out_path,
                               char** summary_json);
/* Paragraph labels JSONL {"text":...,"label":0|1[, "index":n]} -> accuracy/precision/recall/F1. */
CM_API cm_status cm_filter_evaluate(const cm_filter* filter, const char* labeled_jsonl_path, char** report_json);

/* ---- embeddings ---------------------------------------------------------- */

/* {"provider":"builtin-hash","dim":256,"seed":0} or {"provider":"http://host:port","batch_size":64} */
CM_API cm_status cm_embedder_create(const char* config_json, cm_embedder** out);
CM_API void cm_embedder_free(cm_embedder* embedder);
/* {"model":...,"dim":...} */
CM_API cm_status cm_embedder_info(const cm_embedder* embedder, char** json_out);
/* Writes up to `capacity` components into out; *dim receives the true dim. */
CM_API cm_status cm_embedder_embed(const cm_embedder* embedder, const char* text, double* out, size_t capacity,
                                   size_t* dim);
/* Embeds each ad (title + blank line + body, after the optional filter). */
CM_API cm_status cm_embed_ads(const cm_embedder* embedder, const cm_ads* ads, const cm_filter* filter,
                              const char* out_path, char** summary_json);
/* Embeds each occupation's description (title when the description is empty). */
CM_API cm_status cm_embed_descriptions(const cm_embedder* embedder, const cm_occupations* occupations,
                                       const char* out_path, char** summary_json);

CM_API cm_status cm_store_load(const char* jsonl_path, cm_store** out);
CM_API cm_status cm_store_save(const cm_store* store, const char* jsonl_path);
CM_API void cm_store_free(cm_store* store);
CM_API size_t cm_store_count(const cm_store* store);
CM_API size_t cm_store_dim(const cm_store* store);
CM_API cm_status cm_store_get(const cm_store* store, const char* id, double* out, size_t capacity, size_t* dim);

/* ---- centroids ----------------------------------------------------------- */

/* Groups ad embeddings by gold esco_id; writes centroids JSONL + sidecar. */
CM_API cm_status cm_ad_centroids(const cm_store* ad_embeddings, const cm_ads* ads, int normalize_members,
                                 const char* out_path, const char* metadata_path, char** summary_json);
/* ad_centroids/ad_metadata_path may be NULL (description-only space). */
CM_API cm_status cm_job_centroids(const cm_store* ad_centroids, const char* ad_metadata_path,
                                  const cm_store* descriptions, const cm_occupations* occupations,
                                  const char* out_path, const char* metadata_path, char** summary_json);

/* ---- index --------------------------------------------------------------- */

/* metadata_json: {"model":...,"centroid_kind":...,"build_timestamp":...} */
CM_API cm_status cm_index_build(const cm_store* centroids, const char* metadata_json, cm_index** out);
CM_API cm_status cm_index_load(const char* path, cm_index** out);
CM_API cm_status cm_index_save(const cm_index* index, const char* path);
CM_API void cm_index_free(cm_index* index);
CM_API size_t cm_index_count(const cm_index* index);
CM_API size_t cm_index_dim(const cm_index* index);
/* {"recommendations":[{"esco_id","score","rank"}...]} */
CM_API cm_status cm_index_recommend(const cm_index* index, const double* query, size_t dim, size_t k,
                                    char** json_out);
/* Text -> filter (optional) -> embed -> top k, titles joined when occupations given. */
CM_API cm_status cm_recommend_text(const cm_index* index, const cm_embedder* embedder, const cm_filter* filter,
                                   const cm_occupations* occupations, const char* text, size_t k, char** json_out);

/* ---- evaluation ---------------------------------------------------------- */

/*
 * Reports are JSON, or a CSV table when `as_csv` is non-zero.
 * gold_path may be NULL when the queries carry their own esco_id.
 */

/* MRR@k reranking. One filter -> single report; several -> comparison table
 * with one column per filter. */
CM_API cm_status cm_eval_rerank(const cm_index* index, const cm_embedder* embedder, const cm_filter* const* filters,
                                size_t filter_count, const char* queries_path, const char* gold_path, size_t k,
                                int as_csv, char** report_out);
/* MRR@k per named embedding space, rows sorted by name. */
CM_API cm_status cm_eval_compare(const cm_index* const* indexes, const char* const* names, size_t count,
                                 const cm_embedder* embedder, const cm_filter* filter, const char* queries_path,
                                 const char* gold_path, size_t k, int as_csv, char** report_out);
/* Majority-vote MAP@k / P@k / MRR@k from judgments JSONL over rankings JSONL. */
CM_API cm_status cm_eval_judgments(const char* judgments_path, const char* rankings_path, size_t k, int as_csv,
                                   char** report_out);

/* ---- service ------------------------------------------------------------- */

/* Merges defaults < config file (may be NULL) < CAREERMATCH_* env < flags_json. */
CM_API cm_status cm_service_config_resolve(const char* config_path, const char* flags_json, char** resolved_json);
CM_API cm_status cm_server_create(const char* resolved_config_json, cm_server** out);
/* Binds the configured host/port (0 = ephemeral); *port receives the bound port. */
CM_API cm_status cm_server_bind(cm_server* server, int* port);
/* Blocks until cm_server_stop(). */
CM_API cm_status cm_server_run(cm_server* server);
CM_API void cm_server_stop(cm_server* server);
CM_API void cm_server_free(cm_server* server);

#ifdef __cplusplus
}
#endif

#endif /* CAREERMATCH_H */
