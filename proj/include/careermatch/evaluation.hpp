#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "careermatch/adfilter.hpp"
#include "careermatch/embedding.hpp"
#include "careermatch/matcher.hpp"

namespace careermatch::evaluation {

using RelevantSet = std::set<std::string, std::less<>>;

struct RankedList {
  std::string query_id;
  std::vector<std::string> items;  // rank 1 first
};

struct Judgment {
  std::string resume_id;
  std::string esco_id;
  std::string expert_id;
  bool relevant = false;

  bool operator==(const Judgment&) const = default;
};

// --- metric primitives -------------------------------------------------------

/// 1/rank of `gold` if it sits within the top k, else 0.
double reciprocal_rank(std::span<const std::string> ranked, std::string_view gold, std::size_t k);

/// 1/rank of the first item of `relevant` within the top k, else 0.
double reciprocal_rank(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// Mean reciprocal rank; every list needs a gold label keyed by query_id.
double mrr_at_k(std::span<const RankedList> ranked, const std::map<std::string, std::string>& golds, std::size_t k);

/// |top-k ∩ relevant| / k. Lists shorter than k are an error.
double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// Sum of P@i over relevant ranks i <= k, divided by the number of relevant
/// items found in the top k (0 when none).
double average_precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

/// Mean AP@k; relevant sets are keyed by query_id (missing = empty set).
double map_at_k(std::span<const RankedList> ranked, const std::map<std::string, RelevantSet>& relevant,
                std::size_t k);

// --- relevance judgments -----------------------------------------------------

/// True iff at least half of the votes say relevant. Throws on no votes.
bool majority_relevance(std::span<const Judgment> votes);

/// Keeps the last judgment per (resume, job, expert), in first-seen order.
std::vector<Judgment> dedup_judgments(std::span<const Judgment> judgments);

/// Majority-relevant esco_ids per resume over deduplicated judgments.
std::map<std::string, RelevantSet> majority_relevant_sets(std::span<const Judgment> judgments);

std::vector<Judgment> parse_judgments(std::string_view jsonl);
std::string serialize_judgment(const Judgment& j);
std::vector<RankedList> parse_rankings(std::string_view jsonl);

struct JudgedMetrics {
  std::string resume_id;
  double map_at_k = 0.0;
  double p_at_k = 0.0;
  double mrr_at_k = 0.0;
  std::size_t n_experts = 0;
  std::size_t relevant_count = 0;  // majority-relevant items in the top k
};

/// Metrics of one resume's ranked list under its (raw) judgments.
JudgedMetrics judged_metrics(const RankedList& ranked, std::span<const Judgment> judgments, std::size_t k);

struct HumanEvalReport {
  std::size_t k = 20;
  std::vector<JudgedMetrics> per_resume;
  double map_at_k = 0.0;
  double p_at_k = 0.0;
  double mrr_at_k = 0.0;
};

/// One row per ranked list (input order) plus arithmetic means.
HumanEvalReport evaluate_judgments(std::span<const RankedList> rankings, std::span<const Judgment> judgments,
                                   std::size_t k = 20);

std::string to_json(const HumanEvalReport& report);
std::string to_csv(const HumanEvalReport& report);

// --- reranking harnesses -----------------------------------------------------

struct Query {
  std::string query_id;
  std::string text;
  std::string gold;  // esco_id

  bool operator==(const Query&) const = default;
};

/// JSONL queries: {"query_id","text","esco_id"} or ad records
/// {"ad_id","title","body","esco_id"} (text = title + blank line + body).
/// `gold_jsonl`, when non-empty, supplies/overrides gold labels by query_id.
std::vector<Query> parse_queries(std::string_view jsonl, std::string_view gold_jsonl = {});

struct QueryOutcome {
  std::string query_id;
  std::string gold;
  std::size_t rank = 0;  // 0 = not in top k
  double reciprocal_rank = 0.0;
};

struct RerankReport {
  std::string model;
  std::string filter;
  std::string centroid_kind;
  std::size_t k = 100;
  std::vector<QueryOutcome> per_query;
  std::vector<std::string> skipped;  // queries whose gold is not in the index
  double mrr_at_k = 0.0;
};

/// Per query: preprocess -> embed -> recommend(k) -> reciprocal rank.
RerankReport run_rerank_eval(const matcher::Index& index, std::span<const Query> queries,
                             const embedding::EmbeddingProvider& provider, const adfilter::Preprocessor& preprocess,
                             std::size_t k = 100);

std::string to_json(const RerankReport& report);

/// MRR@k of several preprocessing modes over one index (truncation table).
struct FilterComparison {
  std::string model;
  std::size_t k = 100;
  std::vector<RerankReport> columns;  // one per mode, in the order given
};

FilterComparison run_filter_comparison(const matcher::Index& index, std::span<const Query> queries,
                                       const embedding::EmbeddingProvider& provider,
                                       std::span<const adfilter::Preprocessor> modes, std::size_t k = 100);

std::string to_json(const FilterComparison& comparison);
std::string to_csv(const FilterComparison& comparison);

struct NamedSpace {
  std::string name;
  const matcher::Index* index = nullptr;
};

struct EmbeddingComparison {
  std::size_t k = 100;
  std::vector<std::pair<std::string, RerankReport>> rows;  // sorted by space name
};

/// MRR@k per embedding space; spaces must cover the same occupation ids.
EmbeddingComparison run_embedding_comparison(std::span<const NamedSpace> spaces, std::span<const Query> queries,
                                             const embedding::EmbeddingProvider& provider,
                                             const adfilter::Preprocessor& preprocess, std::size_t k = 100);

std::string to_json(const EmbeddingComparison& comparison);
std::string to_csv(const EmbeddingComparison& comparison);

}  // namespace careermatch::evaluation
