#include "careermatch/evaluation.hpp"

#include <cstdio>
#include <tuple>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"
#include "careermatch/text.hpp"

namespace careermatch::evaluation {

namespace {

using ojson = nlohmann::ordered_json;

void require_k(std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
}

void require_length(std::span<const std::string> ranked, std::size_t k) {
  if (ranked.size() < k) {
    throw ValidationError("ranked list has " + std::to_string(ranked.size()) + " items, fewer than k = " +
                          std::to_string(k));
  }
}

nlohmann::json parse_line(std::string_view line, std::size_t line_no) {
  try {
    auto obj = nlohmann::json::parse(line);
    if (!obj.is_object()) throw ValidationError("line " + std::to_string(line_no) + ": expected a JSON object");
    return obj;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
  }
}

std::string string_key(const nlohmann::json& obj, const char* key, std::size_t line_no, bool allow_empty = false) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw ValidationError("line " + std::to_string(line_no) + ": missing string key '" + key + "'");
  }
  auto s = obj[key].get<std::string>();
  if (!allow_empty && s.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": key '" + key + "' is empty");
  }
  return s;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

ojson report_body(const RerankReport& r) {
  ojson doc;
  doc["metric"] = "mrr";
  doc["k"] = r.k;
  doc["model"] = r.model;
  doc["filter"] = r.filter;
  doc["centroid_kind"] = r.centroid_kind;
  doc["query_count"] = r.per_query.size();
  doc["skipped_unknown_gold"] = r.skipped;
  doc["aggregate"] = {{"mrr_at_k", r.mrr_at_k}};
  ojson rows = ojson::array();
  for (const auto& q : r.per_query) {
    ojson row;
    row["query_id"] = q.query_id;
    row["gold"] = q.gold;
    row["rank"] = q.rank == 0 ? ojson(nullptr) : ojson(q.rank);
    row["reciprocal_rank"] = q.reciprocal_rank;
    rows.push_back(std::move(row));
  }
  doc["per_query"] = std::move(rows);
  return doc;
}

}  // namespace

double reciprocal_rank(std::span<const std::string> ranked, std::string_view gold, std::size_t k) {
  require_k(k);
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] == gold) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double reciprocal_rank(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (relevant.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double mrr_at_k(std::span<const RankedList> ranked, const std::map<std::string, std::string>& golds, std::size_t k) {
  require_k(k);
  if (ranked.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& list : ranked) {
    auto it = golds.find(list.query_id);
    if (it == golds.end()) throw ValidationError("no gold label for query '" + list.query_id + "'");
    sum += reciprocal_rank(list.items, it->second, k);
  }
  return sum / static_cast<double>(ranked.size());
}

double precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  require_length(ranked, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += relevant.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  require_length(ranked, k);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (relevant.count(ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double map_at_k(std::span<const RankedList> ranked, const std::map<std::string, RelevantSet>& relevant,
                std::size_t k) {
  require_k(k);
  if (ranked.empty()) return 0.0;
  static const RelevantSet kEmpty;
  double sum = 0.0;
  for (const auto& list : ranked) {
    auto it = relevant.find(list.query_id);
    sum += average_precision_at_k(list.items, it == relevant.end() ? kEmpty : it->second, k);
  }
  return sum / static_cast<double>(ranked.size());
}

bool majority_relevance(std::span<const Judgment> votes) {
  if (votes.empty()) throw ValidationError("majority_relevance: no judgments for the pair");
  std::size_t yes = 0;
  for (const auto& v : votes) yes += v.relevant ? 1 : 0;
  // yes / n >= 1/2 without floating point
  return 2 * yes >= votes.size();
}

std::vector<Judgment> dedup_judgments(std::span<const Judgment> judgments) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> slot;
  std::vector<Judgment> out;
  for (const auto& j : judgments) {
    auto key = std::make_tuple(j.resume_id, j.esco_id, j.expert_id);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(std::move(key), out.size());
      out.push_back(j);
    } else {
      out[it->second] = j;
    }
  }
  return out;
}

std::map<std::string, RelevantSet> majority_relevant_sets(std::span<const Judgment> judgments) {
  std::map<std::pair<std::string, std::string>, std::vector<Judgment>> votes;
  for (const auto& j : dedup_judgments(judgments)) votes[{j.resume_id, j.esco_id}].push_back(j);
  std::map<std::string, RelevantSet> out;
  for (const auto& [key, v] : votes) {
    auto& set = out[key.first];
    if (majority_relevance(v)) set.insert(key.second);
  }
  return out;
}

std::vector<Judgment> parse_judgments(std::string_view jsonl) {
  std::vector<Judgment> out;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    auto obj = parse_line(line, line_no);
    Judgment j;
    j.resume_id = string_key(obj, "resume_id", line_no);
    j.esco_id = string_key(obj, "esco_id", line_no);
    j.expert_id = string_key(obj, "expert_id", line_no);
    if (!obj.contains("relevant") || !obj["relevant"].is_boolean()) {
      throw ValidationError("line " + std::to_string(line_no) + ": key 'relevant' must be a boolean");
    }
    j.relevant = obj["relevant"].get<bool>();
    out.push_back(std::move(j));
  });
  return out;
}

std::string serialize_judgment(const Judgment& j) {
  return "{\"resume_id\":" + json_quote(j.resume_id) + ",\"esco_id\":" + json_quote(j.esco_id) +
         ",\"expert_id\":" + json_quote(j.expert_id) + ",\"relevant\":" + (j.relevant ? "true" : "false") + "}";
}

std::vector<RankedList> parse_rankings(std::string_view jsonl) {
  std::vector<RankedList> out;
  std::set<std::string> seen_ids;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    auto obj = parse_line(line, line_no);
    RankedList list;
    list.query_id = obj.contains("resume_id") ? string_key(obj, "resume_id", line_no)
                                              : string_key(obj, "query_id", line_no);
    if (!obj.contains("items") || !obj["items"].is_array()) {
      throw ValidationError("line " + std::to_string(line_no) + ": missing array key 'items'");
    }
    std::set<std::string> seen_items;
    for (const auto& item : obj["items"]) {
      if (!item.is_string()) throw ValidationError("line " + std::to_string(line_no) + ": items must be strings");
      if (!seen_items.insert(item.get<std::string>()).second) {
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate item '" + item.get<std::string>() +
                              "'");
      }
      list.items.push_back(item.get<std::string>());
    }
    if (!seen_ids.insert(list.query_id).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate ranking for '" + list.query_id + "'");
    }
    out.push_back(std::move(list));
  });
  return out;
}

JudgedMetrics judged_metrics(const RankedList& ranked, std::span<const Judgment> judgments, std::size_t k) {
  require_k(k);
  require_length(ranked.items, k);
  std::vector<Judgment> own;
  std::set<std::string> experts;
  for (const auto& j : judgments) {
    if (j.resume_id != ranked.query_id) continue;
    own.push_back(j);
    experts.insert(j.expert_id);
  }
  const auto sets = majority_relevant_sets(own);
  static const RelevantSet kEmpty;
  auto it = sets.find(ranked.query_id);
  const RelevantSet& relevant = it == sets.end() ? kEmpty : it->second;

  JudgedMetrics m;
  m.resume_id = ranked.query_id;
  m.map_at_k = average_precision_at_k(ranked.items, relevant, k);
  m.p_at_k = precision_at_k(ranked.items, relevant, k);
  m.mrr_at_k = reciprocal_rank(ranked.items, relevant, k);
  m.n_experts = experts.size();
  for (std::size_t i = 0; i < k; ++i) m.relevant_count += relevant.count(ranked.items[i]);
  return m;
}

HumanEvalReport evaluate_judgments(std::span<const RankedList> rankings, std::span<const Judgment> judgments,
                                   std::size_t k) {
  require_k(k);
  HumanEvalReport report;
  report.k = k;
  for (const auto& list : rankings) report.per_resume.push_back(judged_metrics(list, judgments, k));
  if (!report.per_resume.empty()) {
    for (const auto& m : report.per_resume) {
      report.map_at_k += m.map_at_k;
      report.p_at_k += m.p_at_k;
      report.mrr_at_k += m.mrr_at_k;
    }
    const auto n = static_cast<double>(report.per_resume.size());
    report.map_at_k /= n;
    report.p_at_k /= n;
    report.mrr_at_k /= n;
  }
  return report;
}

std::string to_json(const HumanEvalReport& report) {
  ojson doc;
  doc["k"] = report.k;
  doc["query_count"] = report.per_resume.size();
  ojson rows = ojson::array();
  for (const auto& m : report.per_resume) {
    rows.push_back({{"resume_id", m.resume_id},
                    {"map_at_k", m.map_at_k},
                    {"p_at_k", m.p_at_k},
                    {"mrr_at_k", m.mrr_at_k},
                    {"n_experts", m.n_experts},
                    {"relevant_count", m.relevant_count}});
  }
  doc["per_query"] = std::move(rows);
  doc["aggregate"] = {{"map_at_k", report.map_at_k}, {"p_at_k", report.p_at_k}, {"mrr_at_k", report.mrr_at_k}};
  return doc.dump(2) + "\n";
}

std::string to_csv(const HumanEvalReport& report) {
  const std::string k = std::to_string(report.k);
  std::string out = "resume,MAP@" + k + ",P@" + k + ",MRR@" + k + "\n";
  for (const auto& m : report.per_resume) {
    out += csv_cell(m.resume_id) + "," + fixed3(m.map_at_k) + "," + fixed3(m.p_at_k) + "," + fixed3(m.mrr_at_k) +
           "\n";
  }
  out += "Average," + fixed3(report.map_at_k) + "," + fixed3(report.p_at_k) + "," + fixed3(report.mrr_at_k) + "\n";
  return out;
}

std::vector<Query> parse_queries(std::string_view jsonl, std::string_view gold_jsonl) {
  std::map<std::string, std::string> golds;
  for_each_line(gold_jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    auto obj = parse_line(line, line_no);
    auto id = string_key(obj, "query_id", line_no);
    if (!golds.emplace(id, string_key(obj, "esco_id", line_no)).second) {
      throw ValidationError("gold line " + std::to_string(line_no) + ": duplicate query_id '" + id + "'");
    }
  });

  std::vector<Query> out;
  std::set<std::string> seen;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    auto obj = parse_line(line, line_no);
    Query q;
    if (obj.contains("query_id")) {
      q.query_id = string_key(obj, "query_id", line_no);
      q.text = string_key(obj, "text", line_no, true);
    } else if (obj.contains("ad_id")) {
      q.query_id = string_key(obj, "ad_id", line_no);
      const auto title = obj.contains("title") ? string_key(obj, "title", line_no, true) : std::string();
      const auto body = string_key(obj, "body", line_no, true);
      q.text = trim(title).empty() ? body : title + "\n\n" + body;
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'query_id' or 'ad_id'");
    }
    if (obj.contains("esco_id")) q.gold = string_key(obj, "esco_id", line_no);
    if (auto it = golds.find(q.query_id); it != golds.end()) q.gold = it->second;
    if (q.gold.empty()) throw ValidationError("line " + std::to_string(line_no) + ": no gold label for '" + q.query_id + "'");
    if (trim(q.text).empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty query text");
    if (!seen.insert(q.query_id).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate query_id '" + q.query_id + "'");
    }
    out.push_back(std::move(q));
  });
  return out;
}

RerankReport run_rerank_eval(const matcher::Index& index, std::span<const Query> queries,
                             const embedding::EmbeddingProvider& provider, const adfilter::Preprocessor& preprocess,
                             std::size_t k) {
  require_k(k);
  const auto info = provider.info();
  if (info.dim != index.dim()) {
    throw ValidationError("embedder dim " + std::to_string(info.dim) + " does not match index dim " +
                          std::to_string(index.dim()));
  }
  RerankReport report;
  report.model = info.model;
  report.filter = preprocess.label();
  report.centroid_kind = index.metadata().centroid_kind;
  report.k = k;

  std::vector<const Query*> active;
  std::vector<std::string> texts;
  for (const auto& q : queries) {
    if (index.find(q.gold) == nullptr) {
      report.skipped.push_back(q.query_id);
      continue;
    }
    try {
      texts.push_back(preprocess.apply(q.text));
    } catch (const Error& e) {
      throw Error(e.kind(), "query '" + q.query_id + "': " + e.what());
    }
    active.push_back(&q);
  }

  std::vector<embedding::Vector> vectors;
  if (!texts.empty()) {
    try {
      vectors = provider.embed(texts);
    } catch (const Error&) {
      // locate the offending query
      for (std::size_t i = 0; i < texts.size(); ++i) {
        try {
          provider.embed_one(texts[i]);
        } catch (const Error& e) {
          throw Error(e.kind(), "embedding query '" + active[i]->query_id + "' failed: " + e.what());
        }
      }
      throw;
    }
  }
  if (vectors.size() != texts.size()) throw ProtocolError("embedder returned a misaligned batch");

  double sum = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto recs = index.recommend(vectors[i], k);
    QueryOutcome outcome{active[i]->query_id, active[i]->gold, 0, 0.0};
    for (const auto& r : recs) {
      if (r.esco_id == active[i]->gold) {
        outcome.rank = r.rank;
        outcome.reciprocal_rank = 1.0 / static_cast<double>(r.rank);
        break;
      }
    }
    sum += outcome.reciprocal_rank;
    report.per_query.push_back(std::move(outcome));
  }
  report.mrr_at_k = report.per_query.empty() ? 0.0 : sum / static_cast<double>(report.per_query.size());
  return report;
}

std::string to_json(const RerankReport& report) { return report_body(report).dump(2) + "\n"; }

FilterComparison run_filter_comparison(const matcher::Index& index, std::span<const Query> queries,
                                       const embedding::EmbeddingProvider& provider,
                                       std::span<const adfilter::Preprocessor> modes, std::size_t k) {
  if (modes.empty()) throw ValidationError("at least one filter mode is required");
  FilterComparison cmp;
  cmp.model = provider.info().model;
  cmp.k = k;
  for (const auto& mode : modes) cmp.columns.push_back(run_rerank_eval(index, queries, provider, mode, k));
  return cmp;
}

std::string to_json(const FilterComparison& comparison) {
  ojson doc;
  doc["metric"] = "mrr";
  doc["k"] = comparison.k;
  doc["model"] = comparison.model;
  ojson columns = ojson::array();
  ojson row;
  row["model"] = comparison.model;
  for (const auto& c : comparison.columns) {
    columns.push_back(c.filter);
    row[c.filter] = c.mrr_at_k;
  }
  doc["columns"] = std::move(columns);
  doc["table"] = ojson::array({row});
  ojson reports = ojson::array();
  for (const auto& c : comparison.columns) reports.push_back(report_body(c));
  doc["reports"] = std::move(reports);
  return doc.dump(2) + "\n";
}

std::string to_csv(const FilterComparison& comparison) {
  std::string out = "model";
  for (const auto& c : comparison.columns) out += "," + csv_cell(c.filter);
  out += "\n" + csv_cell(comparison.model);
  for (const auto& c : comparison.columns) out += "," + fixed3(c.mrr_at_k);
  return out + "\n";
}

EmbeddingComparison run_embedding_comparison(std::span<const NamedSpace> spaces, std::span<const Query> queries,
                                             const embedding::EmbeddingProvider& provider,
                                             const adfilter::Preprocessor& preprocess, std::size_t k) {
  if (spaces.empty()) throw ValidationError("at least one embedding space is required");
  std::vector<NamedSpace> sorted(spaces.begin(), spaces.end());
  std::sort(sorted.begin(), sorted.end(), [](const NamedSpace& a, const NamedSpace& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].name == sorted[i - 1].name) throw ValidationError("duplicate space name '" + sorted[i].name + "'");
  }
  const auto& ref = sorted.front();
  for (const auto& s : sorted) {
    if (s.index == nullptr) throw ValidationError("space '" + s.name + "' has no index");
    bool same = s.index->size() == ref.index->size();
    for (std::size_t i = 0; same && i < s.index->size(); ++i) {
      same = s.index->entries()[i].esco_id == ref.index->entries()[i].esco_id;
    }
    if (!same) {
      throw ValidationError("occupation sets differ between spaces '" + ref.name + "' and '" + s.name + "'");
    }
  }
  EmbeddingComparison cmp;
  cmp.k = k;
  for (const auto& s : sorted) cmp.rows.emplace_back(s.name, run_rerank_eval(*s.index, queries, provider, preprocess, k));
  return cmp;
}

std::string to_json(const EmbeddingComparison& comparison) {
  ojson doc;
  doc["metric"] = "mrr";
  doc["k"] = comparison.k;
  ojson table = ojson::array();
  for (const auto& [name, r] : comparison.rows) {
    table.push_back({{"space", name}, {"centroid_kind", r.centroid_kind}, {"mrr_at_k", r.mrr_at_k},
                     {"query_count", r.per_query.size()}});
  }
  doc["table"] = std::move(table);
  ojson reports = ojson::object();
  for (const auto& [name, r] : comparison.rows) reports[name] = report_body(r);
  doc["reports"] = std::move(reports);
  return doc.dump(2) + "\n";
}

std::string to_csv(const EmbeddingComparison& comparison) {
  std::string out = "space,MRR@" + std::to_string(comparison.k) + "\n";
  for (const auto& [name, r] : comparison.rows) out += csv_cell(name) + "," + fixed3(r.mrr_at_k) + "\n";
  return out;
}

}  // namespace careermatch::evaluation
