// Acceptance run: one PASS/FAIL line per criterion, with runtime against its budget.
// Usage: careermatch_acceptance [path/to/careermatch-cli]
#include <httplib.h>

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "careermatch/centroid.hpp"
#include "careermatch/corpus.hpp"
#include "careermatch/error.hpp"
#include "careermatch/evaluation.hpp"
#include "careermatch/matcher.hpp"
#include "careermatch/service.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "run_cli.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace careermatch;
namespace oracle = careermatch::testing::oracle;
using nlohmann::json;

namespace {

std::string g_cli = CAREERMATCH_CLI_PATH;

// Collects failed checks; a criterion passes when none failed.
struct Checks {
  std::vector<std::string> failures;
  std::ostringstream notes;
  int count = 0;

  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok && failures.size() < 10) failures.push_back(what);
    if (!ok && failures.size() == 10) failures.push_back("...");
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<void(Checks&)> run;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> values(const embedding::Vector& v) { return {v.values().begin(), v.values().end()}; }

double max_diff(const embedding::Vector& a, const std::vector<double>& b) {
  if (a.dim() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

void metric_examples(Checks& c) {
  std::vector<std::string> ranked;
  for (int i = 1; i <= 20; ++i) ranked.push_back("j" + std::to_string(i));
  c.expect(evaluation::reciprocal_rank(ranked, "j5", 100) == 0.2, "RR at rank 5 == 0.2");
  c.expect(evaluation::reciprocal_rank(ranked, "j20", 100) == 0.05, "RR at rank 20 == 0.05");
  evaluation::RelevantSet rel;
  for (int i = 1; i <= 20; ++i) {
    if (i % 5 != 0) rel.insert("j" + std::to_string(i));  // 16 of 20
  }
  c.expect(evaluation::precision_at_k(ranked, rel, 20) == 0.8, "P@20 == 0.8 for 16 of 20");
  c.notes << "RR(5)=" << evaluation::reciprocal_rank(ranked, "j5", 100)
          << " RR(20)=" << evaluation::reciprocal_rank(ranked, "j20", 100)
          << " P@20=" << evaluation::precision_at_k(ranked, rel, 20);
}

void oracle_equivalence(Checks& c) {
  constexpr std::size_t kKs[] = {1, 5, 20, 100};
  std::mt19937_64 rng(20240601);
  double worst = 0;
  std::size_t p_checked = 0, p_short = 0;
  auto track = [&](double got, double want, const std::string& what) {
    worst = std::max(worst, std::abs(got - want));
    c.near(got, want, 1e-12, what);
  };
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t k = kKs[rng() % 4];
    const std::size_t universe = 1 + rng() % 200;
    std::vector<std::string> all;
    for (std::size_t i = 0; i < universe; ++i) all.push_back("o" + std::to_string(i));

    // ranking metrics over a handful of lists
    const std::size_t nq = 1 + rng() % 5;
    std::vector<evaluation::RankedList> lists;
    std::vector<std::vector<std::string>> raw;
    std::map<std::string, std::string> golds;
    std::vector<std::string> gold_vec;
    std::map<std::string, evaluation::RelevantSet> rel;
    std::vector<std::set<std::string>> rel_vec;
    for (std::size_t q = 0; q < nq; ++q) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<std::string> l(all.begin(), all.begin() + std::min<std::size_t>(universe, rng() % 51));
      const std::string qid = "q" + std::to_string(q);
      const std::string gold = "o" + std::to_string(rng() % universe);
      std::set<std::string> r;
      const auto density = 1 + rng() % 5;
      for (std::size_t i = 0; i < universe; ++i) {
        if (rng() % density == 0) r.insert("o" + std::to_string(i));
      }
      lists.push_back({qid, l});
      raw.push_back(l);
      golds[qid] = gold;
      gold_vec.push_back(gold);
      rel[qid] = evaluation::RelevantSet(r.begin(), r.end());
      rel_vec.push_back(r);
      if (l.size() >= k) {
        ++p_checked;
        track(evaluation::precision_at_k(l, rel[qid], k), oracle::precision(l, r, k), "P@K");
        track(evaluation::average_precision_at_k(l, rel[qid], k), oracle::average_precision(l, r, k), "AP@K");
      } else {
        // lists shorter than K are rejected rather than padded
        ++p_short;
        bool threw = false;
        try {
          (void)evaluation::precision_at_k(l, rel[qid], k);
        } catch (const ValidationError&) {
          threw = true;
        }
        c.expect(threw, "P@K on a short list is rejected");
      }
    }
    track(evaluation::mrr_at_k(lists, golds, k), oracle::mrr(raw, gold_vec, k), "MRR@K");
    if (std::all_of(raw.begin(), raw.end(), [&](const auto& l) { return l.size() >= k; })) {
      track(evaluation::map_at_k(lists, rel, k), oracle::mean_average_precision(raw, rel_vec, k), "MAP@K");
    }

    // majority relevance
    const std::size_t n = 1 + rng() % 15;
    std::vector<evaluation::Judgment> votes;
    std::vector<bool> bools;
    for (std::size_t e = 0; e < n; ++e) {
      const bool v = rng() % 2;
      votes.push_back({"r", "o", "e" + std::to_string(e), v});
      bools.push_back(v);
    }
    c.expect(evaluation::majority_relevance(votes) == oracle::majority(bools), "majority_relevance");

    // recommend(top-k) on a random corpus
    const std::size_t size = 1 + rng() % 200;
    const std::size_t dim = 4 + rng() % 29;
    std::normal_distribution<double> gauss;
    std::vector<matcher::IndexEntry> entries;
    for (std::size_t i = 0; i < size; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = gauss(rng);
      entries.push_back({"e" + std::to_string(i), embedding::Vector(v)});
    }
    const auto index = matcher::Index::build(entries, {"m", "k", "t"});
    std::vector<std::pair<std::string, std::vector<double>>> brute;
    for (const auto& e : index.entries()) brute.emplace_back(e.esco_id, values(e.vector));
    std::vector<double> q(dim);
    for (auto& x : q) x = gauss(rng);
    const auto got = index.recommend(embedding::Vector(q), k);
    const auto want = oracle::top_k(brute, q, k);
    c.expect(got.size() == want.size(), "top-k length");
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
      track(got[i].score, want[i].second, "top-k score");
      c.expect(got[i].esco_id == want[i].first, "top-k id at rank " + std::to_string(i + 1));
      c.expect(got[i].rank == i + 1, "top-k rank field");
    }
  }
  c.notes << "1000 instances, max |diff| = " << worst << ", P/AP compared on " << p_checked
          << " lists, short-list rejection on " << p_short;
}

void centroid_invariants(Checks& c) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  constexpr std::size_t kOccs = 50, kAds = 200, kDim = 64;
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<corpus::EscoOccupation> occs;
    std::map<std::string, embedding::Vector> desc;
    for (std::size_t i = 0; i < kOccs; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "occ-%03zu", i);
      occs.push_back({id, "Title " + std::to_string(i), "desc", {}, {}});
      std::vector<double> v(kDim);
      for (auto& x : v) x = gauss(rng);
      desc[id] = embedding::Vector(v);
    }
    // ads land on the first 40 occupations only; occ-000 gets exactly one
    std::vector<centroid::GroupedEmbedding> members;
    std::map<std::string, std::vector<std::vector<double>>> by_occ;
    for (std::size_t a = 0; a < kAds; ++a) {
      const std::size_t o = a == 0 ? 0 : 1 + rng() % 39;
      std::vector<double> v(kDim);
      for (auto& x : v) x = gauss(rng) * (1 + rng() % 4);
      members.push_back({occs[o].esco_id, embedding::Vector(v)});
      by_occ[occs[o].esco_id].push_back(v);
    }
    const auto ads = centroid::compute_ad_centroids(members);

    auto shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto ads_perm = centroid::compute_ad_centroids(shuffled);
    c.expect(ads.size() == ads_perm.size(), "permuted centroid count");
    for (const auto& [id, a] : ads) {
      const double d = max_diff(a.vector, values(ads_perm.at(id).vector));
      worst = std::max(worst, d);
      c.expect(d <= 1e-12, "permutation invariance for " + id);
      const double od = max_diff(a.vector, oracle::normalized_mean(by_occ[id]));
      worst = std::max(worst, od);
      c.expect(od <= 1e-12, "oracle mean for " + id);
      c.expect(a.n_ads == by_occ[id].size(), "member count for " + id);
    }
    const auto& single = ads.at("occ-000");
    c.expect(max_diff(single.vector, values(embedding::l2_normalize(members[0].vector))) <= 1e-12,
             "single-member identity");

    // hybrid symmetry: description equal to the ad centroid gives that vector back
    auto sym_desc = desc;
    sym_desc["occ-005"] = ads.at("occ-005").vector;
    const auto jobs = centroid::compute_job_centroids(ads, sym_desc, occs);
    c.expect(max_diff(jobs.at("occ-005").vector, values(ads.at("occ-005").vector)) <= 1e-12, "hybrid symmetry");

    c.expect(jobs.size() == kOccs, "one job centroid per occupation");
    std::size_t hybrid = 0, desc_only = 0;
    for (const auto& [id, j] : jobs) {
      const bool has_ads = ads.contains(id);
      if (j.source == centroid::CentroidSource::kHybrid) ++hybrid;
      else ++desc_only;
      c.expect(has_ads == (j.source == centroid::CentroidSource::kHybrid), "source label for " + id);
      c.near(embedding::norm(j.vector), 1.0, 1e-12, "unit norm " + id);
    }
    c.expect(hybrid == ads.size(), "hybrid count");
    c.expect(desc_only == kOccs - ads.size(), "description_only count");
    const auto meta = json::parse(centroid::job_centroid_metadata(jobs, ads));
    c.notes.str("");
    c.notes << "5 trials of " << kOccs << " occupations / " << kAds << " ads; hybrid=" << hybrid
            << " description_only=" << desc_only << ", max |diff| = " << worst;
    (void)meta;
  }
}

// Shared CLI-built artifacts for the two harness criteria.
struct CliWorkspace {
  careermatch::testing::TempDir dir{"cm-accept"};
  careermatch::testing::SyntheticCorpus corpus = careermatch::testing::make_synthetic_corpus();
  bool built = false;
  std::string log;

  bool step(const std::vector<std::string>& args) {
    auto r = careermatch::testing::run_cli(g_cli, args);
    if (r.exit_code != 0) log += args.front() + " exited " + std::to_string(r.exit_code) + ": " + r.err;
    return r.exit_code == 0;
  }

  void build() {
    if (built) return;
    built = true;
    careermatch::testing::write_corpus(corpus, dir.path().string());
    const auto f = [&](const char* n) { return dir.file(n); };
    step({"embed", "--esco", f("esco.csv"), "--dim", "256", "--seed", "0", "-o", f("desc.jsonl")}) &&
        step({"embed", "--ads", f("ads.jsonl"), "--dim", "256", "--seed", "0", "-o", f("ads_emb.jsonl")}) &&
        step({"ad-centroids", "--ads", f("ads.jsonl"), "--embeddings", f("ads_emb.jsonl"), "-o", f("adc.jsonl")}) &&
        step({"job-centroids", "--esco", f("esco.csv"), "--descriptions", f("desc.jsonl"), "-o",
              f("desc_only.jsonl")}) &&
        step({"job-centroids", "--esco", f("esco.csv"), "--descriptions", f("desc.jsonl"), "--ad-centroids",
              f("adc.jsonl"), "-o", f("hybrid.jsonl")}) &&
        step({"build-index", "--centroids", f("desc_only.jsonl"), "--kind", "descriptions", "-o",
              f("desc.cbidx.json")}) &&
        step({"build-index", "--centroids", f("hybrid.jsonl"), "--kind", "job_centroids", "-o",
              f("hybrid.cbidx.json")});
  }

  std::optional<json> rerank(const std::string& index, const std::string& queries) {
    auto r = careermatch::testing::run_cli(
        g_cli, {"eval-rerank", "--index", dir.file(index), "--queries", dir.file(queries), "--k", "100"});
    if (r.exit_code != 0) {
      log += "eval-rerank exited " + std::to_string(r.exit_code) + ": " + r.err;
      return std::nullopt;
    }
    return json::parse(r.out);
  }
};

CliWorkspace& workspace() {
  static CliWorkspace w;
  return w;
}

void planted_end_to_end(Checks& c) {
  auto& w = workspace();
  w.build();
  c.expect(w.log.empty(), "pipeline ran: " + w.log);
  const auto exact = w.rerank("desc.cbidx.json", "queries_desc.jsonl");
  const auto noisy_desc = w.rerank("desc.cbidx.json", "queries_noisy.jsonl");
  const auto noisy_hybrid = w.rerank("hybrid.cbidx.json", "queries_noisy.jsonl");
  c.expect(exact && noisy_desc && noisy_hybrid, "eval-rerank ran: " + w.log);
  if (!exact || !noisy_desc || !noisy_hybrid) return;
  const double mrr_exact = (*exact)["aggregate"]["mrr_at_k"].get<double>();
  const double mrr_desc = (*noisy_desc)["aggregate"]["mrr_at_k"].get<double>();
  const double mrr_hybrid = (*noisy_hybrid)["aggregate"]["mrr_at_k"].get<double>();
  c.expect((*exact)["per_query"].size() == 50, "50 description queries scored");
  c.expect(mrr_exact == 1.0, "description-text queries give MRR@100 == 1.000");
  c.expect(mrr_hybrid >= mrr_desc, "noisy queries: ad-centroid MRR >= description-only MRR");
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "MRR@100 description queries = %.3f; noisy queries: ad-centroid space %.3f vs description-only %.3f",
                mrr_exact, mrr_hybrid, mrr_desc);
  c.notes << buf;
}

void filter_table(Checks& c) {
  auto& w = workspace();
  w.build();
  c.expect(w.log.empty(), "pipeline ran: " + w.log);
  const std::vector<std::string> args = {"eval-rerank",   "--index",       w.dir.file("hybrid.cbidx.json"),
                                         "--queries",     w.dir.file("queries_ads.jsonl"),
                                         "--k",           "100",
                                         "--filter-mode", "token-cutoff",
                                         "--filter-mode", "classifier-baseline",
                                         "--csv"};
  const auto a = careermatch::testing::run_cli(g_cli, args);
  const auto b = careermatch::testing::run_cli(g_cli, args);
  c.expect(a.exit_code == 0 && b.exit_code == 0, "eval-rerank exit 0: " + a.err);
  c.expect(a.out == b.out, "identical output across reruns");
  std::vector<std::string> lines;
  std::stringstream ss(a.out);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  c.expect(lines.size() == 2, "header plus one row");
  if (lines.size() != 2) return;
  c.expect(lines[0] == "model,token-cutoff,classifier(baseline)", "header columns");
  std::vector<std::string> cells;
  std::stringstream row(lines[1]);
  for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
  c.expect(cells.size() == 3, "three cells");
  for (std::size_t i = 1; i < cells.size(); ++i) {
    c.expect(!cells[i].empty() && cells[i].find_first_not_of("0123456789.") == std::string::npos,
             "numeric cell " + cells[i]);
  }
  c.notes << lines[0] << " | " << lines[1];
}

void training_pairs(Checks& c) {
  std::mt19937_64 rng(4242);
  std::size_t total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<corpus::EscoOccupation> occs;
    std::size_t skills = 0, synonyms = 0, descs = 0;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      corpus::EscoOccupation o{"o" + std::to_string(i), "T" + std::to_string(i),
                               rng() % 3 ? "some description " + std::to_string(i) : "", {}, {}};
      for (std::size_t s = 0, m = rng() % 10; s < m; ++s) o.skills.push_back("skill " + std::to_string(s));
      for (std::size_t s = 0, m = rng() % 5; s < m; ++s) o.synonyms.push_back("alt " + std::to_string(s));
      skills += o.skills.size();
      synonyms += o.synonyms.size();
      descs += o.description.empty() ? 0 : 1;
      occs.push_back(std::move(o));
    }
    const auto pairs = corpus::export_training_pairs(occs);
    total += pairs.size();
    c.expect(pairs.size() == skills + synonyms + descs, "pair total");
    std::map<corpus::PairKind, std::size_t> by_kind;
    for (const auto& p : pairs) ++by_kind[p.kind];
    c.expect(by_kind[corpus::PairKind::kSkill] == skills, "skill pairs");
    c.expect(by_kind[corpus::PairKind::kSynonym] == synonyms, "synonym pairs");
    c.expect(by_kind[corpus::PairKind::kDescription] == descs, "description pairs");
    c.expect(by_kind.size() <= 3, "three pair kinds");
  }
  c.notes << "200 random taxonomies, " << total << " pairs counted";
}

void serialization(Checks& c) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  careermatch::testing::TempDir dir("cm-ser");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 100, dim = 1 + rng() % 64;
    embedding::EmbeddingStore store;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = gauss(rng) * std::pow(10.0, static_cast<int>(rng() % 7) - 3);
      if (i == 0) v[0] = -0.0;
      store.add("id-" + std::to_string(rng()) + "-" + std::to_string(i), embedding::Vector(v));
    }
    const auto text = embedding::write_embeddings(store);
    const auto back = embedding::read_embeddings(text);
    c.expect(back == store, "embedding round-trip is exact");
    c.expect(embedding::write_embeddings(back) == text, "embedding save-load-save is byte-identical");

    const auto index = matcher::build_index(store, {"builtin-hash-64-seed0", "job_centroids", "2024-01-01T00:00:00Z"});
    const auto path = dir.file("i" + std::to_string(trial) + ".cbidx.json");
    matcher::save_index_file(index, path);
    const auto first = slurp(path);
    const auto loaded = matcher::load_index_file(path);
    c.expect(loaded == index, "index round-trip is exact");
    matcher::save_index_file(loaded, path);
    c.expect(slurp(path) == first, "index save-load-save is byte-identical");
  }

  embedding::EmbeddingStore small;
  small.add("a", embedding::Vector({1, 0, 0}));
  small.add("b", embedding::Vector({0, 0.6, 0.8}));
  const auto good = matcher::save_index(matcher::build_index(small, {"m", "job_centroids", "t"}));
  auto rejected = [&](const std::string& bytes, const std::string& needle, const std::string& what) {
    try {
      (void)matcher::load_index(bytes);
      c.expect(false, what + " was accepted");
    } catch (const ValidationError& e) {
      c.expect(std::string(e.what()).find(needle) != std::string::npos,
               what + " diagnostic mentions '" + needle + "': " + e.what());
    }
  };
  auto replace = [](std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
    return s;
  };
  rejected(replace(good, "\"format_version\":1", "\"format_version\":2"), "format_version", "version mismatch");
  rejected(good.substr(0, good.size() / 2), "parse error", "truncated file");
  const auto ck = good.find("fnv1a64:") + 8;
  std::string bad_ck = good;
  bad_ck[ck] = bad_ck[ck] == '0' ? '1' : '0';
  rejected(bad_ck, "checksum", "checksum tamper");
  rejected(replace(good, "[0,0.6,0.8]", "[0,0.8,0.6]"), "checksum", "swapped components");
  rejected(replace(good, "[0,0.6,0.8]", "[0,0.6,0.9]"), "unit norm", "non-unit vector");
  c.notes << "20 random stores and indexes round-tripped; 5 corruptions rejected";
}

void service_equivalence(Checks& c) {
  const auto corpus = careermatch::testing::make_synthetic_corpus();
  auto provider = std::make_shared<embedding::HashEmbedder>(256, 0);
  const auto spaces = careermatch::testing::build_spaces(corpus, *provider);
  const adfilter::Preprocessor preprocess(adfilter::FilterMode::kTokenCutoff, nullptr);
  auto svc = std::make_shared<service::RecommendationService>(
      careermatch::testing::make_snapshot(spaces.ad_centroids, corpus.occupations), provider, preprocess, 20);
  service::HttpServer server(svc, 32);
  const int port = server.bind("127.0.0.1", 0);
  std::thread serving([&] { server.run(); });

  constexpr int kInFlight = 48;
  std::barrier start(kInFlight);
  std::vector<std::future<std::pair<int, json>>> futures;
  for (int i = 0; i < kInFlight; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      httplib::Client cl("127.0.0.1", port);
      cl.set_read_timeout(60, 0);
      const json body = {{"text", corpus.noisy_queries[i % corpus.noisy_queries.size()].text}, {"k", 20}};
      start.arrive_and_wait();
      auto res = cl.Post("/api/recommend", body.dump(), "application/json");
      if (!res) return std::pair<int, json>{-1, json()};
      return std::pair<int, json>{res->status, json::parse(res->body)};
    }));
  }
  std::set<std::string> sessions;
  int identical = 0;
  for (int i = 0; i < kInFlight; ++i) {
    const auto [status, body] = futures[i].get();
    c.expect(status == 200, "concurrent request " + std::to_string(i) + " status");
    if (status != 200) continue;
    sessions.insert(body["resume_id"].get<std::string>());
    const auto& text = corpus.noisy_queries[i % corpus.noisy_queries.size()].text;
    const auto want = spaces.ad_centroids.recommend(provider->embed_one(preprocess.apply(text)), 20);
    bool same = body["recommendations"].size() == want.size();
    for (std::size_t r = 0; same && r < want.size(); ++r) {
      const auto& got = body["recommendations"][r];
      same = got["esco_id"] == want[r].esco_id && got["score"].get<double>() == want[r].score &&
             got["rank"].get<std::size_t>() == want[r].rank;
    }
    identical += same ? 1 : 0;
    c.expect(same, "response " + std::to_string(i) + " equals the library ranking");
  }
  c.expect(sessions.size() == static_cast<std::size_t>(kInFlight), "distinct resume ids");

  // scripted judgments: 10 experts, one item split 5/10
  httplib::Client cl("127.0.0.1", port);
  auto res = cl.Post("/api/recommend", json{{"text", corpus.ad_queries[3].text}, {"k", 20}}.dump(), "application/json");
  c.expect(res && res->status == 200, "recommend for judged resume");
  if (res && res->status == 200) {
    const auto body = json::parse(res->body);
    const std::string rid = body["resume_id"];
    evaluation::RankedList served{rid, {}};
    for (const auto& r : body["recommendations"]) served.items.push_back(r["esco_id"]);
    std::vector<evaluation::Judgment> script;
    std::mt19937_64 rng(10);
    for (std::size_t item = 0; item < served.items.size(); ++item) {
      for (int e = 0; e < 10; ++e) {
        bool vote = item == 2 ? e < 5 : item == 0 ? e < 4 : rng() % 3 == 0;  // third item 5/10, first 4/10
        script.push_back({rid, served.items[item], "expert-" + std::to_string(e), vote});
      }
    }
    // one expert flips a vote; last write wins
    script.push_back({rid, served.items[1], "expert-0", !script[10].relevant});
    for (const auto& j : script) {
      json jb = {{"resume_id", j.resume_id}, {"esco_id", j.esco_id}, {"expert_id", j.expert_id}, {"relevant", j.relevant}};
      auto r = cl.Post("/api/judgments", jb.dump(), "application/json");
      c.expect(r && r->status == 200, "judgment stored");
    }
    auto m = cl.Get("/api/metrics/" + rid + "?k=20");
    c.expect(m && m->status == 200, "metrics status");
    if (m && m->status == 200) {
      const auto got = json::parse(m->body);
      const auto want = evaluation::judged_metrics(served, script, 20);
      c.expect(got["map_at_k"].get<double>() == want.map_at_k, "MAP@20 equals evaluation module");
      c.expect(got["p_at_k"].get<double>() == want.p_at_k, "P@20 equals evaluation module");
      c.expect(got["mrr_at_k"].get<double>() == want.mrr_at_k, "MRR@20 equals evaluation module");
      c.expect(got["n_experts"].get<std::size_t>() == 10, "10 experts");
      const auto sets = evaluation::majority_relevant_sets(script);
      c.expect(sets.at(rid).contains(served.items[2]), "5/10 split counts as relevant");
      c.expect(!sets.at(rid).contains(served.items[0]), "4/10 split is not relevant");
      c.notes << kInFlight << " concurrent requests, " << identical << " identical to library; metrics MAP@20="
              << got["map_at_k"].get<double>() << " P@20=" << got["p_at_k"].get<double>()
              << " MRR@20=" << got["mrr_at_k"].get<double>();
    }
  }
  server.stop();
  serving.join();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  const std::vector<Criterion> criteria = {
      {"metric worked examples", 1.0, metric_examples},
      {"oracle equivalence", 30.0, oracle_equivalence},
      {"centroid invariants", 10.0, centroid_invariants},
      {"planted end-to-end", 60.0, planted_end_to_end},
      {"filter comparison table", 60.0, filter_table},
      {"training-pair counting", 10.0, training_pairs},
      {"serialization", 30.0, serialization},
      {"service equivalence", 60.0, service_equivalence},
  };
  int failed = 0;
  for (const auto& crit : criteria) {
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      crit.run(checks);
    } catch (const std::exception& e) {
      checks.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < crit.budget_seconds;
    const bool pass = checks.failures.empty() && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s  %-26s %8.3fs (limit %.0fs)  %d checks  %s\n", pass ? "PASS" : "FAIL", crit.name.c_str(), secs,
                crit.budget_seconds, checks.count, checks.notes.str().c_str());
    if (!in_time) std::printf("      over time budget\n");
    for (const auto& f : checks.failures) std::printf("      - %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
