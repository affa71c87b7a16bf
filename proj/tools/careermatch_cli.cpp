// careermatch command-line front end. Talks to the library only through the C API.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "careermatch/careermatch.h"

namespace {

using nlohmann::json;

// Status -> process exit code: 2 for environment trouble, 1 for bad input.
int exit_code(cm_status s) {
  switch (s) {
    case CM_OK:
      return 0;
    case CM_ERR_IO:
    case CM_ERR_PROTOCOL:
    case CM_ERR_INTERNAL:
      return 2;
    default:
      return 1;
  }
}

struct Failure {
  cm_status status;
  std::string message;
};

void check(cm_status s) {
  if (s != CM_OK) throw Failure{s, cm_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(ptr, o.ptr);
    return *this;
  }
  ~Handle() {
    if (ptr) Free(ptr);
  }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Occupations = Handle<cm_occupations, cm_occupations_free>;
using Ads = Handle<cm_ads, cm_ads_free>;
using Filter = Handle<cm_filter, cm_filter_free>;
using Embedder = Handle<cm_embedder, cm_embedder_free>;
using Store = Handle<cm_store, cm_store_free>;
using Index = Handle<cm_index, cm_index_free>;

// Owned char* from the library.
struct Text {
  char* ptr = nullptr;
  ~Text() { cm_string_free(ptr); }
  char** out() { return &ptr; }
  std::string str() const { return ptr ? ptr : ""; }
};

void emit(const Text& t) { std::cout << t.str() << std::flush; }

void note(const std::string& msg) { std::cerr << msg << "\n"; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{CM_ERR_IO, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct EmbedOpts {
  std::string provider = "builtin-hash";
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;

  void add(CLI::App* app) {
    app->add_option("--provider", provider, "builtin-hash or http://host:port")->capture_default_str();
    app->add_option("--dim", dim, "Dimension of the builtin hash embedder")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Seed of the builtin hash embedder")->capture_default_str();
    app->add_option("--batch-size", batch_size, "Texts per /embed request")->capture_default_str()->check(CLI::PositiveNumber);
  }
  Embedder make() const {
    Embedder e;
    json cfg = {{"provider", provider}, {"dim", dim}, {"seed", seed}, {"batch_size", batch_size}};
    check(cm_embedder_create(cfg.dump().c_str(), e.out()));
    return e;
  }
};

struct FilterOpts {
  std::string classifier = "baseline";
  std::string cue_config;
  double threshold = 0.5;
  std::size_t budget = 512;

  void add(CLI::App* app) {
    app->add_option("--classifier", classifier, "baseline or http://host:port")->capture_default_str();
    app->add_option("--cue-config", cue_config, "Cue lexicon JSON for the baseline classifier");
    app->add_option("--threshold", threshold, "Paragraph relevance threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app->add_option("--budget", budget, "Token budget for truncation")->capture_default_str()->check(CLI::PositiveNumber);
  }
  Filter make(const std::string& mode) const {
    Filter f;
    json cfg = {{"mode", mode},
                {"classifier", classifier},
                {"cue_config", cue_config},
                {"threshold", threshold},
                {"budget", budget}};
    check(cm_filter_create(cfg.dump().c_str(), f.out()));
    return f;
  }
};

cm_server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) cm_server_stop(g_server);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"careermatch: match resumes to occupations via ad-informed centroids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cm_version()));

  std::function<void()> action;

  // ingest-esco
  std::string esco_csv;
  auto* ingest_esco = app.add_subcommand("ingest-esco", "Validate a taxonomy CSV and print statistics");
  ingest_esco->add_option("csv", esco_csv, "Taxonomy CSV")->required();
  ingest_esco->callback([&] {
    action = [&] {
      Occupations occ;
      check(cm_occupations_load(esco_csv.c_str(), occ.out()));
      Text out;
      check(cm_corpus_stats(occ.get(), nullptr, out.out()));
      emit(out);
      note(std::to_string(cm_occupations_count(occ.get())) + " occupations");
    };
  });

  // ingest-ads
  std::string ads_path, ads_esco;
  auto* ingest_ads = app.add_subcommand("ingest-ads", "Validate a job-ad JSONL file and print statistics");
  ingest_ads->add_option("jsonl", ads_path, "Job ads JSONL")->required();
  ingest_ads->add_option("--esco", ads_esco, "Taxonomy CSV for coverage statistics");
  ingest_ads->callback([&] {
    action = [&] {
      Ads ads;
      check(cm_ads_load(ads_path.c_str(), ads.out()));
      Occupations occ;
      if (!ads_esco.empty()) check(cm_occupations_load(ads_esco.c_str(), occ.out()));
      Text out;
      check(cm_corpus_stats(occ.get(), ads.get(), out.out()));
      emit(out);
      note(std::to_string(cm_ads_count(ads.get())) + " ads");
    };
  });

  // export-pairs
  std::string pairs_esco, pairs_out;
  auto* export_pairs = app.add_subcommand("export-pairs", "Write (anchor, positive) training pairs");
  export_pairs->add_option("csv", pairs_esco, "Taxonomy CSV")->required();
  export_pairs->add_option("-o,--output", pairs_out, "Output JSONL")->required();
  export_pairs->callback([&] {
    action = [&] {
      Occupations occ;
      check(cm_occupations_load(pairs_esco.c_str(), occ.out()));
      Text out;
      check(cm_occupations_export_pairs(occ.get(), pairs_out.c_str(), out.out()));
      emit(out);
    };
  });

  // filter-ads
  std::string fa_ads, fa_out, fa_labels, fa_mode = "classifier";
  FilterOpts fa_filter;
  auto* filter_ads = app.add_subcommand("filter-ads", "Reduce ad bodies to relevant paragraphs, or score a labelled set");
  filter_ads->add_option("--ads", fa_ads, "Job ads JSONL");
  filter_ads->add_option("-o,--output", fa_out, "Output ads JSONL");
  filter_ads->add_option("--labels", fa_labels, "Labelled paragraphs JSONL to evaluate the classifier on");
  filter_ads->add_option("--mode", fa_mode, "token-cutoff | classifier | classifier-baseline")->capture_default_str();
  fa_filter.add(filter_ads);
  filter_ads->callback([&] {
    action = [&] {
      Filter f = fa_filter.make(fa_mode);
      Text out;
      if (!fa_labels.empty()) {
        check(cm_filter_evaluate(f.get(), fa_labels.c_str(), out.out()));
      } else {
        if (fa_ads.empty() || fa_out.empty()) throw Failure{CM_ERR_INVALID_ARGUMENT, "filter-ads needs --ads and -o, or --labels"};
        Ads ads;
        check(cm_ads_load(fa_ads.c_str(), ads.out()));
        check(cm_filter_ads(f.get(), ads.get(), fa_out.c_str(), out.out()));
      }
      emit(out);
    };
  });

  // embed
  std::string em_ads, em_esco, em_text, em_out, em_mode;
  EmbedOpts em_embed;
  FilterOpts em_filter;
  auto* embed = app.add_subcommand("embed", "Embed ads, occupation descriptions or a single text");
  auto* em_src = embed->add_option_group("source");
  em_src->add_option("--ads", em_ads, "Job ads JSONL");
  em_src->add_option("--esco", em_esco, "Taxonomy CSV (embeds descriptions)");
  em_src->add_option("--text", em_text, "Single text; the vector is printed as JSON");
  em_src->require_option(1);
  embed->add_option("-o,--output", em_out, "Output embeddings JSONL");
  embed->add_option("--filter-mode", em_mode, "Preprocess ads with token-cutoff | classifier");
  em_embed.add(embed);
  em_filter.add(embed);
  embed->callback([&] {
    action = [&] {
      Embedder e = em_embed.make();
      if (!em_text.empty()) {
        std::size_t dim = 0;
        check(cm_embedder_embed(e.get(), em_text.c_str(), nullptr, 0, &dim));
        std::vector<double> v(dim);
        check(cm_embedder_embed(e.get(), em_text.c_str(), v.data(), v.size(), &dim));
        std::cout << json{{"dim", dim}, {"vector", v}}.dump() << "\n";
        return;
      }
      if (em_out.empty()) throw Failure{CM_ERR_INVALID_ARGUMENT, "embed needs -o with --ads or --esco"};
      Text out;
      if (!em_ads.empty()) {
        Ads ads;
        check(cm_ads_load(em_ads.c_str(), ads.out()));
        Filter f;
        if (!em_mode.empty()) f = em_filter.make(em_mode);
        check(cm_embed_ads(e.get(), ads.get(), f.get(), em_out.c_str(), out.out()));
      } else {
        Occupations occ;
        check(cm_occupations_load(em_esco.c_str(), occ.out()));
        check(cm_embed_descriptions(e.get(), occ.get(), em_out.c_str(), out.out()));
      }
      emit(out);
    };
  });

  // ad-centroids
  std::string ac_ads, ac_emb, ac_out, ac_meta;
  bool ac_no_norm = false;
  auto* ad_centroids = app.add_subcommand("ad-centroids", "Average ad embeddings per occupation");
  ad_centroids->add_option("--ads", ac_ads, "Job ads JSONL (for gold occupation ids)")->required();
  ad_centroids->add_option("--embeddings", ac_emb, "Ad embeddings JSONL")->required();
  ad_centroids->add_option("-o,--output", ac_out, "Output centroids JSONL")->required();
  ad_centroids->add_option("--meta", ac_meta, "Metadata sidecar (default: <output>.meta.json)");
  ad_centroids->add_flag("--no-normalize-members", ac_no_norm, "Average raw member vectors");
  ad_centroids->callback([&] {
    action = [&] {
      Ads ads;
      check(cm_ads_load(ac_ads.c_str(), ads.out()));
      Store store;
      check(cm_store_load(ac_emb.c_str(), store.out()));
      const std::string meta = ac_meta.empty() ? ac_out + ".meta.json" : ac_meta;
      Text out;
      check(cm_ad_centroids(store.get(), ads.get(), ac_no_norm ? 0 : 1, ac_out.c_str(), meta.c_str(), out.out()));
      emit(out);
    };
  });

  // job-centroids
  std::string jc_esco, jc_desc, jc_ads, jc_ads_meta, jc_out, jc_meta;
  auto* job_centroids = app.add_subcommand("job-centroids", "Combine ad centroids with description embeddings");
  job_centroids->add_option("--esco", jc_esco, "Taxonomy CSV")->required();
  job_centroids->add_option("--descriptions", jc_desc, "Description embeddings JSONL")->required();
  job_centroids->add_option("--ad-centroids", jc_ads, "Ad centroids JSONL (omit for description-only)");
  job_centroids->add_option("--ad-meta", jc_ads_meta, "Ad centroid metadata (default: <ad-centroids>.meta.json if present)");
  job_centroids->add_option("-o,--output", jc_out, "Output centroids JSONL")->required();
  job_centroids->add_option("--meta", jc_meta, "Metadata sidecar (default: <output>.meta.json)");
  job_centroids->callback([&] {
    action = [&] {
      Occupations occ;
      check(cm_occupations_load(jc_esco.c_str(), occ.out()));
      Store desc;
      check(cm_store_load(jc_desc.c_str(), desc.out()));
      Store ads;
      std::string ads_meta = jc_ads_meta;
      if (!jc_ads.empty()) {
        check(cm_store_load(jc_ads.c_str(), ads.out()));
        if (ads_meta.empty() && std::ifstream(jc_ads + ".meta.json")) ads_meta = jc_ads + ".meta.json";
      }
      const std::string meta = jc_meta.empty() ? jc_out + ".meta.json" : jc_meta;
      Text out;
      check(cm_job_centroids(ads.get(), ads_meta.empty() ? nullptr : ads_meta.c_str(), desc.get(), occ.get(),
                             jc_out.c_str(), meta.c_str(), out.out()));
      emit(out);
    };
  });

  // build-index
  std::string bi_in, bi_out, bi_model = "builtin-hash-256-seed0", bi_kind = "job_centroids",
                             bi_ts = "1970-01-01T00:00:00Z";
  auto* build_index = app.add_subcommand("build-index", "Freeze a centroid file into an index snapshot");
  build_index->add_option("--centroids", bi_in, "Centroids JSONL")->required();
  build_index->add_option("-o,--output", bi_out, "Index snapshot (.cbidx.json)")->required();
  build_index->add_option("--model", bi_model, "Embedding model label")->capture_default_str();
  build_index->add_option("--kind", bi_kind, "Centroid kind label")->capture_default_str();
  build_index->add_option("--timestamp", bi_ts, "Build timestamp recorded in the header")->capture_default_str();
  build_index->callback([&] {
    action = [&] {
      Store store;
      check(cm_store_load(bi_in.c_str(), store.out()));
      Index idx;
      json meta = {{"model", bi_model}, {"centroid_kind", bi_kind}, {"build_timestamp", bi_ts}};
      check(cm_index_build(store.get(), meta.dump().c_str(), idx.out()));
      check(cm_index_save(idx.get(), bi_out.c_str()));
      std::cout << json{{"entries", cm_index_count(idx.get())}, {"dim", cm_index_dim(idx.get())}, {"output", bi_out}}
                       .dump(2)
                << "\n";
    };
  });

  // recommend
  std::string rc_index, rc_text, rc_text_file, rc_esco, rc_mode = "token-cutoff";
  std::size_t rc_k = 20;
  EmbedOpts rc_embed;
  FilterOpts rc_filter;
  auto* recommend = app.add_subcommand("recommend", "Top-k occupations for a resume");
  recommend->add_option("--index", rc_index, "Index snapshot")->required();
  auto* rc_src = recommend->add_option_group("resume");
  rc_src->add_option("--text", rc_text, "Resume text");
  rc_src->add_option("--text-file", rc_text_file, "Resume text file");
  rc_src->require_option(1);
  recommend->add_option("--k", rc_k, "Number of recommendations")->capture_default_str()->check(CLI::PositiveNumber);
  recommend->add_option("--esco", rc_esco, "Taxonomy CSV to attach titles");
  recommend->add_option("--filter-mode", rc_mode, "Resume preprocessing: token-cutoff | classifier")->capture_default_str();
  rc_embed.add(recommend);
  rc_filter.add(recommend);
  recommend->callback([&] {
    action = [&] {
      Index idx;
      check(cm_index_load(rc_index.c_str(), idx.out()));
      Embedder e = rc_embed.make();
      Filter f = rc_filter.make(rc_mode);
      Occupations occ;
      if (!rc_esco.empty()) check(cm_occupations_load(rc_esco.c_str(), occ.out()));
      const std::string text = rc_text_file.empty() ? rc_text : slurp(rc_text_file);
      Text out;
      check(cm_recommend_text(idx.get(), e.get(), f.get(), occ.get(), text.c_str(), rc_k, out.out()));
      emit(out);
    };
  });

  // eval-rerank
  std::string er_index, er_queries, er_gold;
  std::vector<std::string> er_modes;
  std::size_t er_k = 100;
  bool er_csv = false;
  EmbedOpts er_embed;
  FilterOpts er_filter;
  auto* eval_rerank = app.add_subcommand("eval-rerank", "MRR@k of gold occupations over held-out queries");
  eval_rerank->add_option("--index", er_index, "Index snapshot")->required();
  eval_rerank->add_option("--queries", er_queries, "Queries JSONL ({query_id,text[,esco_id]} or ads)")->required();
  eval_rerank->add_option("--gold", er_gold, "Gold JSONL {query_id, esco_id}");
  eval_rerank->add_option("--k", er_k, "Cut-off")->capture_default_str()->check(CLI::PositiveNumber);
  eval_rerank->add_option("--filter-mode", er_modes, "Repeat to compare modes (token-cutoff, classifier-baseline, ...)");
  eval_rerank->add_flag("--csv", er_csv, "CSV table instead of JSON");
  er_embed.add(eval_rerank);
  er_filter.add(eval_rerank);
  eval_rerank->callback([&] {
    action = [&] {
      Index idx;
      check(cm_index_load(er_index.c_str(), idx.out()));
      Embedder e = er_embed.make();
      if (er_modes.empty()) er_modes.push_back("token-cutoff");
      std::vector<Filter> filters;
      std::vector<const cm_filter*> raw;
      for (const auto& m : er_modes) {
        filters.push_back(er_filter.make(m));
        raw.push_back(filters.back().get());
      }
      Text out;
      check(cm_eval_rerank(idx.get(), e.get(), raw.data(), raw.size(), er_queries.c_str(),
                           er_gold.empty() ? nullptr : er_gold.c_str(), er_k, er_csv ? 1 : 0, out.out()));
      emit(out);
    };
  });

  // eval-compare
  std::vector<std::string> ec_spaces;
  std::string ec_queries, ec_gold, ec_mode = "token-cutoff";
  std::size_t ec_k = 100;
  bool ec_csv = false;
  EmbedOpts ec_embed;
  FilterOpts ec_filter;
  auto* eval_compare = app.add_subcommand("eval-compare", "MRR@k across several embedding spaces");
  eval_compare->add_option("--space", ec_spaces, "name=index.cbidx.json (repeatable)")->required();
  eval_compare->add_option("--queries", ec_queries, "Queries JSONL")->required();
  eval_compare->add_option("--gold", ec_gold, "Gold JSONL");
  eval_compare->add_option("--k", ec_k, "Cut-off")->capture_default_str()->check(CLI::PositiveNumber);
  eval_compare->add_option("--filter-mode", ec_mode, "Query preprocessing")->capture_default_str();
  eval_compare->add_flag("--csv", ec_csv, "CSV table instead of JSON");
  ec_embed.add(eval_compare);
  ec_filter.add(eval_compare);
  eval_compare->callback([&] {
    action = [&] {
      std::vector<Index> indexes;
      std::vector<std::string> names;
      for (const auto& s : ec_spaces) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
          throw Failure{CM_ERR_INVALID_ARGUMENT, "--space expects name=path, got '" + s + "'"};
        }
        names.push_back(s.substr(0, eq));
        Index idx;
        check(cm_index_load(s.substr(eq + 1).c_str(), idx.out()));
        indexes.push_back(std::move(idx));
      }
      std::vector<const cm_index*> raw;
      std::vector<const char*> raw_names;
      for (std::size_t i = 0; i < indexes.size(); ++i) {
        raw.push_back(indexes[i].get());
        raw_names.push_back(names[i].c_str());
      }
      Embedder e = ec_embed.make();
      Filter f = ec_filter.make(ec_mode);
      Text out;
      check(cm_eval_compare(raw.data(), raw_names.data(), raw.size(), e.get(), f.get(), ec_queries.c_str(),
                            ec_gold.empty() ? nullptr : ec_gold.c_str(), ec_k, ec_csv ? 1 : 0, out.out()));
      emit(out);
    };
  });

  // eval-judgments
  std::string ej_judgments, ej_rankings;
  std::size_t ej_k = 20;
  bool ej_csv = false;
  auto* eval_judgments = app.add_subcommand("eval-judgments", "MAP@k / P@k / MRR@k from expert judgments");
  eval_judgments->add_option("--judgments", ej_judgments, "Judgments JSONL")->required();
  eval_judgments->add_option("--rankings", ej_rankings, "Rankings JSONL {resume_id, items:[...]}")->required();
  eval_judgments->add_option("--k", ej_k, "Cut-off")->capture_default_str()->check(CLI::PositiveNumber);
  eval_judgments->add_flag("--csv", ej_csv, "CSV table instead of JSON");
  eval_judgments->callback([&] {
    action = [&] {
      Text out;
      check(cm_eval_judgments(ej_judgments.c_str(), ej_rankings.c_str(), ej_k, ej_csv ? 1 : 0, out.out()));
      emit(out);
    };
  });

  // serve
  std::string sv_config;
  std::map<std::string, std::string> sv_str;
  std::map<std::string, double> sv_num;
  bool sv_print = false;
  auto* serve = app.add_subcommand("serve", "Run the HTTP recommendation service");
  serve->add_option("--config", sv_config, "Config JSON file");
  for (const char* key : {"index", "esco", "provider", "classifier", "cue_config", "filter_mode", "judgment_log", "host"}) {
    std::string flag = std::string("--") + key;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    serve->add_option_function<std::string>(flag, [&sv_str, key](const std::string& v) { sv_str[key] = v; });
  }
  for (const char* key : {"dim", "seed", "threshold", "budget", "k_default", "port", "threads"}) {
    std::string flag = std::string("--") + key;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    serve->add_option_function<double>(flag, [&sv_num, key](double v) { sv_num[key] = v; });
  }
  serve->add_flag("--print-config", sv_print, "Print the resolved configuration and exit");
  serve->callback([&] {
    action = [&] {
      json flags = json::object();
      for (const auto& [k, v] : sv_str) flags[k] = v;
      for (const auto& [k, v] : sv_num) {
        if (k == "threshold") flags[k] = v;
        else if (v < 0 || v != static_cast<double>(static_cast<long long>(v))) throw Failure{CM_ERR_INVALID_ARGUMENT, "--" + k + " must be a non-negative integer"};
        else flags[k] = static_cast<long long>(v);
      }
      Text resolved;
      check(cm_service_config_resolve(sv_config.empty() ? nullptr : sv_config.c_str(), flags.dump().c_str(),
                                      resolved.out()));
      if (sv_print) {
        emit(resolved);
        return;
      }
      cm_server* server = nullptr;
      check(cm_server_create(resolved.ptr, &server));
      std::unique_ptr<cm_server, void (*)(cm_server*)> guard(server, cm_server_free);
      int port = 0;
      check(cm_server_bind(server, &port));
      g_server = server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto cfg = json::parse(resolved.str());
      std::cout << json{{"listening", cfg.value("host", std::string()) + ":" + std::to_string(port)}, {"port", port}}.dump()
                << std::endl;
      const auto s = cm_server_run(server);
      g_server = nullptr;
      check(s);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (action) action();
  } catch (const Failure& f) {
    std::cerr << "error [" << cm_status_name(f.status) << "]: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
