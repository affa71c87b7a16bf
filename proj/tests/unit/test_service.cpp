#include <gtest/gtest.h>

#include <httplib.h>

#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "careermatch/service.hpp"
#include "careermatch/text.hpp"
#include "pipeline.hpp"
#include "temp_dir.hpp"

using namespace careermatch;
using namespace careermatch::service;
using nlohmann::json;

namespace {

struct Fixture {
  careermatch::testing::SyntheticCorpus corpus = careermatch::testing::make_synthetic_corpus();
  std::shared_ptr<const embedding::HashEmbedder> provider = std::make_shared<embedding::HashEmbedder>(256, 0);
  careermatch::testing::Spaces spaces = careermatch::testing::build_spaces(corpus, *provider);

  std::shared_ptr<RecommendationService> service(const std::string& log = {}) {
    return std::make_shared<RecommendationService>(
        careermatch::testing::make_snapshot(spaces.descriptions, corpus.occupations), provider,
        adfilter::Preprocessor(adfilter::FilterMode::kTokenCutoff, nullptr), 20, log);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

// HttpServer on an ephemeral port, served from a background thread.
class Running {
 public:
  explicit Running(std::shared_ptr<RecommendationService> svc, std::function<std::shared_ptr<const Snapshot>()> reload = {})
      : server_(std::move(svc), 32, std::move(reload)) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.run(); });
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  HttpServer server_;
  int port_ = 0;
  std::thread thread_;
};

json post(httplib::Client& c, const std::string& path, const json& body, int* status) {
  auto res = c.Post(path, body.dump(), "application/json");
  if (!res) throw std::runtime_error("request failed");
  *status = res->status;
  return json::parse(res->body);
}

json get(httplib::Client& c, const std::string& path, int* status) {
  auto res = c.Get(path);
  if (!res) throw std::runtime_error("request failed");
  *status = res->status;
  return json::parse(res->body);
}

}  // namespace

TEST(Service, RecommendSelfMatchAndDefaultK) {
  auto& f = fixture();
  auto svc = f.service();
  const auto& occ = f.corpus.occupations[7];
  auto r = svc->recommend(occ.description, std::nullopt);
  ASSERT_EQ(r.recommendations.size(), 20u);
  EXPECT_EQ(r.recommendations[0].esco_id, occ.esco_id);
  EXPECT_NEAR(r.recommendations[0].score, 1.0, 1e-12);
  EXPECT_EQ(r.recommendations[0].title, occ.title);
  EXPECT_EQ(r.resume_id, "resume-1");
}

TEST(Service, ValidationErrors) {
  auto svc = fixture().service();
  auto status = [&](auto fn) {
    try {
      fn();
    } catch (const HttpError& e) {
      return e.status();
    }
    return 200;
  };
  EXPECT_EQ(status([&] { svc->recommend("   ", std::nullopt); }), 400);
  EXPECT_EQ(status([&] { svc->recommend("x", 0); }), 400);
  EXPECT_EQ(status([&] { svc->recommend("x", 101); }), 400);
  EXPECT_EQ(status([&] { svc->recommend("x", 5, std::string("resume-99")); }), 404);
  EXPECT_EQ(status([&] { svc->job("nope"); }), 404);
  EXPECT_EQ(status([&] { svc->metrics("resume-1", 20); }), 404);
}

TEST(Service, ProviderDimMismatchRejectedAtStartup) {
  auto& f = fixture();
  EXPECT_THROW(RecommendationService(careermatch::testing::make_snapshot(f.spaces.descriptions, f.corpus.occupations),
                                     std::make_shared<embedding::HashEmbedder>(64),
                                     adfilter::Preprocessor(adfilter::FilterMode::kTokenCutoff, nullptr)),
               ValidationError);
}

TEST(Service, JudgmentsAndMetricsBoundary) {
  auto& f = fixture();
  auto svc = f.service();
  auto r = svc->recommend(f.corpus.occupations[3].description, 20);
  // 10 experts; item 0 gets exactly 5/10 yes (relevant), item 1 gets 4/10 (not)
  for (int e = 0; e < 10; ++e) {
    const std::string ex = "expert-" + std::to_string(e);
    svc->add_judgment({r.resume_id, r.recommendations[0].esco_id, ex, e < 5});
    svc->add_judgment({r.resume_id, r.recommendations[1].esco_id, ex, e < 4});
  }
  auto m = svc->metrics(r.resume_id, 20);
  EXPECT_EQ(m.n_experts, 10u);
  EXPECT_EQ(m.relevant_count, 1u);
  EXPECT_EQ(m.mrr_at_k, 1.0);
  EXPECT_DOUBLE_EQ(m.p_at_k, 1.0 / 20.0);

  // same expert re-judging: later value wins
  for (int e = 5; e < 10; ++e) svc->add_judgment({r.resume_id, r.recommendations[1].esco_id, "expert-" + std::to_string(e), true});
  EXPECT_EQ(svc->metrics(r.resume_id, 20).relevant_count, 2u);

  try {
    svc->add_judgment({r.resume_id, "never-served", "expert-1", true});
    FAIL();
  } catch (const HttpError& e) {
    EXPECT_EQ(e.status(), 422);
  }
  auto fresh = svc->recommend("anything", 20);
  try {
    svc->metrics(fresh.resume_id, 20);
    FAIL();
  } catch (const HttpError& e) {
    EXPECT_EQ(e.status(), 409);
  }
}

TEST(Service, JudgmentLogSurvivesRestart) {
  auto& f = fixture();
  careermatch::testing::TempDir dir;
  const auto log = dir.file("judgments.jsonl");
  std::string resume_id, first_item;
  {
    auto svc = f.service(log);
    auto r = svc->recommend(f.corpus.occupations[1].description, 5);
    resume_id = r.resume_id;
    first_item = r.recommendations[0].esco_id;
    svc->add_judgment({resume_id, first_item, "e1", true});
  }
  // torn final line from a crash mid-append
  {
    FILE* fp = std::fopen(log.c_str(), "a");
    std::fputs("{\"resume_id\":\"resume-1\",\"esc", fp);
    std::fclose(fp);
  }
  auto svc = f.service(log);
  auto js = svc->judgments(resume_id);
  ASSERT_EQ(js.size(), 1u);
  EXPECT_EQ(js[0].esco_id, first_item);
  EXPECT_EQ(svc->metrics(resume_id, 5).mrr_at_k, 1.0);
  // numbering continues after the replayed session
  EXPECT_EQ(svc->recommend("again", 5).resume_id, "resume-2");
}

TEST(Service, ConfigPrecedence) {
  json file = {{"port", 9000}, {"host", "0.0.0.0"}, {"k_default", 10}, {"dim", 128}};
  std::map<std::string, std::string> env = {{"CAREERMATCH_PORT", "9100"}, {"CAREERMATCH_K_DEFAULT", "15"}};
  EnvLookup lookup = [&](const std::string& n) -> std::optional<std::string> {
    auto it = env.find(n);
    return it == env.end() ? std::nullopt : std::optional<std::string>(it->second);
  };
  json flags = {{"port", 9200}};
  auto c = resolve_config(file, lookup, flags);
  EXPECT_EQ(c.port, 9200);
  EXPECT_EQ(c.k_default, 15u);
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.dim, 128u);
  EXPECT_EQ(c.threads, 32u);
  EXPECT_THROW(resolve_config(json{{"port", "x"}}, lookup, json::object()), ValidationError);
  EXPECT_THROW(resolve_config(json{{"filter_mode", "nope"}}, lookup, json::object()), ValidationError);
}

TEST(Http, RoutesAndStatusCodes) {
  auto& f = fixture();
  Running server(f.service());
  auto c = server.client();
  int st = 0;
  auto rec = post(c, "/api/recommend", {{"text", f.corpus.occupations[0].description}}, &st);
  ASSERT_EQ(st, 200) << rec.dump();
  EXPECT_EQ(rec["recommendations"].size(), 20u);
  EXPECT_EQ(rec["recommendations"][0]["esco_id"], f.corpus.occupations[0].esco_id);
  const std::string rid = rec["resume_id"];

  EXPECT_EQ(post(c, "/api/recommend", {{"text", ""}}, &st)["status"], 400);
  EXPECT_EQ(st, 400);
  post(c, "/api/recommend", {{"text", "x"}, {"k", 0}}, &st);
  EXPECT_EQ(st, 400);
  auto res = c.Post("/api/recommend", "not json", "application/json");
  EXPECT_EQ(res->status, 400);

  auto job = get(c, "/api/jobs/" + f.corpus.occupations[4].esco_id, &st);
  EXPECT_EQ(st, 200);
  EXPECT_EQ(job["title"], f.corpus.occupations[4].title);
  get(c, "/api/jobs/unknown", &st);
  EXPECT_EQ(st, 404);

  get(c, "/api/metrics/" + rid, &st);
  EXPECT_EQ(st, 409);
  const std::string item = rec["recommendations"][0]["esco_id"];
  post(c, "/api/judgments", {{"resume_id", rid}, {"esco_id", item}, {"expert_id", "e"}, {"relevant", true}}, &st);
  EXPECT_EQ(st, 200);
  post(c, "/api/judgments", {{"resume_id", "resume-404"}, {"esco_id", item}, {"expert_id", "e"}, {"relevant", true}}, &st);
  EXPECT_EQ(st, 404);
  post(c, "/api/judgments", {{"resume_id", rid}, {"esco_id", "zzz"}, {"expert_id", "e"}, {"relevant", true}}, &st);
  EXPECT_EQ(st, 422);
  post(c, "/api/judgments", {{"resume_id", rid}, {"esco_id", item}, {"expert_id", "e"}}, &st);
  EXPECT_EQ(st, 400);
  auto m = get(c, "/api/metrics/" + rid + "?k=20", &st);
  EXPECT_EQ(st, 200);
  EXPECT_EQ(m["mrr_at_k"], 1.0);
  EXPECT_EQ(m["relevant_count"], 1);
  get(c, "/api/metrics/" + rid + "?k=abc", &st);
  EXPECT_EQ(st, 400);

  auto h = get(c, "/api/health", &st);
  EXPECT_EQ(st, 200);
  EXPECT_EQ(h["index"]["count"], 50);
  EXPECT_EQ(h["provider"]["dim"], 256);
  post(c, "/api/admin/reload", json::object(), &st);
  EXPECT_EQ(st, 501);

  // re-query under the same session
  auto again = post(c, "/api/recommend", {{"text", "edited text"}, {"resume_id", rid}}, &st);
  EXPECT_EQ(st, 200);
  EXPECT_EQ(again["resume_id"], rid);
}

TEST(Http, ConcurrentRequestsMatchLibrary) {
  auto& f = fixture();
  auto svc = f.service();
  Running server(svc);
  constexpr int kInFlight = 48;
  std::vector<std::future<json>> futures;
  for (int i = 0; i < kInFlight; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      auto c = server.client();
      int st = 0;
      auto body = post(c, "/api/recommend", {{"text", f.corpus.noisy_queries[i % 50].text}, {"k", 20}}, &st);
      EXPECT_EQ(st, 200);
      return body;
    }));
  }
  const auto& idx = f.spaces.descriptions;
  std::set<std::string> ids;
  for (int i = 0; i < kInFlight; ++i) {
    auto body = futures[i].get();
    ids.insert(body["resume_id"].get<std::string>());
    auto want = idx.recommend(f.provider->embed_one(f.corpus.noisy_queries[i % 50].text), 20);
    ASSERT_EQ(body["recommendations"].size(), want.size());
    for (std::size_t r = 0; r < want.size(); ++r) {
      EXPECT_EQ(body["recommendations"][r]["esco_id"], want[r].esco_id);
      EXPECT_EQ(body["recommendations"][r]["score"].get<double>(), want[r].score);
    }
  }
  EXPECT_EQ(ids.size(), static_cast<std::size_t>(kInFlight));
}

TEST(Http, ReloadSwapsSnapshot) {
  auto& f = fixture();
  auto svc = f.service();
  auto next = careermatch::testing::make_snapshot(f.spaces.ad_centroids, f.corpus.occupations);
  Running server(svc, [next] { return next; });
  auto c = server.client();
  int st = 0;
  auto body = post(c, "/api/admin/reload", json::object(), &st);
  EXPECT_EQ(st, 200) << body.dump();
  EXPECT_EQ(svc->snapshot()->index.metadata().centroid_kind, "job_centroids");
}
