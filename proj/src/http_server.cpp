#include <httplib.h>

#include "careermatch/service.hpp"

namespace careermatch::service {

namespace {

using nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}, {"status", status}});
}

int status_for(const Error& e) {
  if (auto* h = dynamic_cast<const HttpError*>(&e)) return h->status();
  switch (e.kind()) {
    case ErrorKind::kProtocol:
      return 502;
    case ErrorKind::kNotFound:
      return 404;
    case ErrorKind::kConflict:
      return 409;
    case ErrorKind::kIo:
      return 500;
    case ErrorKind::kValidation:
      return 400;
  }
  return 500;
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    reply_error(res, status_for(e), e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError(400, ErrorKind::kValidation, std::string("request body is not JSON: ") + e.what());
  }
  if (!body.is_object()) throw HttpError(400, ErrorKind::kValidation, "request body must be a JSON object");
  return body;
}

std::string required_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw HttpError(400, ErrorKind::kValidation, std::string("missing string field '") + key + "'");
  }
  return body[key].get<std::string>();
}

json occupation_json(const corpus::EscoOccupation& occ) {
  return {{"esco_id", occ.esco_id},
          {"title", occ.title},
          {"description", occ.description},
          {"skills", occ.skills},
          {"synonyms", occ.synonyms}};
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<RecommendationService> service, std::size_t threads,
                       std::function<std::shared_ptr<const Snapshot>()> reload)
    : service_(std::move(service)), reload_(std::move(reload)), server_(std::make_unique<httplib::Server>()) {
  const std::size_t n = std::max<std::size_t>(1, threads);
  server_->new_task_queue = [n] { return new httplib::ThreadPool(n); };
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto svc = service_;

  server_->Post("/api/recommend", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      const auto text = required_string(body, "text");
      std::optional<std::size_t> k;
      if (body.contains("k") && !body["k"].is_null()) {
        if (!body["k"].is_number_integer()) throw HttpError(400, ErrorKind::kValidation, "k must be an integer");
        const auto raw = body["k"].get<long long>();
        if (raw < 1 || raw > 100) throw HttpError(400, ErrorKind::kValidation, "k must lie in [1, 100]");
        k = static_cast<std::size_t>(raw);
      }
      std::optional<std::string> resume_id;
      if (body.contains("resume_id") && !body["resume_id"].is_null()) resume_id = required_string(body, "resume_id");
      const auto out = svc->recommend(text, k, resume_id);
      json recs = json::array();
      for (const auto& r : out.recommendations) {
        recs.push_back({{"esco_id", r.esco_id},
                        {"title", r.title},
                        {"description", r.description},
                        {"score", r.score},
                        {"rank", r.rank}});
      }
      reply(res, 200, json{{"resume_id", out.resume_id}, {"recommendations", std::move(recs)}});
    });
  });

  server_->Get(R"(/api/jobs/(.+))", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, occupation_json(svc->job(req.matches[1].str()))); });
  });

  server_->Post("/api/judgments", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      evaluation::Judgment j;
      j.resume_id = required_string(body, "resume_id");
      j.esco_id = required_string(body, "esco_id");
      j.expert_id = required_string(body, "expert_id");
      if (!body.contains("relevant") || !body["relevant"].is_boolean()) {
        throw HttpError(400, ErrorKind::kValidation, "field 'relevant' must be a boolean");
      }
      j.relevant = body["relevant"].get<bool>();
      svc->add_judgment(j);
      reply(res, 200, json{{"status", "stored"}, {"resume_id", j.resume_id}, {"esco_id", j.esco_id},
                           {"expert_id", j.expert_id}, {"relevant", j.relevant}});
    });
  });

  server_->Get(R"(/api/metrics/(.+))", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::size_t k = svc->k_default();
      if (req.has_param("k")) {
        try {
          const long long raw = std::stoll(req.get_param_value("k"));
          if (raw < 1) throw std::invalid_argument("k");
          k = static_cast<std::size_t>(raw);
        } catch (const std::exception&) {
          throw HttpError(400, ErrorKind::kValidation, "k must be a positive integer");
        }
      }
      const auto m = svc->metrics(req.matches[1].str(), k);
      reply(res, 200, json{{"resume_id", m.resume_id},
                           {"k", k},
                           {"map_at_k", m.map_at_k},
                           {"p_at_k", m.p_at_k},
                           {"mrr_at_k", m.mrr_at_k},
                           {"n_experts", m.n_experts},
                           {"relevant_count", m.relevant_count}});
    });
  });

  server_->Get("/api/health", [svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, svc->health()); });
  });

  auto reload = reload_;
  server_->Post("/api/admin/reload", [svc, reload](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      if (!reload) throw HttpError(501, ErrorKind::kValidation, "reload is not configured");
      svc->swap_snapshot(reload());
      reply(res, 200, json{{"status", "reloaded"}, {"index", svc->health()["index"]}});
    });
  });
}

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() {
  if (!server_->listen_after_bind()) throw IoError("HTTP server stopped with an error");
}

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace careermatch::service
