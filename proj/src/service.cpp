#include "careermatch/service.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <set>

#include "careermatch/text.hpp"

namespace careermatch::service {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
void take(const nlohmann::json& src, const char* key, T& slot, const char* layer) {
  if (!src.is_object() || !src.contains(key) || src[key].is_null()) return;
  try {
    slot = src[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string(layer) + ": setting '" + key + "' has the wrong type");
  }
}

template <typename T>
void take_env(const EnvLookup& env, const char* key, T& slot) {
  std::string name = "CAREERMATCH_";
  for (const char* c = key; *c; ++c) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*c))));
  auto value = env ? env(name) : std::nullopt;
  if (!value) return;
  if constexpr (std::is_same_v<T, std::string>) {
    slot = *value;
  } else {
    try {
      slot = nlohmann::json::parse(*value).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("environment variable " + name + " is not a valid value");
    }
  }
}

template <typename T>
void layer(const nlohmann::json& file, const EnvLookup& env, const nlohmann::json& flags, const char* key, T& slot) {
  take(file, key, slot, "config file");
  take_env(env, key, slot);
  take(flags, key, slot, "flag");
}

HttpError as_http(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kProtocol:
      return HttpError(502, e.kind(), e.what());
    case ErrorKind::kNotFound:
      return HttpError(404, e.kind(), e.what());
    case ErrorKind::kConflict:
      return HttpError(409, e.kind(), e.what());
    default:
      return HttpError(400, e.kind(), e.what());
  }
}

std::size_t session_number(const std::string& id) {
  constexpr std::string_view kPrefix = "resume-";
  if (id.rfind(kPrefix, 0) != 0) return 0;
  try {
    return std::stoul(id.substr(kPrefix.size()));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

ServiceConfig resolve_config(const nlohmann::json& file, const EnvLookup& env, const nlohmann::json& flags) {
  ServiceConfig c;
  layer(file, env, flags, "index", c.index_path);
  layer(file, env, flags, "esco", c.esco_path);
  layer(file, env, flags, "provider", c.provider);
  layer(file, env, flags, "dim", c.dim);
  layer(file, env, flags, "seed", c.seed);
  layer(file, env, flags, "classifier", c.classifier);
  layer(file, env, flags, "cue_config", c.cue_config);
  layer(file, env, flags, "filter_mode", c.filter_mode);
  layer(file, env, flags, "threshold", c.threshold);
  layer(file, env, flags, "budget", c.budget);
  layer(file, env, flags, "k_default", c.k_default);
  layer(file, env, flags, "judgment_log", c.judgment_log);
  layer(file, env, flags, "host", c.host);
  layer(file, env, flags, "port", c.port);
  layer(file, env, flags, "threads", c.threads);
  if (c.k_default == 0) throw ValidationError("k_default must be at least 1");
  if (c.threads == 0) throw ValidationError("threads must be at least 1");
  if (c.port < 0 || c.port > 65535) throw ValidationError("port out of range");
  adfilter::parse_filter_mode(c.filter_mode);
  return c;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  };
}

nlohmann::json to_json(const ServiceConfig& c) {
  return {{"index", c.index_path},       {"esco", c.esco_path},
          {"provider", c.provider},      {"dim", c.dim},
          {"seed", c.seed},              {"classifier", c.classifier},
          {"cue_config", c.cue_config},  {"filter_mode", c.filter_mode},
          {"threshold", c.threshold},    {"budget", c.budget},
          {"k_default", c.k_default},    {"judgment_log", c.judgment_log},
          {"host", c.host},              {"port", c.port},
          {"threads", c.threads}};
}

std::shared_ptr<const Snapshot> load_snapshot(const std::string& index_path, const std::string& esco_path) {
  if (index_path.empty()) throw ValidationError("no index path configured");
  if (esco_path.empty()) throw ValidationError("no taxonomy (esco) path configured");
  auto snap = std::make_shared<Snapshot>(Snapshot{matcher::load_index_file(index_path), {}});
  for (auto& occ : corpus::load_esco(esco_path)) {
    auto id = occ.esco_id;
    snap->occupations.emplace(std::move(id), std::move(occ));
  }
  return snap;
}

RecommendationService::RecommendationService(std::shared_ptr<const Snapshot> snapshot,
                                             std::shared_ptr<const embedding::EmbeddingProvider> provider,
                                             adfilter::Preprocessor preprocess, std::size_t k_default,
                                             std::string judgment_log)
    : provider_(std::move(provider)), preprocess_(std::move(preprocess)), k_default_(k_default),
      judgment_log_(std::move(judgment_log)) {
  if (!snapshot) throw ValidationError("service needs an index snapshot");
  if (!provider_) throw ValidationError("service needs an embedding provider");
  if (k_default_ == 0) throw ValidationError("k_default must be at least 1");
  validate_snapshot(*snapshot);
  snapshot_ = std::move(snapshot);
  if (!judgment_log_.empty()) {
    replay_logs();
    judgment_file_ = std::fopen(judgment_log_.c_str(), "a");
    session_file_ = std::fopen((judgment_log_ + ".sessions").c_str(), "a");
    if (!judgment_file_ || !session_file_) {
      if (judgment_file_) std::fclose(judgment_file_);
      if (session_file_) std::fclose(session_file_);
      throw IoError("cannot open judgment log '" + judgment_log_ + "' for appending");
    }
  }
}

RecommendationService::~RecommendationService() {
  if (judgment_file_) std::fclose(judgment_file_);
  if (session_file_) std::fclose(session_file_);
}

std::unique_ptr<RecommendationService> RecommendationService::from_config(const ServiceConfig& config) {
  auto provider = embedding::make_provider(config.provider, config.dim, config.seed);
  const auto mode = adfilter::parse_filter_mode(config.filter_mode);
  std::shared_ptr<const adfilter::RelevanceFilter> filter;
  if (mode == adfilter::FilterMode::kClassifier) filter = adfilter::make_filter(config.classifier, config.cue_config);
  adfilter::Preprocessor preprocess(mode, filter, config.threshold, config.budget);
  return std::make_unique<RecommendationService>(load_snapshot(config.index_path, config.esco_path),
                                                 std::move(provider), std::move(preprocess), config.k_default,
                                                 config.judgment_log);
}

void RecommendationService::validate_snapshot(const Snapshot& snap) const {
  // probe embed: the provider must live in the index's space
  const auto info = provider_->info();
  if (info.dim != snap.index.dim()) {
    throw ValidationError("provider '" + info.model + "' has dim " + std::to_string(info.dim) +
                          " but the index has dim " + std::to_string(snap.index.dim()));
  }
  for (const auto& e : snap.index.entries()) {
    if (!snap.occupations.count(e.esco_id)) {
      throw ValidationError("index entry '" + e.esco_id + "' is not in the taxonomy");
    }
  }
}

void RecommendationService::swap_snapshot(std::shared_ptr<const Snapshot> snapshot) {
  if (!snapshot) throw ValidationError("cannot publish an empty snapshot");
  validate_snapshot(*snapshot);
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snapshot);
}

std::shared_ptr<const Snapshot> RecommendationService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::shared_ptr<RecommendationService::Session> RecommendationService::find_session(
    const std::string& resume_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(resume_id);
  return it == sessions_.end() ? nullptr : it->second;
}

RecommendResponse RecommendationService::recommend(const std::string& text, std::optional<std::size_t> k,
                                                   const std::optional<std::string>& resume_id) {
  if (trim(text).empty()) throw HttpError(400, ErrorKind::kValidation, "resume text is empty");
  const std::size_t top_k = k.value_or(k_default_);
  if (top_k < 1 || top_k > 100) throw HttpError(400, ErrorKind::kValidation, "k must lie in [1, 100]");
  std::shared_ptr<Session> session;
  if (resume_id) {
    session = find_session(*resume_id);
    if (!session) throw HttpError(404, ErrorKind::kNotFound, "unknown resume_id '" + *resume_id + "'");
  }

  const auto snap = snapshot();
  embedding::Vector query;
  try {
    query = provider_->embed_one(preprocess_.apply(text));
  } catch (const HttpError&) {
    throw;
  } catch (const Error& e) {
    throw as_http(e);
  }
  if (query.dim() != snap->index.dim()) {
    throw HttpError(422, ErrorKind::kValidation,
                    "embedding dim " + std::to_string(query.dim()) + " does not match index dim " +
                        std::to_string(snap->index.dim()));
  }
  const auto recs = snap->index.recommend(query, top_k);

  RecommendResponse response;
  std::vector<std::string> served;
  for (const auto& r : recs) {
    const auto& occ = snap->occupations.at(r.esco_id);
    response.recommendations.push_back({r.esco_id, occ.title, occ.description, r.score, r.rank});
    served.push_back(r.esco_id);
  }

  const std::string now = utc_now();
  if (!session) {
    session = std::make_shared<Session>();
    session->created = now;
    std::unique_lock lock(sessions_mutex_);
    response.resume_id = "resume-" + std::to_string(next_session_++);
    sessions_.emplace(response.resume_id, session);
  } else {
    response.resume_id = *resume_id;
  }
  std::lock_guard lock(session->mutex);
  session->text = text;
  session->served = served;
  session->updated = now;
  if (session_file_) {
    nlohmann::json rec = {{"resume_id", response.resume_id}, {"text", text},        {"items", served},
                          {"created", session->created},     {"updated", now}};
    std::lock_guard log_lock(log_mutex_);
    append_log(session_file_, rec.dump());
  }
  return response;
}

corpus::EscoOccupation RecommendationService::job(const std::string& esco_id) const {
  const auto snap = snapshot();
  auto it = snap->occupations.find(esco_id);
  if (it == snap->occupations.end()) throw HttpError(404, ErrorKind::kNotFound, "unknown esco_id '" + esco_id + "'");
  return it->second;
}

void RecommendationService::add_judgment(const evaluation::Judgment& j) {
  if (j.resume_id.empty() || j.esco_id.empty() || j.expert_id.empty()) {
    throw HttpError(400, ErrorKind::kValidation, "resume_id, esco_id and expert_id must be non-empty");
  }
  auto session = find_session(j.resume_id);
  if (!session) throw HttpError(404, ErrorKind::kNotFound, "unknown resume_id '" + j.resume_id + "'");
  std::lock_guard lock(session->mutex);
  if (std::find(session->served.begin(), session->served.end(), j.esco_id) == session->served.end()) {
    throw HttpError(422, ErrorKind::kValidation,
                    "esco_id '" + j.esco_id + "' was not served to resume '" + j.resume_id + "'");
  }
  if (judgment_file_) {
    std::lock_guard log_lock(log_mutex_);
    append_log(judgment_file_, evaluation::serialize_judgment(j));
  }
  session->judgments.push_back(j);
}

std::vector<evaluation::Judgment> RecommendationService::judgments(const std::string& resume_id) const {
  auto session = find_session(resume_id);
  if (!session) throw HttpError(404, ErrorKind::kNotFound, "unknown resume_id '" + resume_id + "'");
  std::lock_guard lock(session->mutex);
  return session->judgments;
}

evaluation::JudgedMetrics RecommendationService::metrics(const std::string& resume_id, std::size_t k) const {
  auto session = find_session(resume_id);
  if (!session) throw HttpError(404, ErrorKind::kNotFound, "unknown resume_id '" + resume_id + "'");
  evaluation::RankedList ranked;
  std::vector<evaluation::Judgment> judgments;
  {
    std::lock_guard lock(session->mutex);
    ranked = {resume_id, session->served};
    judgments = session->judgments;
  }
  if (judgments.empty()) throw HttpError(409, ErrorKind::kConflict, "no judgments recorded for '" + resume_id + "'");
  try {
    return evaluation::judged_metrics(ranked, judgments, k);
  } catch (const ValidationError& e) {
    throw HttpError(422, ErrorKind::kValidation, e.what());
  }
}

nlohmann::json RecommendationService::health() const {
  const auto snap = snapshot();
  const auto info = provider_->info();
  const auto& meta = snap->index.metadata();
  return {{"status", "ok"},
          {"index",
           {{"format_version", matcher::kFormatVersion},
            {"dim", snap->index.dim()},
            {"count", snap->index.size()},
            {"metric", "cosine"},
            {"metadata",
             {{"model", meta.model}, {"centroid_kind", meta.centroid_kind}, {"build_timestamp", meta.build_timestamp}}}}},
          {"provider", {{"model", info.model}, {"dim", info.dim}}},
          {"filter", preprocess_.label()},
          {"k_default", k_default_}};
}

void RecommendationService::append_log(FILE* file, const std::string& line) {
  if (std::fputs(line.c_str(), file) < 0 || std::fputc('\n', file) == EOF || std::fflush(file) != 0 ||
      ::fsync(::fileno(file)) != 0) {
    throw HttpError(500, ErrorKind::kIo, "append to judgment log failed");
  }
}

void RecommendationService::replay_logs() {
  const std::string session_path = judgment_log_ + ".sessions";
  auto read_if_exists = [](const std::string& path) -> std::string {
    FILE* f = std::fopen(path.c_str(), "r");
    if (!f) return {};
    std::fclose(f);
    return read_file(path);
  };
  for_each_line(read_if_exists(session_path), [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      // a torn final line from a crash mid-append is dropped
      return;
    }
    try {
      auto id = rec.at("resume_id").get<std::string>();
      auto& session = sessions_[id];
      if (!session) session = std::make_shared<Session>();
      session->text = rec.at("text").get<std::string>();
      session->served = rec.at("items").get<std::vector<std::string>>();
      session->created = rec.value("created", "");
      session->updated = rec.value("updated", "");
      next_session_ = std::max(next_session_, session_number(id) + 1);
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(session_path + ": line " + std::to_string(line_no) + ": malformed session record");
    }
  });
  std::string log = read_if_exists(judgment_log_);
  // drop a torn tail line
  if (!log.empty() && log.back() != '\n') log.erase(log.rfind('\n') == std::string::npos ? 0 : log.rfind('\n') + 1);
  for (auto& j : evaluation::parse_judgments(log)) {
    auto it = sessions_.find(j.resume_id);
    if (it != sessions_.end()) it->second->judgments.push_back(std::move(j));
  }
}

}  // namespace careermatch::service
