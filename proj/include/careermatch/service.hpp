#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "careermatch/adfilter.hpp"
#include "careermatch/corpus.hpp"
#include "careermatch/embedding.hpp"
#include "careermatch/error.hpp"
#include "careermatch/evaluation.hpp"
#include "careermatch/matcher.hpp"

namespace httplib {
class Server;
}

namespace careermatch::service {

struct ServiceConfig {
  std::string index_path;
  std::string esco_path;
  std::string provider = "builtin-hash";  // or http://host:port
  std::size_t dim = 256;                  // builtin-hash only
  std::uint64_t seed = 0;                 // builtin-hash only
  std::string classifier = "baseline";    // or http://host:port
  std::string cue_config;                 // empty = built-in lexicon
  std::string filter_mode = "token-cutoff";
  double threshold = adfilter::kDefaultThreshold;
  std::size_t budget = adfilter::kDefaultTokenBudget;
  std::size_t k_default = 20;
  std::string judgment_log;  // empty = in-memory only
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 32;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Layers settings: built-in defaults < config file < environment
/// (CAREERMATCH_<KEY>) < flags. `file` and `flags` use the keys index, esco,
/// provider, dim, seed, classifier, cue_config, filter_mode, threshold,
/// budget, k_default, judgment_log, host, port, threads.
ServiceConfig resolve_config(const nlohmann::json& file, const EnvLookup& env, const nlohmann::json& flags);
EnvLookup process_env();
nlohmann::json to_json(const ServiceConfig& config);

/// Error carrying the HTTP status it should be answered with.
class HttpError : public Error {
 public:
  HttpError(int status, ErrorKind kind, const std::string& what) : Error(kind, what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct ServedItem {
  std::string esco_id;
  std::string title;
  std::string description;
  double score = 0.0;
  std::size_t rank = 0;
};

struct RecommendResponse {
  std::string resume_id;
  std::vector<ServedItem> recommendations;
};

/// Index plus the taxonomy it was built over; immutable once published.
struct Snapshot {
  matcher::Index index;
  std::map<std::string, corpus::EscoOccupation, std::less<>> occupations;
};

std::shared_ptr<const Snapshot> load_snapshot(const std::string& index_path, const std::string& esco_path);

/// Resume sessions, durable judgments and metrics over an index snapshot.
/// All public members are safe to call concurrently.
class RecommendationService {
 public:
  RecommendationService(std::shared_ptr<const Snapshot> snapshot,
                        std::shared_ptr<const embedding::EmbeddingProvider> provider,
                        adfilter::Preprocessor preprocess, std::size_t k_default = 20,
                        std::string judgment_log = {});
  ~RecommendationService();

  static std::unique_ptr<RecommendationService> from_config(const ServiceConfig& config);

  RecommendResponse recommend(const std::string& text, std::optional<std::size_t> k,
                              const std::optional<std::string>& resume_id = std::nullopt);
  corpus::EscoOccupation job(const std::string& esco_id) const;
  void add_judgment(const evaluation::Judgment& judgment);
  evaluation::JudgedMetrics metrics(const std::string& resume_id, std::size_t k) const;
  nlohmann::json health() const;

  /// Publishes a new snapshot; requests already running keep the old one.
  void swap_snapshot(std::shared_ptr<const Snapshot> snapshot);
  std::shared_ptr<const Snapshot> snapshot() const;
  std::size_t k_default() const noexcept { return k_default_; }

  /// Judgments recorded so far for a resume, in arrival order.
  std::vector<evaluation::Judgment> judgments(const std::string& resume_id) const;

 private:
  struct Session {
    mutable std::mutex mutex;
    std::string text;
    std::vector<std::string> served;
    std::vector<evaluation::Judgment> judgments;
    std::string created;
    std::string updated;
  };

  void validate_snapshot(const Snapshot& snap) const;
  std::shared_ptr<Session> find_session(const std::string& resume_id) const;
  void append_log(FILE* file, const std::string& line);
  void replay_logs();

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::shared_ptr<const embedding::EmbeddingProvider> provider_;
  adfilter::Preprocessor preprocess_;
  std::size_t k_default_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_session_ = 1;

  std::mutex log_mutex_;
  std::string judgment_log_;
  FILE* judgment_file_ = nullptr;
  FILE* session_file_ = nullptr;
};

/// JSON-over-HTTP front end for RecommendationService.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<RecommendationService> service, std::size_t threads = 32,
             std::function<std::shared_ptr<const Snapshot>()> reload = {});
  ~HttpServer();

  /// Binds and returns the port (pass 0 for an ephemeral one).
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires bind().
  void run();
  void stop();

 private:
  void install_routes();

  std::shared_ptr<RecommendationService> service_;
  std::function<std::shared_ptr<const Snapshot>()> reload_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace careermatch::service
