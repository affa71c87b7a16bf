#include "careermatch/adfilter.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"
#include "careermatch/text.hpp"
#include "http_client.hpp"

namespace careermatch::adfilter {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::size_t WhitespaceTokenCounter::count(std::string_view text) const { return count_words(text); }

std::string WhitespaceTokenCounter::truncate(std::string_view text, std::size_t budget) const {
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (words == budget) break;
    while (i < text.size() && !is_space(text[i])) ++i;
    ++words;
  }
  return std::string(trim(text.substr(0, i)));
}

const TokenCounter& default_token_counter() {
  static const WhitespaceTokenCounter counter;
  return counter;
}

std::vector<Paragraph> segment_paragraphs(std::string_view body, std::string_view ad_id) {
  if (trim(body).empty()) throw ValidationError("cannot segment an empty body");
  std::vector<Paragraph> out;
  std::string current;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) out.push_back({std::string(ad_id), out.size(), std::string(t), std::nullopt});
    current.clear();
  };
  for_each_line(body, [&](std::string_view line, std::size_t) {
    if (trim(line).empty()) {
      flush();
    } else {
      if (!current.empty()) current.push_back('\n');
      current.append(line);
    }
  });
  flush();
  return out;
}

std::string join_paragraphs(std::span<const Paragraph> paragraphs) {
  std::string out;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += kParagraphSeparator;
    out += p.text;
  }
  return out;
}

std::string truncate_at_token_limit(std::span<const Paragraph> paragraphs, std::size_t budget,
                                    const TokenCounter& counter) {
  if (budget == 0) throw ValidationError("token budget must be positive");
  std::string kept;
  for (const auto& p : paragraphs) {
    std::string candidate = kept.empty() ? p.text : kept + std::string(kParagraphSeparator) + p.text;
    if (counter.count(candidate) > budget) {
      if (kept.empty()) kept = counter.truncate(p.text, budget);
      break;
    }
    kept = std::move(candidate);
  }
  return kept;
}

CueConfig default_cue_config() {
  CueConfig config;
  config.cues = {"aufgaben",        "aufgabengebiet",  "tätigkeiten",  "verantwortung", "zuständig",
                 "anforderungen",   "voraussetzungen", "qualifikation", "qualifikationen", "ausbildung",
                 "studium",         "berufserfahrung", "erfahrung",    "kenntnisse",    "fähigkeiten",
                 "profil",          "führerschein",    "sie bringen mit", "wir erwarten", "responsibilities",
                 "duties",          "tasks",           "requirements", "qualifications", "experience",
                 "skills",          "degree",          "knowledge",    "proficiency",   "responsible",
                 "you will",        "must have"};
  return config;
}

CueConfig parse_cue_config(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("cue config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("cue config must be a JSON object");
  CueConfig config;
  if (doc.contains("cues")) {
    if (!doc["cues"].is_array()) throw ValidationError("cue config 'cues' must be an array of strings");
    for (const auto& c : doc["cues"]) {
      if (!c.is_string()) throw ValidationError("cue config 'cues' must be an array of strings");
      if (!tokenize(c.get<std::string>()).empty()) config.cues.push_back(c.get<std::string>());
    }
  }
  if (doc.contains("weights")) {
    const auto& w = doc["weights"];
    if (!w.is_object()) throw ValidationError("cue config 'weights' must be an object");
    auto read = [&](const char* key, double& slot) {
      if (!w.contains(key)) return;
      if (!w[key].is_number()) throw ValidationError(std::string("cue weight '") + key + "' must be a number");
      slot = w[key].get<double>();
      if (!std::isfinite(slot)) throw ValidationError(std::string("cue weight '") + key + "' must be finite");
    };
    read("cue", config.weights.cue);
    read("position", config.weights.position);
    read("length", config.weights.length);
    read("bias", config.weights.bias);
  }
  return config;
}

CueConfig load_cue_config(const std::string& path) {
  try {
    return parse_cue_config(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::size_t count_cue_hits(const CueConfig& config, std::string_view text) {
  const auto tokens = tokenize(text);
  std::size_t hits = 0;
  for (const auto& cue : config.cues) {
    const auto cue_tokens = tokenize(cue);
    if (cue_tokens.empty() || cue_tokens.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + cue_tokens.size() <= tokens.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; match && j < cue_tokens.size(); ++j) match = tokens[i + j] == cue_tokens[j];
      if (match) ++hits;
    }
  }
  return hits;
}

double baseline_score(const Paragraph& paragraph, const CueConfig& config) {
  const auto& w = config.weights;
  const double hits = static_cast<double>(count_cue_hits(config, paragraph.text));
  const double position = 1.0 / (1.0 + static_cast<double>(paragraph.index));
  const double length = std::log1p(static_cast<double>(count_words(paragraph.text)));
  return logistic(w.bias + w.cue * hits + w.position * position + w.length * length);
}

BaselineFilter::BaselineFilter(CueConfig config) : config_(std::move(config)) {}

std::vector<double> BaselineFilter::score(std::span<const Paragraph> paragraphs) const {
  std::vector<double> out;
  out.reserve(paragraphs.size());
  for (const auto& p : paragraphs) out.push_back(baseline_score(p, config_));
  return out;
}

std::vector<double> decode_classify_response(std::string_view body, std::size_t expected_count) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("classify response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
    throw ProtocolError("classify response lacks a 'scores' array");
  }
  if (!doc.contains("labels") || !doc["labels"].is_array()) {
    throw ProtocolError("classify response lacks a 'labels' array");
  }
  const auto& scores = doc["scores"];
  const auto& labels = doc["labels"];
  if (scores.size() != expected_count || labels.size() != expected_count) {
    throw ProtocolError("classify response count mismatch: sent " + std::to_string(expected_count) +
                        " paragraphs, got " + std::to_string(scores.size()) + " scores / " +
                        std::to_string(labels.size()) + " labels");
  }
  std::vector<double> out;
  out.reserve(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    if (!scores[i].is_number()) throw ProtocolError("classify score " + std::to_string(i) + " is not a number");
    const double s = scores[i].get<double>();
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ProtocolError("classify score " + std::to_string(i) + " outside [0,1]");
    }
    if (!labels[i].is_number_integer() || (labels[i].get<long long>() != 0 && labels[i].get<long long>() != 1)) {
      throw ProtocolError("classify label " + std::to_string(i) + " is not 0 or 1");
    }
    out.push_back(s);
  }
  return out;
}

RemoteClassifier::RemoteClassifier(std::string endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

std::vector<double> RemoteClassifier::score(std::span<const Paragraph> paragraphs) const {
  if (paragraphs.empty()) return {};
  nlohmann::json req = {{"paragraphs", nlohmann::json::array()}};
  for (const auto& p : paragraphs) req["paragraphs"].push_back(p.text);
  const auto body = detail::post_json(endpoint_, "/classify", req.dump(), timeout_seconds_);
  try {
    return decode_classify_response(body, paragraphs.size());
  } catch (const ProtocolError& e) {
    throw ProtocolError(endpoint_ + "/classify: " + e.what());
  }
}

FilterResult filter_relevant(std::span<const Paragraph> paragraphs, const RelevanceFilter& filter, double threshold,
                             std::size_t budget, const TokenCounter& counter) {
  const auto scores = filter.score(paragraphs);
  if (scores.size() != paragraphs.size()) {
    throw ProtocolError("relevance filter returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(paragraphs.size()) + " paragraphs");
  }
  FilterResult result;
  result.verdicts.reserve(scores.size());
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    const bool keep = scores[i] >= threshold;
    result.verdicts.push_back({keep, scores[i]});
    if (keep) {
      if (!result.text.empty()) result.text += kParagraphSeparator;
      result.text += paragraphs[i].text;
    }
  }
  if (result.text.empty()) {
    result.text = truncate_at_token_limit(paragraphs, budget, counter);
    result.fell_back = true;
  }
  return result;
}

ClassifierReport evaluate_filter(std::span<const bool> verdicts, std::span<const bool> labels) {
  if (verdicts.size() != labels.size()) {
    throw ValidationError("evaluate_filter: " + std::to_string(verdicts.size()) + " predictions vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (verdicts.empty()) throw ValidationError("evaluate_filter: no items");
  ClassifierReport r;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i] && labels[i]) ++r.tp;
    else if (verdicts[i] && !labels[i]) ++r.fp;
    else if (!verdicts[i] && labels[i]) ++r.fn;
    else ++r.tn;
  }
  const auto n = static_cast<double>(verdicts.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::string_view to_string(FilterMode mode) {
  return mode == FilterMode::kTokenCutoff ? "token-cutoff" : "classifier";
}

FilterMode parse_filter_mode(std::string_view name) {
  if (name == "token-cutoff") return FilterMode::kTokenCutoff;
  if (name == "classifier" || name == "classifier-baseline") return FilterMode::kClassifier;
  throw ValidationError("unknown filter mode '" + std::string(name) + "' (expected token-cutoff or classifier)");
}

Preprocessor::Preprocessor(FilterMode mode, std::shared_ptr<const RelevanceFilter> classifier, double threshold,
                           std::size_t budget)
    : mode_(mode), classifier_(std::move(classifier)), threshold_(threshold), budget_(budget) {
  if (mode_ == FilterMode::kClassifier && !classifier_) {
    throw ValidationError("classifier filter mode needs a relevance filter");
  }
  if (budget_ == 0) throw ValidationError("token budget must be positive");
  if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) throw ValidationError("threshold must lie in [0,1]");
}

std::string Preprocessor::apply(std::string_view text) const {
  const auto paragraphs = segment_paragraphs(text);
  if (mode_ == FilterMode::kTokenCutoff) return truncate_at_token_limit(paragraphs, budget_);
  return filter_relevant(paragraphs, *classifier_, threshold_, budget_).text;
}

std::string Preprocessor::label() const {
  if (mode_ == FilterMode::kTokenCutoff) return "token-cutoff";
  return "classifier(" + classifier_->name() + ")";
}

std::shared_ptr<const RelevanceFilter> make_filter(const std::string& spec, const std::string& cue_config_path) {
  if (spec.empty() || spec == "baseline") {
    return std::make_shared<BaselineFilter>(cue_config_path.empty() ? default_cue_config()
                                                                    : load_cue_config(cue_config_path));
  }
  if (spec.rfind("http://", 0) == 0) return std::make_shared<RemoteClassifier>(spec);
  throw ValidationError("unknown classifier '" + spec + "' (expected baseline or http://host:port)");
}

}  // namespace careermatch::adfilter
