#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace careermatch::adfilter {

struct Paragraph {
  std::string ad_id;
  std::size_t index = 0;
  std::string text;
  std::optional<bool> label;

  bool operator==(const Paragraph&) const = default;
};

struct FilterVerdict {
  bool keep = false;
  double score = 0.0;

  bool operator==(const FilterVerdict&) const = default;
};

struct ClassifierReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline constexpr std::size_t kDefaultTokenBudget = 512;
inline constexpr double kDefaultThreshold = 0.5;
inline constexpr std::string_view kParagraphSeparator = "\n\n";

/// Counts tokens and cuts text down to a token budget. The default counts
/// whitespace-separated words.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  /// Longest prefix of `text` holding at most `budget` tokens.
  virtual std::string truncate(std::string_view text, std::size_t budget) const = 0;
};

class WhitespaceTokenCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
  std::string truncate(std::string_view text, std::size_t budget) const override;
};

const TokenCounter& default_token_counter();

/// Splits on blank-line runs (lines holding only whitespace count as blank).
/// Paragraphs are trimmed; indices run from 0. Throws on an empty body.
std::vector<Paragraph> segment_paragraphs(std::string_view body, std::string_view ad_id = {});

std::string join_paragraphs(std::span<const Paragraph> paragraphs);

/// Whole paragraphs in order while the running total stays within `budget`.
/// A first paragraph that alone exceeds the budget is hard-cut.
std::string truncate_at_token_limit(std::span<const Paragraph> paragraphs, std::size_t budget = kDefaultTokenBudget,
                                    const TokenCounter& counter = default_token_counter());

/// Scores paragraphs for job relevance, one score in [0,1] per paragraph.
class RelevanceFilter {
 public:
  virtual ~RelevanceFilter() = default;
  virtual std::vector<double> score(std::span<const Paragraph> paragraphs) const = 0;
  virtual std::string name() const = 0;
};

struct CueWeights {
  double cue = 1.0;
  double position = 0.5;
  double length = 0.1;
  double bias = -1.5;

  bool operator==(const CueWeights&) const = default;
};

struct CueConfig {
  std::vector<std::string> cues;
  CueWeights weights;

  bool operator==(const CueConfig&) const = default;
};

/// Built-in lexicon of requirement/duty/qualification cues (German and
/// English) with the default weights. Mirrors config/cue_lexicon.json.
CueConfig default_cue_config();
CueConfig parse_cue_config(std::string_view json);
CueConfig load_cue_config(const std::string& path);

/// Number of cue occurrences in `text`; multi-word cues match as token runs.
std::size_t count_cue_hits(const CueConfig& config, std::string_view text);

/// logistic(bias + cue*hits + position/(1+index) + length*ln(1+words)).
double baseline_score(const Paragraph& paragraph, const CueConfig& config);

class BaselineFilter final : public RelevanceFilter {
 public:
  explicit BaselineFilter(CueConfig config = default_cue_config());
  std::vector<double> score(std::span<const Paragraph> paragraphs) const override;
  std::string name() const override { return "baseline"; }
  const CueConfig& config() const noexcept { return config_; }

 private:
  CueConfig config_;
};

/// Client for `POST /classify` ({"paragraphs":[...]} -> {"scores","labels"}).
class RemoteClassifier final : public RelevanceFilter {
 public:
  explicit RemoteClassifier(std::string endpoint, double timeout_seconds = 60.0);
  std::vector<double> score(std::span<const Paragraph> paragraphs) const override;
  std::string name() const override { return endpoint_; }

 private:
  std::string endpoint_;
  double timeout_seconds_;
};

/// Validates a /classify response against the request size.
std::vector<double> decode_classify_response(std::string_view body, std::size_t expected_count);

struct FilterResult {
  std::string text;
  std::vector<FilterVerdict> verdicts;
  bool fell_back = false;
};

/// Keeps paragraphs scoring >= threshold, in original order. When none pass,
/// falls back to truncate_at_token_limit so the result is never empty.
FilterResult filter_relevant(std::span<const Paragraph> paragraphs, const RelevanceFilter& filter,
                             double threshold = kDefaultThreshold, std::size_t budget = kDefaultTokenBudget,
                             const TokenCounter& counter = default_token_counter());

/// Confusion-matrix metrics, positive class = relevant.
ClassifierReport evaluate_filter(std::span<const bool> verdicts, std::span<const bool> labels);

enum class FilterMode { kTokenCutoff, kClassifier };

std::string_view to_string(FilterMode mode);
FilterMode parse_filter_mode(std::string_view name);

/// Query/ad preprocessing used by the pipeline, evaluation and service.
class Preprocessor {
 public:
  /// `classifier` may be null only for kTokenCutoff.
  Preprocessor(FilterMode mode, std::shared_ptr<const RelevanceFilter> classifier,
               double threshold = kDefaultThreshold, std::size_t budget = kDefaultTokenBudget);

  std::string apply(std::string_view text) const;
  FilterMode mode() const noexcept { return mode_; }
  std::string label() const;

 private:
  FilterMode mode_;
  std::shared_ptr<const RelevanceFilter> classifier_;
  double threshold_;
  std::size_t budget_;
};

/// "baseline" or an http:// classifier endpoint.
std::shared_ptr<const RelevanceFilter> make_filter(const std::string& spec, const std::string& cue_config_path = {});

}  // namespace careermatch::adfilter
