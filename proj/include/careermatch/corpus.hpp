#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace careermatch::corpus {

/// One taxonomy entry. Essential and optional skills are merged into
/// `skills` at ingestion.
struct EscoOccupation {
  std::string esco_id;
  std::string title;
  std::string description;
  std::vector<std::string> skills;
  std::vector<std::string> synonyms;

  bool operator==(const EscoOccupation&) const = default;
};

/// A job advertisement annotated with exactly one gold occupation.
struct JobAd {
  std::string ad_id;
  std::string esco_id;
  std::string title;
  std::string body;

  bool operator==(const JobAd&) const = default;
};

enum class PairKind { kSkill, kSynonym, kDescription };

std::string_view to_string(PairKind kind);

struct TrainingPair {
  std::string anchor;
  std::string positive;
  PairKind kind;

  bool operator==(const TrainingPair&) const = default;
};

struct CorpusStats {
  std::size_t occupations = 0;
  std::size_t ads = 0;
  std::size_t covered_occupations = 0;  // occupations with >= 1 ad
  std::size_t unknown_refs = 0;         // ads whose esco_id is not in the taxonomy
};

inline constexpr std::string_view kEscoHeader = "esco_id,title,description,skills,synonyms";

/// Parses the taxonomy CSV (RFC 4180 quoting, UTF-8). Skills and synonyms are
/// pipe-separated inside their field; empty items are dropped and repeated
/// items keep their first occurrence. Errors carry the 1-based line number of
/// the offending record.
std::vector<EscoOccupation> parse_esco(std::string_view csv);
std::vector<EscoOccupation> load_esco(const std::string& path);

/// Inverse of parse_esco; quotes every field that needs it.
std::string serialize_esco(const std::vector<EscoOccupation>& occupations);

/// Parses ads JSONL (keys ad_id, esco_id, title, body). Blank lines are skipped.
std::vector<JobAd> parse_ads(std::string_view jsonl);
std::vector<JobAd> load_ads(const std::string& path);
std::string serialize_ads(const std::vector<JobAd>& ads);

/// Title paired with each skill, then each synonym, then the description
/// (only when non-empty), in corpus order.
std::vector<TrainingPair> export_training_pairs(const std::vector<EscoOccupation>& occupations);
std::string serialize_pairs(const std::vector<TrainingPair>& pairs);

CorpusStats corpus_stats(const std::vector<EscoOccupation>& occupations, const std::vector<JobAd>& ads);

}  // namespace careermatch::corpus
