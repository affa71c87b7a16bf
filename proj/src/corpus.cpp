#include "careermatch/corpus.hpp"

#include <map>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "careermatch/error.hpp"
#include "careermatch/text.hpp"

namespace careermatch::corpus {

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 reader. Quoted fields may span lines; the record keeps the line it
// started on.
std::vector<CsvRecord> read_csv(std::string_view data) {
  std::vector<CsvRecord> records;
  std::size_t pos = 0;
  std::size_t line = 1;
  if (data.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;

  while (pos < data.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool record_done = false;
    while (!record_done) {
      field.clear();
      if (pos < data.size() && data[pos] == '"') {
        ++pos;
        bool closed = false;
        while (pos < data.size()) {
          char c = data[pos++];
          if (c == '"') {
            if (pos < data.size() && data[pos] == '"') {
              field.push_back('"');
              ++pos;
            } else {
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        if (!closed) {
          throw ValidationError("line " + std::to_string(rec.line) + ": unterminated quoted field");
        }
        if (pos < data.size() && data[pos] != ',' && data[pos] != '\n' && data[pos] != '\r') {
          throw ValidationError("line " + std::to_string(rec.line) + ": unexpected character after closing quote");
        }
      } else {
        while (pos < data.size() && data[pos] != ',' && data[pos] != '\n' && data[pos] != '\r') {
          if (data[pos] == '"') {
            throw ValidationError("line " + std::to_string(rec.line) + ": stray quote in unquoted field");
          }
          field.push_back(data[pos++]);
        }
      }
      rec.fields.push_back(field);
      if (pos >= data.size()) {
        record_done = true;
      } else if (data[pos] == ',') {
        ++pos;
      } else {
        if (data[pos] == '\r') ++pos;
        if (pos < data.size() && data[pos] == '\n') ++pos;
        ++line;
        record_done = true;
      }
    }
    bool blank = rec.fields.size() == 1 && trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::string> split_list(std::string_view field) {
  std::vector<std::string> items;
  std::unordered_set<std::string> seen;
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t bar = field.find('|', start);
    if (bar == std::string_view::npos) bar = field.size();
    std::string item(trim(field.substr(start, bar - start)));
    if (!item.empty() && seen.insert(item).second) items.push_back(std::move(item));
    start = bar + 1;
  }
  return items;
}

std::string csv_field(std::string_view value) {
  bool needs_quotes = value.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out.push_back('|');
    out += items[i];
  }
  return out;
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("line " + std::to_string(line) + ": missing key '" + key + "'");
  }
  if (!it->is_string()) {
    throw ValidationError("line " + std::to_string(line) + ": key '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(PairKind kind) {
  switch (kind) {
    case PairKind::kSkill:
      return "skill";
    case PairKind::kSynonym:
      return "synonym";
    case PairKind::kDescription:
      return "description";
  }
  return "unknown";
}

std::vector<EscoOccupation> parse_esco(std::string_view csv) {
  auto records = read_csv(csv);
  if (records.empty()) throw ValidationError("line 1: missing header '" + std::string(kEscoHeader) + "'");

  const auto& header = records.front();
  static const std::vector<std::string> kColumns = {"esco_id", "title", "description", "skills", "synonyms"};
  bool header_ok = header.fields.size() == kColumns.size();
  for (std::size_t i = 0; header_ok && i < kColumns.size(); ++i) {
    header_ok = trim(header.fields[i]) == kColumns[i];
  }
  if (!header_ok) {
    throw ValidationError("line " + std::to_string(header.line) + ": expected header '" +
                          std::string(kEscoHeader) + "'");
  }

  std::vector<EscoOccupation> out;
  out.reserve(records.size() - 1);
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "line " + std::to_string(rec.line) + ": ";
    if (rec.fields.size() != kColumns.size()) {
      throw ValidationError(where + "expected 5 fields, found " + std::to_string(rec.fields.size()));
    }
    EscoOccupation occ;
    occ.esco_id = std::string(trim(rec.fields[0]));
    occ.title = std::string(trim(rec.fields[1]));
    occ.description = std::string(trim(rec.fields[2]));
    occ.skills = split_list(rec.fields[3]);
    occ.synonyms = split_list(rec.fields[4]);
    if (occ.esco_id.empty()) throw ValidationError(where + "empty esco_id");
    if (occ.title.empty()) throw ValidationError(where + "empty title for '" + occ.esco_id + "'");
    auto [it, inserted] = seen.emplace(occ.esco_id, rec.line);
    if (!inserted) {
      throw ValidationError(where + "duplicate esco_id '" + occ.esco_id + "' (first seen on line " +
                            std::to_string(it->second) + ")");
    }
    out.push_back(std::move(occ));
  }
  return out;
}

std::vector<EscoOccupation> load_esco(const std::string& path) {
  try {
    return parse_esco(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string serialize_esco(const std::vector<EscoOccupation>& occupations) {
  std::string out(kEscoHeader);
  out.push_back('\n');
  for (const auto& occ : occupations) {
    out += csv_field(occ.esco_id) + ',' + csv_field(occ.title) + ',' + csv_field(occ.description) + ',' +
           csv_field(join_list(occ.skills)) + ',' + csv_field(join_list(occ.synonyms)) + '\n';
  }
  return out;
}

std::vector<JobAd> parse_ads(std::string_view jsonl) {
  std::vector<JobAd> ads;
  std::map<std::string, std::size_t> seen;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty()) return;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw ValidationError(where + "expected a JSON object");
    JobAd ad;
    ad.ad_id = required_string(obj, "ad_id", line_no);
    ad.esco_id = required_string(obj, "esco_id", line_no);
    ad.title = required_string(obj, "title", line_no);
    ad.body = required_string(obj, "body", line_no);
    if (ad.ad_id.empty()) throw ValidationError(where + "empty ad_id");
    if (ad.esco_id.empty()) throw ValidationError(where + "empty esco_id for ad '" + ad.ad_id + "'");
    if (trim(ad.body).empty()) throw ValidationError(where + "empty body for ad '" + ad.ad_id + "'");
    auto [it, inserted] = seen.emplace(ad.ad_id, line_no);
    if (!inserted) {
      throw ValidationError(where + "duplicate ad_id '" + ad.ad_id + "' (first seen on line " +
                            std::to_string(it->second) + ")");
    }
    ads.push_back(std::move(ad));
  });
  return ads;
}

std::vector<JobAd> load_ads(const std::string& path) {
  try {
    return parse_ads(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string serialize_ads(const std::vector<JobAd>& ads) {
  std::string out;
  for (const auto& ad : ads) {
    out += "{\"ad_id\":" + json_quote(ad.ad_id) + ",\"esco_id\":" + json_quote(ad.esco_id) +
           ",\"title\":" + json_quote(ad.title) + ",\"body\":" + json_quote(ad.body) + "}\n";
  }
  return out;
}

std::vector<TrainingPair> export_training_pairs(const std::vector<EscoOccupation>& occupations) {
  std::vector<TrainingPair> pairs;
  for (const auto& occ : occupations) {
    for (const auto& skill : occ.skills) pairs.push_back({occ.title, skill, PairKind::kSkill});
    for (const auto& syn : occ.synonyms) pairs.push_back({occ.title, syn, PairKind::kSynonym});
    if (!occ.description.empty()) pairs.push_back({occ.title, occ.description, PairKind::kDescription});
  }
  return pairs;
}

std::string serialize_pairs(const std::vector<TrainingPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += "{\"anchor\":" + json_quote(p.anchor) + ",\"positive\":" + json_quote(p.positive) +
           ",\"kind\":" + json_quote(to_string(p.kind)) + "}\n";
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<EscoOccupation>& occupations, const std::vector<JobAd>& ads) {
  std::set<std::string_view> known;
  for (const auto& occ : occupations) known.insert(occ.esco_id);
  std::set<std::string_view> covered;
  CorpusStats stats;
  stats.occupations = occupations.size();
  stats.ads = ads.size();
  for (const auto& ad : ads) {
    if (known.count(ad.esco_id)) {
      covered.insert(ad.esco_id);
    } else {
      ++stats.unknown_refs;
    }
  }
  stats.covered_occupations = covered.size();
  return stats;
}

}  // namespace careermatch::corpus
