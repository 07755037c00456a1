#include "percept/io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace percept {

FileFormat parse_file_format(std::string_view s) {
  if (s == "csv") return FileFormat::csv;
  if (s == "jsonl") return FileFormat::jsonl;
  throw Error("unknown format '" + std::string(s) + "' (expected csv or jsonl)");
}

bool is_iso8601(std::string_view s) {
  // YYYY-MM-DDThh:mm:ss with optional .fff and optional Z or +hh:mm
  if (s.size() < 19) return false;
  auto digit = [&](std::size_t i) { return std::isdigit(static_cast<unsigned char>(s[i])) != 0; };
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u}) {
    if (!digit(i)) return false;
  }
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':') {
    return false;
  }
  std::size_t i = 19;
  if (i < s.size() && s[i] == '.') {
    ++i;
    std::size_t start = i;
    while (i < s.size() && digit(i)) ++i;
    if (i == start) return false;
  }
  if (i == s.size()) return true;
  if (s[i] == 'Z') return i + 1 == s.size();
  if (s[i] == '+' || s[i] == '-') {
    if (i + 6 != s.size()) return false;
    return digit(i + 1) && digit(i + 2) && s[i + 3] == ':' && digit(i + 4) && digit(i + 5);
  }
  return false;
}

namespace {

const std::vector<std::string>& column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss{std::string(kAnnotationsCsvHeader)};
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
  }();
  return names;
}

// RFC-4180-style field splitting; embedded newlines are not supported.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw SchemaError(lineno, "", "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string csv_escape(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& s, std::size_t line, const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw SchemaError(line, col, "not a plain decimal number: '" + s + "'");
  }
  return v;
}

int parse_int_field(const std::string& s, std::size_t line, const std::string& col) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw SchemaError(line, col, "not an integer: '" + s + "'");
  }
  return v;
}

bool parse_bool_field(const std::string& s, std::size_t line, const std::string& col) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw SchemaError(line, col, "boolean must be 0 or 1, got '" + s + "'");
}

void validate_record(const AnnotationRecord& a, std::size_t line) {
  if (a.annotation_id.empty()) throw SchemaError(line, "annotation_id", "must be non-empty");
  if (a.session_id.empty()) throw SchemaError(line, "session_id", "must be non-empty");
  if (a.utterance_id.empty()) throw SchemaError(line, "utterance_id", "must be non-empty");
  if (a.rater_id.empty()) throw SchemaError(line, "rater_id", "must be non-empty");
  for (Dimension d : kAllDimensions) {
    double v = a.value(d);
    if (!(v >= -1.0 && v <= 1.0)) {
      throw SchemaError(line, std::string(to_string(d)),
                        "value " + format_double(v) + " outside [-1, 1]");
    }
  }
  if (a.rater_age && *a.rater_age < 0) {
    throw SchemaError(line, "rater_age", "must be non-negative");
  }
  if (!is_iso8601(a.timestamp)) {
    throw SchemaError(line, "timestamp", "not an ISO-8601 timestamp: '" + a.timestamp + "'");
  }
}

AnnotationRecord record_from_csv_fields(const std::vector<std::string>& f, std::size_t line) {
  const auto& cols = column_names();
  if (f.size() != cols.size()) {
    throw SchemaError(line, "", "expected " + std::to_string(cols.size()) +
                                " fields, got " + std::to_string(f.size()));
  }
  AnnotationRecord a;
  a.annotation_id = f[0];
  a.session_id = f[1];
  a.utterance_id = f[2];
  a.rater_id = f[3];
  try {
    a.rater_gender = parse_rater_gender(f[4]);
  } catch (const Error& e) {
    throw SchemaError(line, "rater_gender", e.what());
  }
  if (!f[5].empty()) a.rater_age = parse_int_field(f[5], line, "rater_age");
  if (!f[6].empty()) a.rater_language = f[6];
  if (!f[7].empty()) a.rater_country = f[7];
  a.valence = parse_double_field(f[8], line, "valence");
  a.arousal = parse_double_field(f[9], line, "arousal");
  a.dominance = parse_double_field(f[10], line, "dominance");
  try {
    a.speaker_sex_label = parse_speaker_label(f[11]);
  } catch (const Error& e) {
    throw SchemaError(line, "speaker_sex_label", e.what());
  }
  a.multi_speaker = parse_bool_field(f[12], line, "multi_speaker");
  a.noisy = parse_bool_field(f[13], line, "noisy");
  a.timestamp = f[14];
  validate_record(a, line);
  return a;
}

AnnotationRecord record_from_json_line(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(line, "", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(line, "", "line is not a JSON object");

  auto get_string = [&](const char* key, bool required) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) throw SchemaError(line, key, "missing required field");
      return std::nullopt;
    }
    if (!j[key].is_string()) throw SchemaError(line, key, "must be a string");
    std::string v = j[key].get<std::string>();
    if (v.empty() && !required) return std::nullopt;
    return v;
  };
  auto get_double = [&](const char* key) -> double {
    if (!j.contains(key) || !j[key].is_number()) {
      throw SchemaError(line, key, "missing or non-numeric field");
    }
    return j[key].get<double>();
  };
  auto get_bool = [&](const char* key) -> bool {
    if (!j.contains(key)) throw SchemaError(line, key, "missing required field");
    if (j[key].is_boolean()) return j[key].get<bool>();
    if (j[key].is_number_integer()) {
      auto v = j[key].get<long long>();
      if (v == 0 || v == 1) return v == 1;
    }
    throw SchemaError(line, key, "boolean must be true/false or 0/1");
  };

  AnnotationRecord a;
  a.annotation_id = *get_string("annotation_id", true);
  a.session_id = *get_string("session_id", true);
  a.utterance_id = *get_string("utterance_id", true);
  a.rater_id = *get_string("rater_id", true);
  try {
    a.rater_gender = parse_rater_gender(*get_string("rater_gender", true));
  } catch (const Error& e) {
    throw SchemaError(line, "rater_gender", e.what());
  }
  if (j.contains("rater_age") && !j["rater_age"].is_null()) {
    if (!j["rater_age"].is_number_integer()) {
      throw SchemaError(line, "rater_age", "must be an integer");
    }
    a.rater_age = j["rater_age"].get<int>();
  }
  a.rater_language = get_string("rater_language", false);
  a.rater_country = get_string("rater_country", false);
  a.valence = get_double("valence");
  a.arousal = get_double("arousal");
  a.dominance = get_double("dominance");
  try {
    a.speaker_sex_label = parse_speaker_label(*get_string("speaker_sex_label", true));
  } catch (const Error& e) {
    throw SchemaError(line, "speaker_sex_label", e.what());
  }
  a.multi_speaker = get_bool("multi_speaker");
  a.noisy = get_bool("noisy");
  a.timestamp = *get_string("timestamp", true);
  validate_record(a, line);
  return a;
}

}  // namespace

ParseResult parse_annotations(const std::filesystem::path& path,
                              const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "'");

  ParseResult out;
  std::vector<AnnotationRecord> records;
  std::map<std::string, std::size_t> seen_ids;  // annotation_id -> record index

  std::string line;
  std::size_t lineno = 0;

  if (options.format == FileFormat::csv) {
    if (!std::getline(in, line)) throw SchemaError(1, "", "missing header row");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kAnnotationsCsvHeader) {
      throw SchemaError(1, "", "header row does not match the annotations schema");
    }
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      AnnotationRecord a = options.format == FileFormat::csv
                               ? record_from_csv_fields(split_csv_line(line, lineno), lineno)
                               : record_from_json_line(line, lineno);
      auto [it, inserted] = seen_ids.emplace(a.annotation_id, records.size());
      if (!inserted) {
        if (!options.lenient) {
          throw DuplicateAnnotationIdError("duplicate annotation_id '" + a.annotation_id +
                                           "' at line " + std::to_string(lineno));
        }
        out.report.duplicate_id_drops++;
        continue;
      }
      records.push_back(std::move(a));
    } catch (const SchemaError& e) {
      if (!options.lenient) throw;
      out.report.rejected_rows.push_back({e.line, e.column, e.reason});
    }
  }

  // duplicate (rater, utterance) responses: keep the earliest timestamp,
  // breaking ties by annotation_id
  std::map<std::pair<std::string, std::string>, std::size_t> first_response;
  std::vector<bool> keep(records.size(), true);
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].annotation_id < records[b].annotation_id;
  });
  for (std::size_t i : order) {
    auto key = std::make_pair(records[i].rater_id, records[i].utterance_id);
    auto [it, inserted] = first_response.emplace(key, i);
    if (inserted) continue;
    std::size_t j = it->second;
    const bool i_earlier =
        records[i].timestamp != records[j].timestamp
            ? records[i].timestamp < records[j].timestamp
            : records[i].annotation_id < records[j].annotation_id;
    if (i_earlier) {
      keep[j] = false;
      it->second = i;
    } else {
      keep[i] = false;
    }
    out.report.duplicate_pair_drops++;
  }
  std::vector<AnnotationRecord> kept;
  kept.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(records[i]));
  }

  std::string transform = "ingest:" +
                          std::string(options.format == FileFormat::csv ? "csv" : "jsonl") +
                          ":" + path.filename().string();
  out.dataset = Dataset::from_records(std::move(kept), {std::move(transform)});
  return out;
}

namespace {

std::string record_to_csv_row(const AnnotationRecord& a) {
  std::string row;
  row += csv_escape(a.annotation_id);
  row += ',';
  row += csv_escape(a.session_id);
  row += ',';
  row += csv_escape(a.utterance_id);
  row += ',';
  row += csv_escape(a.rater_id);
  row += ',';
  row += to_string(a.rater_gender);
  row += ',';
  if (a.rater_age) row += std::to_string(*a.rater_age);
  row += ',';
  if (a.rater_language) row += csv_escape(*a.rater_language);
  row += ',';
  if (a.rater_country) row += csv_escape(*a.rater_country);
  row += ',';
  row += format_double(a.valence);
  row += ',';
  row += format_double(a.arousal);
  row += ',';
  row += format_double(a.dominance);
  row += ',';
  row += to_string(a.speaker_sex_label);
  row += ',';
  row += a.multi_speaker ? '1' : '0';
  row += ',';
  row += a.noisy ? '1' : '0';
  row += ',';
  row += csv_escape(a.timestamp);
  return row;
}

}  // namespace

void write_annotations_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream outf(path);
  if (!outf) throw FileError("cannot write '" + path.string() + "'");
  outf << kAnnotationsCsvHeader << '\n';
  for (const AnnotationRecord& a : ds.annotations()) {
    outf << record_to_csv_row(a) << '\n';
  }
  if (!outf) throw FileError("write failed for '" + path.string() + "'");
}

void write_annotations_jsonl(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream outf(path);
  if (!outf) throw FileError("cannot write '" + path.string() + "'");
  for (const AnnotationRecord& a : ds.annotations()) {
    nlohmann::ordered_json j;
    j["annotation_id"] = a.annotation_id;
    j["session_id"] = a.session_id;
    j["utterance_id"] = a.utterance_id;
    j["rater_id"] = a.rater_id;
    j["rater_gender"] = std::string(to_string(a.rater_gender));
    if (a.rater_age) j["rater_age"] = *a.rater_age;
    if (a.rater_language) j["rater_language"] = *a.rater_language;
    if (a.rater_country) j["rater_country"] = *a.rater_country;
    j["valence"] = a.valence;
    j["arousal"] = a.arousal;
    j["dominance"] = a.dominance;
    j["speaker_sex_label"] = std::string(to_string(a.speaker_sex_label));
    j["multi_speaker"] = a.multi_speaker;
    j["noisy"] = a.noisy;
    j["timestamp"] = a.timestamp;
    outf << j.dump() << '\n';
  }
  if (!outf) throw FileError("write failed for '" + path.string() + "'");
}

}  // namespace percept
