#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "percept/types.hpp"

namespace percept {

enum class FileFormat { csv, jsonl };

FileFormat parse_file_format(std::string_view s);

inline constexpr std::string_view kAnnotationsCsvHeader =
    "annotation_id,session_id,utterance_id,rater_id,rater_gender,rater_age,"
    "rater_language,rater_country,valence,arousal,dominance,speaker_sex_label,"
    "multi_speaker,noisy,timestamp";

struct ParseOptions {
  FileFormat format = FileFormat::csv;
  // In lenient mode bad rows are collected instead of raised; out-of-range
  // rating values are never admitted in either mode.
  bool lenient = false;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based physical line, header included
  std::string column;
  std::string reason;
};

struct ParseReport {
  std::vector<RowIssue> rejected_rows;       // lenient mode only
  std::size_t duplicate_pair_drops = 0;      // same (rater, utterance), later timestamp
  std::size_t duplicate_id_drops = 0;        // lenient mode only
};

struct ParseResult {
  Dataset dataset;
  ParseReport report;
};

/// Reads and validates an annotation file, deduplicates repeated
/// (rater, utterance) responses keeping the earliest timestamp, and builds
/// the dataset indexes. Strict mode throws SchemaError on the first bad row
/// and DuplicateAnnotationIdError on a repeated annotation_id.
ParseResult parse_annotations(const std::filesystem::path& path,
                              const ParseOptions& options);

/// Canonical serialization: rows sorted by annotation_id, shortest
/// round-trip decimal for reals, booleans as 0/1, absent values as empty
/// strings. parse(write(ds)) reproduces ds record for record.
void write_annotations_csv(const Dataset& ds, const std::filesystem::path& path);
void write_annotations_jsonl(const Dataset& ds, const std::filesystem::path& path);

/// True if s looks like an ISO-8601 timestamp (YYYY-MM-DDThh:mm:ss with an
/// optional fraction and zone designator).
bool is_iso8601(std::string_view s);

}  // namespace percept
