#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "percept/io.hpp"
#include "percept/summary.hpp"
#include "percept/types.hpp"
#include "support/test_util.hpp"

using namespace percept;

namespace {

std::filesystem::path data_dir() { return PERCEPT_TEST_DATA_DIR; }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("percept_test_" + name);
}

}  // namespace

TEST_CASE("three-row fixture parses into 3 annotations, 2 raters, 2 utterances") {
  ParseResult r = parse_annotations(data_dir() / "annotations_3rows.csv", {});
  CHECK(r.dataset.size() == 3);
  CHECK(r.dataset.raters().size() == 2);
  CHECK(r.dataset.utterances().size() == 2);
  CHECK(r.report.rejected_rows.empty());

  const AnnotationRecord& first = r.dataset.annotations().front();
  CHECK(first.annotation_id == "a001");
  CHECK(first.rater_age == 31);
  CHECK(first.valence == 0.5);
  const AnnotationRecord& second = r.dataset.annotations()[1];
  CHECK_FALSE(second.rater_age.has_value());
  CHECK_FALSE(second.rater_country.has_value());
  CHECK(second.noisy);
}

TEST_CASE("out-of-range valence raises a row-addressed SchemaError in strict mode") {
  try {
    parse_annotations(data_dir() / "bad_valence.csv", {});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line == 3);
    CHECK(e.column == "valence");
  }
}

TEST_CASE("lenient mode collects bad rows but keeps good ones") {
  ParseOptions options;
  options.lenient = true;
  ParseResult r = parse_annotations(data_dir() / "bad_valence.csv", options);
  CHECK(r.dataset.size() == 1);
  REQUIRE(r.report.rejected_rows.size() == 1);
  CHECK(r.report.rejected_rows[0].line == 3);
  CHECK(r.report.rejected_rows[0].column == "valence");
}

TEST_CASE("duplicate (rater, utterance) keeps the earliest timestamp") {
  ParseResult r = parse_annotations(data_dir() / "duplicate_pair.csv", {});
  CHECK(r.dataset.size() == 2);
  CHECK(r.report.duplicate_pair_drops == 1);
  // a002 has the earlier timestamp even though a001 sorts first
  bool found_a002 = false;
  for (const auto& a : r.dataset.annotations()) {
    CHECK(a.annotation_id != "a001");
    found_a002 |= a.annotation_id == "a002";
  }
  CHECK(found_a002);
}

TEST_CASE("duplicate annotation_id is an error in strict mode") {
  const auto path = temp_file("dup_id.csv");
  {
    std::ofstream out(path);
    out << kAnnotationsCsvHeader << "\n"
        << "a001,s1,u1,r1,male,,,,0.1,0.2,0.3,male,0,0,2024-01-01T00:00:00\n"
        << "a001,s2,u2,r2,female,,,,0.2,0.3,0.4,male,0,0,2024-01-01T00:00:01\n";
  }
  CHECK_THROWS_AS(parse_annotations(path, {}), DuplicateAnnotationIdError);
  ParseOptions lenient;
  lenient.lenient = true;
  ParseResult r = parse_annotations(path, lenient);
  CHECK(r.dataset.size() == 1);
  CHECK(r.report.duplicate_id_drops == 1);
  std::filesystem::remove(path);
}

TEST_CASE("missing file raises FileError") {
  CHECK_THROWS_AS(parse_annotations("/nonexistent/percept.csv", {}), FileError);
}

TEST_CASE("csv round-trips to an identical dataset") {
  Dataset ds = test::random_clean_dataset(11, 20, 5, 5, 4);
  const auto path = temp_file("roundtrip.csv");
  write_annotations_csv(ds, path);
  ParseResult r = parse_annotations(path, {});
  CHECK(r.dataset == ds);

  // serialize -> parse -> serialize is byte-stable
  const auto path2 = temp_file("roundtrip2.csv");
  write_annotations_csv(r.dataset, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("jsonl round-trips to an identical dataset") {
  Dataset ds = test::random_clean_dataset(13, 15, 4, 6, 4);
  const auto path = temp_file("roundtrip.jsonl");
  write_annotations_jsonl(ds, path);
  ParseOptions options;
  options.format = FileFormat::jsonl;
  ParseResult r = parse_annotations(path, options);
  CHECK(r.dataset == ds);
  std::filesystem::remove(path);
}

TEST_CASE("csv fields with commas and quotes survive a round trip") {
  std::vector<AnnotationRecord> records;
  AnnotationRecord a = test::make_record(
      {"a1", "s1", "u1", "r1", RaterGender::male, 0.1, 0.2, 0.3, SpeakerLabel::male});
  a.rater_language = "english, \"US\"";
  records.push_back(a);
  AnnotationRecord b = test::make_record(
      {"a2", "s1", "u1", "r2", RaterGender::female, 0.1, 0.2, 0.3, SpeakerLabel::male});
  records.push_back(b);
  Dataset ds = Dataset::from_records(std::move(records));
  const auto path = temp_file("quoted.csv");
  write_annotations_csv(ds, path);
  ParseResult r = parse_annotations(path, {});
  CHECK(r.dataset == ds);
  std::filesystem::remove(path);
}

TEST_CASE("majority vote follows strict plurality with ties as na") {
  using SL = SpeakerLabel;
  CHECK(majority_vote_speaker_gender({SL::male, SL::male, SL::female}) == SL::male);
  CHECK(majority_vote_speaker_gender({SL::male, SL::female}) == SL::na);
  CHECK(majority_vote_speaker_gender({SL::both, SL::both, SL::neither}) == SL::both);
  CHECK(majority_vote_speaker_gender({SL::na}) == SL::na);
  CHECK_THROWS_AS(majority_vote_speaker_gender({}), EmptyInputError);
}

TEST_CASE("majority vote is permutation invariant") {
  std::mt19937_64 gen(99);
  std::vector<SpeakerLabel> labels;
  for (int i = 0; i < 17; ++i) {
    labels.push_back(static_cast<SpeakerLabel>(rng::bounded(gen, 5)));
  }
  const SpeakerLabel expected = majority_vote_speaker_gender(labels);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = labels.size(); i > 1; --i) {
      std::swap(labels[i - 1], labels[rng::bounded(gen, i)]);
    }
    CHECK(majority_vote_speaker_gender(labels) == expected);
  }
}

TEST_CASE("summary statistics on the three-row fixture") {
  ParseResult r = parse_annotations(data_dir() / "annotations_3rows.csv", {});
  SummaryReport s = summary_statistics(r.dataset);
  CHECK(s.n_annotations == 3);
  CHECK(s.n_utterances == 2);
  CHECK(s.n_raters == 2);
  CHECK(s.n_male_raters == 1);
  CHECK(s.n_female_raters == 1);
  CHECK(s.n_languages == 1);
  CHECK(s.n_age_values == 1);
  CHECK(s.annotations_per_utterance == doctest::Approx(1.5));
  CHECK(s.speaker_majority.at(SpeakerLabel::male) == 1);
  // utt1 has one male and one female label: tie -> na
  CHECK(s.speaker_majority.at(SpeakerLabel::na) == 1);
}

TEST_CASE("summary of an empty dataset has zero counts and absent averages") {
  SummaryReport s = summary_statistics(Dataset{});
  CHECK(s.n_annotations == 0);
  CHECK(s.n_utterances == 0);
  CHECK_FALSE(s.annotations_per_rater.has_value());
  CHECK_FALSE(s.annotations_per_utterance.has_value());
  const std::string table = render_summary_table(s);
  CHECK(table.find("n/a") != std::string::npos);
}

TEST_CASE("annotations per utterance times utterance count equals the total") {
  Dataset ds = test::random_clean_dataset(7, 30, 6, 6, 5);
  SummaryReport s = summary_statistics(ds);
  REQUIRE(s.annotations_per_utterance.has_value());
  const double reconstructed = *s.annotations_per_utterance * s.n_utterances;
  CHECK(reconstructed == doctest::Approx(s.n_annotations).epsilon(1e-12));
}

TEST_CASE("iso8601 validation") {
  CHECK(is_iso8601("2024-01-02T10:00:00"));
  CHECK(is_iso8601("2024-01-02 10:00:00"));
  CHECK(is_iso8601("2024-01-02T10:00:00.123"));
  CHECK(is_iso8601("2024-01-02T10:00:00Z"));
  CHECK(is_iso8601("2024-01-02T10:00:00+05:30"));
  CHECK_FALSE(is_iso8601(""));
  CHECK_FALSE(is_iso8601("02/01/2024"));
  CHECK_FALSE(is_iso8601("2024-01-02"));
  CHECK_FALSE(is_iso8601("2024-01-02T10:00:00."));
}

TEST_CASE("dataset rejects out-of-range values at construction") {
  std::vector<AnnotationRecord> records;
  AnnotationRecord a = test::make_record(
      {"a1", "s1", "u1", "r1", RaterGender::male, 1.5, 0.0, 0.0, SpeakerLabel::male});
  records.push_back(a);
  CHECK_THROWS_AS(Dataset::from_records(std::move(records)), Error);
}
