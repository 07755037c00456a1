#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "percept/types.hpp"

namespace percept {

struct SummaryReport {
  std::size_t n_annotations = 0;
  std::size_t n_utterances = 0;
  std::size_t n_raters = 0;
  std::size_t n_male_raters = 0;
  std::size_t n_female_raters = 0;
  std::size_t n_other_raters = 0;
  std::size_t n_age_values = 0;
  std::size_t n_languages = 0;
  std::size_t n_countries = 0;
  std::optional<double> annotations_per_rater;     // absent for empty data
  std::optional<double> annotations_per_utterance;
  std::map<SpeakerLabel, std::size_t> speaker_majority;
};

SummaryReport summary_statistics(const Dataset& ds);

nlohmann::ordered_json to_json(const SummaryReport& r);

/// Aligned two-column plain-text table.
std::string render_summary_table(const SummaryReport& r);

}  // namespace percept
