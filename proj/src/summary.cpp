#include "percept/summary.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace percept {

SummaryReport summary_statistics(const Dataset& ds) {
  SummaryReport r;
  r.n_annotations = ds.annotations().size();
  r.n_utterances = ds.utterances().size();
  r.n_raters = ds.raters().size();

  std::set<int> ages;
  std::set<std::string> languages, countries;
  for (const auto& [id, rp] : ds.raters()) {
    switch (rp.gender) {
      case RaterGender::male: r.n_male_raters++; break;
      case RaterGender::female: r.n_female_raters++; break;
      default: r.n_other_raters++; break;
    }
    for (const auto& [session, demo] : rp.demographics_per_session) {
      if (demo.age) ages.insert(*demo.age);
      if (demo.language) languages.insert(*demo.language);
      if (demo.country) countries.insert(*demo.country);
    }
  }
  r.n_age_values = ages.size();
  r.n_languages = languages.size();
  r.n_countries = countries.size();

  if (r.n_raters > 0) {
    r.annotations_per_rater = static_cast<double>(r.n_annotations) / r.n_raters;
  }
  if (r.n_utterances > 0) {
    r.annotations_per_utterance = static_cast<double>(r.n_annotations) / r.n_utterances;
  }

  for (SpeakerLabel l : {SpeakerLabel::male, SpeakerLabel::female, SpeakerLabel::both,
                         SpeakerLabel::neither, SpeakerLabel::na}) {
    r.speaker_majority[l] = 0;
  }
  for (const auto& [id, ui] : ds.utterances()) {
    r.speaker_majority[ui.speaker_gender_majority]++;
  }
  return r;
}

nlohmann::ordered_json to_json(const SummaryReport& r) {
  nlohmann::ordered_json j;
  j["n_annotations"] = r.n_annotations;
  j["n_utterances"] = r.n_utterances;
  j["n_raters"] = r.n_raters;
  j["n_male_raters"] = r.n_male_raters;
  j["n_female_raters"] = r.n_female_raters;
  j["n_other_raters"] = r.n_other_raters;
  j["n_age_values"] = r.n_age_values;
  j["n_languages"] = r.n_languages;
  j["n_countries"] = r.n_countries;
  if (r.annotations_per_rater) j["annotations_per_rater"] = *r.annotations_per_rater;
  else j["annotations_per_rater"] = nullptr;
  if (r.annotations_per_utterance) j["annotations_per_utterance"] = *r.annotations_per_utterance;
  else j["annotations_per_utterance"] = nullptr;
  nlohmann::ordered_json sm;
  for (const auto& [label, count] : r.speaker_majority) {
    sm[std::string(to_string(label))] = count;
  }
  j["speaker_gender_majority"] = sm;
  return j;
}

namespace {

std::string format_avg(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace

std::string render_summary_table(const SummaryReport& r) {
  std::vector<std::pair<std::string, std::string>> rows = {
      {"# of utterances", std::to_string(r.n_utterances)},
      {"# of annotations", std::to_string(r.n_annotations)},
      {"# of raters", std::to_string(r.n_raters)},
      {"# of male raters", std::to_string(r.n_male_raters)},
      {"# of female raters", std::to_string(r.n_female_raters)},
      {"# of other raters", std::to_string(r.n_other_raters)},
      {"# of age values of raters", std::to_string(r.n_age_values)},
      {"# of languages covered by raters", std::to_string(r.n_languages)},
      {"# of countries covered by raters", std::to_string(r.n_countries)},
      {"# of annotations per rater on average", format_avg(r.annotations_per_rater)},
      {"# of annotations per utterance on average", format_avg(r.annotations_per_utterance)},
      {"Speaker gender distribution by majority vote:", ""},
      {"  Male", std::to_string(r.speaker_majority.at(SpeakerLabel::male))},
      {"  Female", std::to_string(r.speaker_majority.at(SpeakerLabel::female))},
      {"  Both", std::to_string(r.speaker_majority.at(SpeakerLabel::both))},
      {"  Neither", std::to_string(r.speaker_majority.at(SpeakerLabel::neither))},
      {"  NA", std::to_string(r.speaker_majority.at(SpeakerLabel::na))},
  };
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) {
    out << k;
    if (!v.empty()) {
      out << std::string(width - k.size() + 2, ' ') << v;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace percept
