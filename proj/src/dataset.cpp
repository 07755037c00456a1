#include "percept/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace percept {

std::string_view to_string(RaterGender g) {
  switch (g) {
    case RaterGender::male: return "male";
    case RaterGender::female: return "female";
    default: return "other";
  }
}

std::string_view to_string(SpeakerLabel s) {
  switch (s) {
    case SpeakerLabel::male: return "male";
    case SpeakerLabel::female: return "female";
    case SpeakerLabel::both: return "both";
    case SpeakerLabel::neither: return "neither";
    default: return "na";
  }
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::valence: return "valence";
    case Dimension::arousal: return "arousal";
    default: return "dominance";
  }
}

RaterGender parse_rater_gender(std::string_view s) {
  if (s == "male") return RaterGender::male;
  if (s == "female") return RaterGender::female;
  if (s == "other") return RaterGender::other;
  throw Error("invalid rater_gender value: '" + std::string(s) + "'");
}

SpeakerLabel parse_speaker_label(std::string_view s) {
  if (s == "male") return SpeakerLabel::male;
  if (s == "female") return SpeakerLabel::female;
  if (s == "both") return SpeakerLabel::both;
  if (s == "neither") return SpeakerLabel::neither;
  if (s == "na") return SpeakerLabel::na;
  throw Error("invalid speaker_sex_label value: '" + std::string(s) + "'");
}

Dimension parse_dimension(std::string_view s) {
  if (s == "valence" || s == "V" || s == "v") return Dimension::valence;
  if (s == "arousal" || s == "A" || s == "a") return Dimension::arousal;
  if (s == "dominance" || s == "D" || s == "d") return Dimension::dominance;
  throw Error("invalid dimension: '" + std::string(s) + "'");
}

SpeakerLabel majority_vote_speaker_gender(const std::vector<SpeakerLabel>& labels) {
  if (labels.empty()) throw EmptyInputError("majority vote over an empty label list");
  std::array<std::size_t, 5> counts{};
  for (SpeakerLabel l : labels) counts[static_cast<std::size_t>(l)]++;
  std::size_t best = 0, best_count = 0;
  bool tie = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > best_count) {
      best = i;
      best_count = counts[i];
      tie = false;
    } else if (counts[i] == best_count && counts[i] > 0) {
      tie = true;
    }
  }
  if (tie) return SpeakerLabel::na;
  return static_cast<SpeakerLabel>(best);
}

Dataset Dataset::from_records(std::vector<AnnotationRecord> records,
                              std::vector<std::string> provenance) {
  Dataset ds;
  std::sort(records.begin(), records.end(),
            [](const AnnotationRecord& a, const AnnotationRecord& b) {
              return a.annotation_id < b.annotation_id;
            });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].annotation_id == records[i - 1].annotation_id) {
      throw DuplicateAnnotationIdError("duplicate annotation_id: '" +
                                       records[i].annotation_id + "'");
    }
  }
  for (const auto& r : records) {
    for (Dimension d : kAllDimensions) {
      double v = r.value(d);
      if (!(v >= -1.0 && v <= 1.0)) {
        throw Error("annotation '" + r.annotation_id + "': " +
                    std::string(to_string(d)) + " value " + std::to_string(v) +
                    " outside [-1, 1]");
      }
    }
  }
  ds.annotations_ = std::move(records);
  ds.provenance_ = std::move(provenance);
  ds.build_indexes();
  return ds;
}

void Dataset::build_indexes() {
  raters_.clear();
  utterances_.clear();
  sessions_.clear();
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    const AnnotationRecord& a = annotations_[i];

    RaterProfile& rp = raters_[a.rater_id];
    if (rp.rater_id.empty()) {
      rp.rater_id = a.rater_id;
      rp.gender = a.rater_gender;
    }
    rp.annotation_rows.push_back(i);
    if (rp.demographics_per_session.emplace(
            a.session_id,
            Demographics{a.rater_gender, a.rater_age, a.rater_language, a.rater_country})
            .second) {
      rp.sessions.push_back(a.session_id);
    }

    UtteranceInfo& ui = utterances_[a.utterance_id];
    if (ui.utterance_id.empty()) ui.utterance_id = a.utterance_id;
    ui.annotations.push_back(a.annotation_id);
    ui.annotation_rows.push_back(i);

    sessions_[a.session_id].push_back(i);
  }
  for (auto& [id, rp] : raters_) {
    std::sort(rp.sessions.begin(), rp.sessions.end());
  }
  for (auto& [id, ui] : utterances_) {
    std::vector<SpeakerLabel> labels;
    labels.reserve(ui.annotation_rows.size());
    for (std::size_t row : ui.annotation_rows) {
      labels.push_back(annotations_[row].speaker_sex_label);
    }
    ui.speaker_gender_majority = majority_vote_speaker_gender(labels);
  }
}

Dataset Dataset::subset(const std::vector<bool>& keep, std::string transform) const {
  std::vector<AnnotationRecord> kept;
  kept.reserve(annotations_.size());
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    if (i < keep.size() && keep[i]) kept.push_back(annotations_[i]);
  }
  std::vector<std::string> prov = provenance_;
  prov.push_back(std::move(transform));
  return from_records(std::move(kept), std::move(prov));
}

Dataset Dataset::with_provenance(std::string transform) const {
  Dataset copy = *this;
  copy.provenance_.push_back(std::move(transform));
  return copy;
}

}  // namespace percept
