#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "percept/errors.hpp"

namespace percept {

enum class RaterGender { male, female, other };
enum class SpeakerLabel { male, female, both, neither, na };
enum class Dimension { valence, arousal, dominance };

std::string_view to_string(RaterGender g);
std::string_view to_string(SpeakerLabel s);
std::string_view to_string(Dimension d);

RaterGender parse_rater_gender(std::string_view s);
SpeakerLabel parse_speaker_label(std::string_view s);
Dimension parse_dimension(std::string_view s);

inline constexpr Dimension kAllDimensions[] = {
    Dimension::valence, Dimension::arousal, Dimension::dominance};

/// One rater's response to one utterance within one session.
struct AnnotationRecord {
  std::string annotation_id;
  std::string session_id;
  std::string utterance_id;
  std::string rater_id;
  RaterGender rater_gender = RaterGender::other;
  std::optional<int> rater_age;
  std::optional<std::string> rater_language;
  std::optional<std::string> rater_country;
  double valence = 0.0;
  double arousal = 0.0;
  double dominance = 0.0;
  SpeakerLabel speaker_sex_label = SpeakerLabel::na;
  bool multi_speaker = false;
  bool noisy = false;
  std::string timestamp;

  double value(Dimension d) const {
    switch (d) {
      case Dimension::valence: return valence;
      case Dimension::arousal: return arousal;
      default: return dominance;
    }
  }

  bool operator==(const AnnotationRecord&) const = default;
};

/// Demographics reported at the start of a session.
struct Demographics {
  RaterGender gender = RaterGender::other;
  std::optional<int> age;
  std::optional<std::string> language;
  std::optional<std::string> country;

  bool operator==(const Demographics&) const = default;
};

struct RaterProfile {
  std::string rater_id;
  RaterGender gender = RaterGender::other;
  std::vector<std::string> sessions;  // sorted, unique
  std::map<std::string, Demographics> demographics_per_session;
  std::vector<std::size_t> annotation_rows;  // indexes into Dataset::annotations()
};

struct UtteranceInfo {
  std::string utterance_id;
  std::vector<std::string> annotations;  // annotation ids, sorted
  std::vector<std::size_t> annotation_rows;
  SpeakerLabel speaker_gender_majority = SpeakerLabel::na;
};

/// Strict-plurality winner of the labels; any tie for the maximum is na.
SpeakerLabel majority_vote_speaker_gender(const std::vector<SpeakerLabel>& labels);

/// Immutable, indexed collection of annotations. Records are kept in
/// canonical order (sorted by annotation_id) and the rater/utterance/session
/// indexes are derived from them, so two datasets with equal records are
/// interchangeable.
class Dataset {
 public:
  Dataset() = default;

  /// Builds indexes; throws DuplicateAnnotationIdError on repeated ids and
  /// Error on out-of-range rating values.
  static Dataset from_records(std::vector<AnnotationRecord> records,
                              std::vector<std::string> provenance = {});

  const std::vector<AnnotationRecord>& annotations() const { return annotations_; }
  const std::map<std::string, RaterProfile>& raters() const { return raters_; }
  const std::map<std::string, UtteranceInfo>& utterances() const { return utterances_; }
  const std::map<std::string, std::vector<std::size_t>>& sessions() const { return sessions_; }
  const std::vector<std::string>& provenance() const { return provenance_; }

  bool empty() const { return annotations_.empty(); }
  std::size_t size() const { return annotations_.size(); }

  /// New dataset keeping only the rows for which keep[i] is true.
  Dataset subset(const std::vector<bool>& keep, std::string transform) const;

  Dataset with_provenance(std::string transform) const;

  /// Record-level equality (provenance excluded; indexes are derived).
  bool operator==(const Dataset& other) const {
    return annotations_ == other.annotations_;
  }

 private:
  std::vector<AnnotationRecord> annotations_;
  std::map<std::string, RaterProfile> raters_;
  std::map<std::string, UtteranceInfo> utterances_;
  std::map<std::string, std::vector<std::size_t>> sessions_;
  std::vector<std::string> provenance_;

  void build_indexes();
};

}  // namespace percept
