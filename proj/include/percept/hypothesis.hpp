#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "percept/estimators.hpp"
#include "percept/pair_sampler.hpp"
#include "percept/types.hpp"

namespace percept {

/// The five-hypothesis battery: the first three are paired tests over the
/// resampled data, the last two unpaired tests grouped by speaker gender.
enum class HypothesisId {
  rater_given_speaker_all,     // R|S=a
  rater_given_speaker_female,  // R|S=f
  rater_given_speaker_male,    // R|S=m
  speaker_given_rater_male,    // S|R=m
  speaker_given_rater_female,  // S|R=f
};

inline constexpr HypothesisId kAllHypotheses[] = {
    HypothesisId::rater_given_speaker_all,
    HypothesisId::rater_given_speaker_female,
    HypothesisId::rater_given_speaker_male,
    HypothesisId::speaker_given_rater_male,
    HypothesisId::speaker_given_rater_female,
};

bool is_paired(HypothesisId h);
std::string_view hypothesis_label(HypothesisId h);  // "R|S=a", ...
HypothesisId parse_hypothesis(std::string_view s);

enum class SignificanceTier { p0001, p001, p005, p010, ns };

/// Smallest tier alpha in {0.001, 0.01, 0.05, 0.1} with p < alpha, else ns.
SignificanceTier significance_tier(double p_value);
std::string_view to_string(SignificanceTier t);

struct TestOptions {
  int dof = 30;
  // Calibration baseline: forces the rater-repetition counts to zero,
  // reducing both statistics to their classical uncorrected forms.
  bool zero_repetition_counts = false;
};

struct TestResult {
  HypothesisId hypothesis = HypothesisId::rater_given_speaker_all;
  Dimension dimension = Dimension::valence;
  double tstat = 0.0;
  double p_value = 1.0;
  SignificanceTier tier = SignificanceTier::ns;
  double variance_of_mean = 0.0;
  std::size_t n_effective = 0;  // utterances (paired) / observations (unpaired)
  RaterStats rater_stats;
  std::optional<PairedCounts> paired;
  std::optional<UnpairedCounts> unpaired;
};

/// Paired test on the resampled data: d_i = female - male per utterance,
/// tstat = mean(d) / sqrt(var(d)/N + M*sigma_b^2/N^2). sigma_b^2 is the
/// equal-weight between-rater variance over the same annotations, both rater
/// genders pooled. Positive tstat means female ratings exceed male.
TestResult paired_test(const PairedSample& ps, Dimension d,
                       const TestOptions& options = {});
TestResult paired_test(std::span<const PairedUtterance> utterances, Dimension d,
                       const TestOptions& options = {});

/// Unpaired test comparing female-spoken vs male-spoken mean ratings within
/// one rater gender, with shared-rater covariance terms in the variance.
TestResult unpaired_test(const UnpairedGroups& groups, Dimension d,
                         const TestOptions& options = {});

enum class UnpairedScope { full_dataset, sampled };
UnpairedScope parse_unpaired_scope(std::string_view s);

struct BatteryEntry {
  HypothesisId hypothesis = HypothesisId::rater_given_speaker_all;
  Dimension dimension = Dimension::valence;
  std::optional<TestResult> result;  // absent on error
  std::string error_kind;
  std::string error_message;
};

/// All 5 hypotheses x 3 dimensions in (hypothesis, dimension) order.
/// Speaker-conditioned paired tests keep only utterances whose majority
/// label matches; unpaired tests use the full dataset's annotations by
/// default, or only the resampled ones under UnpairedScope::sampled.
/// A failing cell becomes an error entry rather than being skipped.
std::vector<BatteryEntry> run_battery(const Dataset& ds, const PairedSample& ps,
                                      UnpairedScope scope = UnpairedScope::full_dataset,
                                      const TestOptions& options = {});

nlohmann::ordered_json to_json(const TestResult& r);
nlohmann::ordered_json battery_to_json(const std::vector<BatteryEntry>& entries,
                                       UnpairedScope scope);

/// Rows = hypotheses, columns = "V tstat(alpha)", "A ...", "D ...".
std::string render_battery_table(const std::vector<BatteryEntry>& entries);

}  // namespace percept
