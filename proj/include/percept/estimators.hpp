#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "percept/pair_sampler.hpp"
#include "percept/types.hpp"

namespace percept {

struct RaterRatings {
  std::string rater_id;
  std::vector<double> values;
};

struct RaterStats {
  double global_mean = 0.0;             // unweighted mean of the rater means
  double between_rater_variance = 0.0;  // equal-weight, (n_raters - 1) divisor
  std::size_t n_raters = 0;
  std::vector<double> rater_means;      // aligned with the input groups
};

/// Equal-weight between-rater variance: every rater contributes one mean
/// regardless of how many ratings they produced. Throws
/// InsufficientRatersError for fewer than two raters.
RaterStats between_rater_variance(const std::vector<RaterRatings>& groups);

struct PairedCounts {
  std::size_t n_utterances = 0;
  // Ordered pairs (i, j), i != j, sharing the male rater plus those sharing
  // the female rater: sum over raters of c*(c-1) for each gender slot.
  std::uint64_t repetition_count = 0;
  double diff_variance = 0.0;  // unbiased sample variance of the differences
  double mean_diff = 0.0;      // mean of female - male
};

PairedCounts paired_repetition_count(const PairedSample& ps, Dimension d);
PairedCounts paired_repetition_count(std::span<const PairedUtterance> utterances,
                                     Dimension d);

struct UnpairedObservation {
  std::string rater_id;
  double value = 0.0;
};

struct UnpairedGroups {
  std::vector<UnpairedObservation> female_spoken;
  std::vector<UnpairedObservation> male_spoken;
};

struct UnpairedCounts {
  std::size_t n_female = 0;  // observations on female-spoken utterances
  std::size_t n_male = 0;
  std::uint64_t same_rater_female = 0;  // ordered within-group pairs, shared rater
  std::uint64_t same_rater_male = 0;
  std::uint64_t cross_group_shared = 0;  // (female obs, male obs) pairs, shared rater
  double pooled_variance = 0.0;  // unbiased variance of all ratings in both groups
  double mean_female = 0.0;
  double mean_male = 0.0;
};

/// Shared-rater pair counts via the grouped per-rater formulas. Throws
/// EmptyGroupError if either group is empty.
UnpairedCounts unpaired_shared_rater_counts(const UnpairedGroups& groups);

/// diff_variance/N + repetition_count * sigma_b^2 / N^2.
/// Throws DegenerateVarianceError when the result is zero.
double paired_variance_of_mean(const PairedCounts& pc, const RaterStats& rs);

/// (1/N_f + 1/N_m) * pooled_variance + sigma_b^2 * (same_f/N_f^2 +
/// same_m/N_m^2 - 2*cross/(N_f*N_m)). Throws DegenerateVarianceError when
/// the value is not strictly positive.
double unpaired_variance_of_mean(const UnpairedCounts& uc, const RaterStats& rs);

}  // namespace percept
