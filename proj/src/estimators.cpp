#include "percept/estimators.hpp"

#include <cmath>
#include <map>

namespace percept {

RaterStats between_rater_variance(const std::vector<RaterRatings>& groups) {
  if (groups.size() < 2) {
    throw InsufficientRatersError("between-rater variance needs at least 2 raters, got " +
                                  std::to_string(groups.size()));
  }
  RaterStats stats;
  stats.n_raters = groups.size();
  stats.rater_means.reserve(groups.size());
  for (const RaterRatings& g : groups) {
    if (g.values.empty()) {
      throw EmptyInputError("rater '" + g.rater_id + "' has no ratings");
    }
    double sum = 0.0;
    for (double v : g.values) sum += v;
    stats.rater_means.push_back(sum / static_cast<double>(g.values.size()));
  }
  double mean_sum = 0.0;
  for (double m : stats.rater_means) mean_sum += m;
  stats.global_mean = mean_sum / static_cast<double>(stats.n_raters);
  double ss = 0.0;
  for (double m : stats.rater_means) {
    const double dev = m - stats.global_mean;
    ss += dev * dev;
  }
  stats.between_rater_variance = ss / static_cast<double>(stats.n_raters - 1);
  return stats;
}

PairedCounts paired_repetition_count(const PairedSample& ps, Dimension d) {
  return paired_repetition_count(std::span<const PairedUtterance>(ps.assignments), d);
}

PairedCounts paired_repetition_count(std::span<const PairedUtterance> utterances,
                                     Dimension d) {
  PairedCounts pc;
  pc.n_utterances = utterances.size();

  std::map<std::string, std::uint64_t> male_counts, female_counts;
  double sum = 0.0;
  for (const PairedUtterance& pu : utterances) {
    male_counts[pu.male.rater_id]++;
    female_counts[pu.female.rater_id]++;
    sum += pu.female.value(d) - pu.male.value(d);
  }
  for (const auto& [id, c] : male_counts) pc.repetition_count += c * (c - 1);
  for (const auto& [id, c] : female_counts) pc.repetition_count += c * (c - 1);

  if (pc.n_utterances == 0) return pc;
  pc.mean_diff = sum / static_cast<double>(pc.n_utterances);
  if (pc.n_utterances >= 2) {
    double ss = 0.0;
    for (const PairedUtterance& pu : utterances) {
      const double dev = (pu.female.value(d) - pu.male.value(d)) - pc.mean_diff;
      ss += dev * dev;
    }
    pc.diff_variance = ss / static_cast<double>(pc.n_utterances - 1);
  }
  return pc;
}

UnpairedCounts unpaired_shared_rater_counts(const UnpairedGroups& groups) {
  if (groups.female_spoken.empty()) {
    throw EmptyGroupError("female-spoken group is empty");
  }
  if (groups.male_spoken.empty()) {
    throw EmptyGroupError("male-spoken group is empty");
  }
  UnpairedCounts uc;
  uc.n_female = groups.female_spoken.size();
  uc.n_male = groups.male_spoken.size();

  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> per_rater;
  double sum_f = 0.0, sum_m = 0.0;
  for (const UnpairedObservation& o : groups.female_spoken) {
    per_rater[o.rater_id].first++;
    sum_f += o.value;
  }
  for (const UnpairedObservation& o : groups.male_spoken) {
    per_rater[o.rater_id].second++;
    sum_m += o.value;
  }
  for (const auto& [id, counts] : per_rater) {
    const auto [a, b] = counts;
    uc.same_rater_female += a * (a - 1);
    uc.same_rater_male += b * (b - 1);
    uc.cross_group_shared += a * b;
  }
  uc.mean_female = sum_f / static_cast<double>(uc.n_female);
  uc.mean_male = sum_m / static_cast<double>(uc.n_male);

  const std::size_t n_total = uc.n_female + uc.n_male;
  const double grand_mean = (sum_f + sum_m) / static_cast<double>(n_total);
  if (n_total >= 2) {
    double ss = 0.0;
    for (const UnpairedObservation& o : groups.female_spoken) {
      const double dev = o.value - grand_mean;
      ss += dev * dev;
    }
    for (const UnpairedObservation& o : groups.male_spoken) {
      const double dev = o.value - grand_mean;
      ss += dev * dev;
    }
    uc.pooled_variance = ss / static_cast<double>(n_total - 1);
  }
  return uc;
}

double paired_variance_of_mean(const PairedCounts& pc, const RaterStats& rs) {
  if (pc.n_utterances < 2) {
    throw InsufficientDataError("paired variance needs at least 2 utterances, got " +
                                std::to_string(pc.n_utterances));
  }
  const double n = static_cast<double>(pc.n_utterances);
  const double value = pc.diff_variance / n +
                       static_cast<double>(pc.repetition_count) *
                           rs.between_rater_variance / (n * n);
  if (value == 0.0) {
    throw DegenerateVarianceError("paired variance of the mean is exactly zero");
  }
  return value;
}

double unpaired_variance_of_mean(const UnpairedCounts& uc, const RaterStats& rs) {
  if (uc.n_female < 2 || uc.n_male < 2) {
    throw EmptyGroupError("unpaired variance needs at least 2 ratings per group");
  }
  const double nf = static_cast<double>(uc.n_female);
  const double nm = static_cast<double>(uc.n_male);
  const double correction = static_cast<double>(uc.same_rater_female) / (nf * nf) +
                            static_cast<double>(uc.same_rater_male) / (nm * nm) -
                            2.0 * static_cast<double>(uc.cross_group_shared) / (nf * nm);
  const double value =
      (1.0 / nf + 1.0 / nm) * uc.pooled_variance + rs.between_rater_variance * correction;
  if (!(value > 0.0)) {
    throw DegenerateVarianceError(
        "unpaired variance of the mean is not positive (" + std::to_string(value) + ")");
  }
  return value;
}

}  // namespace percept
