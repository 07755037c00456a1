#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "percept/types.hpp"

namespace percept {

enum class LoadDistribution { uniform, zipf };
enum class NoiseDistribution { normal, uniform };

/// Synthetic-world parameters. Rater means follow mu_r = mu_g + eps_r with
/// spread rater_spread (sigma_b); female raters get +gender_effect under the
/// alternative; each rating adds zero-mean noise of spread rating_noise
/// (sigma_w) and is clamped to [-1, 1].
struct SimConfig {
  std::size_t n_utterances = 200;
  std::size_t n_male_raters = 20;
  std::size_t n_female_raters = 20;
  std::size_t annotations_per_utterance = 5;
  LoadDistribution load = LoadDistribution::uniform;
  double zipf_s = 1.0;
  NoiseDistribution noise = NoiseDistribution::normal;
  double global_mean = 0.0;   // mu_g
  double rater_spread = 0.2;  // sigma_b >= 0
  double rating_noise = 0.3;  // sigma_w > 0
  double gender_effect = 0.0; // delta
  std::vector<double> gender_effect_grid;  // power experiment; defaults to {gender_effect}
  double speaker_female_mix = 0.5;
  std::size_t n_replications = 1000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::size_t threads = 0;  // 0 = all cores (PERCEPT_THREADS honored by the CLI)
};

/// Reads a config from JSON or key=value lines; unknown keys and invalid
/// values raise ConfigError naming the key.
SimConfig load_sim_config(const std::filesystem::path& path);
SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SimConfig& cfg);

/// Who rates what, speaker labels, and session grouping; fixed structure
/// that can be re-valued across replications.
struct AssignmentPlan {
  std::size_t n_utterances = 0;
  std::vector<std::string> rater_ids;       // males first, then females
  std::size_t n_male_raters = 0;            // prefix of rater_ids
  std::vector<std::vector<std::uint32_t>> utterance_raters;  // distinct per utterance
  std::vector<SpeakerLabel> speaker_labels;
  // per rater: (utterance index, session ordinal) in utterance order
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rater_sessions;
};

AssignmentPlan build_assignment_plan(const SimConfig& cfg, std::uint64_t structure_stream);

struct GeneratedDataset {
  Dataset dataset;
  double clamp_rate = 0.0;  // fraction of rating values clamped to [-1, 1]
};

/// Deterministic in (cfg.seed, replication). Generated data satisfies the
/// quality-filter rules by construction when annotations_per_utterance >= the
/// filter threshold: both genders on every utterance, no session with fewer
/// than two annotations, consistent demographics.
GeneratedDataset generate_synthetic_dataset(const SimConfig& cfg, std::uint64_t replication);

struct PowerGridRow {
  double gender_effect = 0.0;
  double rejection_rate = 0.0;
};

struct SimReport {
  std::string experiment;
  std::size_t n_replications = 0;
  double alpha = 0.05;
  // paired test over the resampled data (primary metrics)
  std::optional<double> rejection_rate_corrected;
  std::optional<double> rejection_rate_naive;
  std::optional<double> rejection_rate_corrected_unpaired;
  std::optional<double> rejection_rate_naive_unpaired;
  std::optional<double> empirical_var_of_mean;
  std::optional<double> formula_var_of_mean;
  std::optional<double> relative_error;
  std::optional<double> empirical_var_unpaired;
  std::optional<double> formula_var_unpaired;
  std::optional<double> relative_error_unpaired;
  std::map<std::string, double> tstat_quantiles;  // "q05", "q25", ...
  std::vector<PowerGridRow> power_grid;
  double mean_clamp_rate = 0.0;
  std::vector<double> tstats;  // per-replication corrected paired tstats
};

/// Null calibration: generate -> filter -> sample -> test per replication;
/// rejection rates of the corrected and the counts-zeroed (naive) statistics.
SimReport type_i_error_experiment(const SimConfig& cfg);

/// Corrected-test rejection rate over the gender_effect grid.
SimReport power_experiment(const SimConfig& cfg);

/// Holds the rater-to-utterance assignment and the pair sample fixed,
/// redraws rater means and noise each replication, and compares the
/// empirical variance of the paired and unpaired mean statistics against
/// the closed-form variances evaluated with the true (post-clamping)
/// moments of the generative model.
SimReport variance_oracle_check(const SimConfig& cfg);

nlohmann::ordered_json to_json(const SimReport& r);
std::string render_sim_summary(const SimReport& r);
void write_tstats_csv(const SimReport& r, const std::filesystem::path& path);

/// True post-clamping model moments (normal noise), via closed-form clamped
/// normal moments and Gauss-Hermite quadrature over the rater means.
struct TrueMoments {
  double rating_variance = 0.0;        // total variance of one rating
  double between_rater_variance = 0.0; // variance of E[rating | rater]
  double diff_variance = 0.0;          // variance of one paired difference
};
TrueMoments true_clamped_moments(double mu_g, double sigma_b, double sigma_w);

}  // namespace percept
