#include "percept/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "percept/estimators.hpp"
#include "percept/hypothesis.hpp"
#include "percept/pair_sampler.hpp"
#include "percept/quality_filter.hpp"
#include "percept/rng.hpp"
#include "percept/student_t.hpp"
#include "percept/threading.hpp"

namespace percept {

namespace {

double parse_double_value(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'", key);
  }
}

std::uint64_t parse_uint_value(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + v + "'",
                      key);
  }
}

std::vector<double> parse_grid_value(const std::string& v, const std::string& key) {
  std::vector<double> grid;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    // trim
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) {
      item.erase(item.begin());
    }
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) {
      item.pop_back();
    }
    if (!item.empty()) grid.push_back(parse_double_value(item, key));
  }
  return grid;
}

void apply_config_key(SimConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "n_utterances") cfg.n_utterances = parse_uint_value(value, key);
  else if (key == "n_male_raters") cfg.n_male_raters = parse_uint_value(value, key);
  else if (key == "n_female_raters") cfg.n_female_raters = parse_uint_value(value, key);
  else if (key == "annotations_per_utterance") {
    cfg.annotations_per_utterance = parse_uint_value(value, key);
  } else if (key == "load" || key == "rater_load_distribution") {
    if (value == "uniform") cfg.load = LoadDistribution::uniform;
    else if (value == "zipf") cfg.load = LoadDistribution::zipf;
    else throw ConfigError("config key '" + key + "': expected uniform or zipf", key);
  } else if (key == "zipf_s") cfg.zipf_s = parse_double_value(value, key);
  else if (key == "noise" || key == "noise_distribution") {
    if (value == "normal") cfg.noise = NoiseDistribution::normal;
    else if (value == "uniform") cfg.noise = NoiseDistribution::uniform;
    else throw ConfigError("config key '" + key + "': expected normal or uniform", key);
  } else if (key == "global_mean" || key == "mu_g") {
    cfg.global_mean = parse_double_value(value, key);
  } else if (key == "rater_spread" || key == "sigma_b") {
    cfg.rater_spread = parse_double_value(value, key);
  } else if (key == "rating_noise" || key == "sigma_w") {
    cfg.rating_noise = parse_double_value(value, key);
  } else if (key == "gender_effect" || key == "delta") {
    cfg.gender_effect = parse_double_value(value, key);
  } else if (key == "gender_effect_grid" || key == "delta_grid") {
    cfg.gender_effect_grid = parse_grid_value(value, key);
  } else if (key == "speaker_female_mix") {
    cfg.speaker_female_mix = parse_double_value(value, key);
  } else if (key == "n_replications") cfg.n_replications = parse_uint_value(value, key);
  else if (key == "seed") cfg.seed = parse_uint_value(value, key);
  else if (key == "alpha") cfg.alpha = parse_double_value(value, key);
  else if (key == "threads") cfg.threads = parse_uint_value(value, key);
  else throw ConfigError("unknown config key '" + key + "'", key);
}

void validate_config(const SimConfig& cfg) {
  auto bad = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why, key);
  };
  if (cfg.n_utterances < 2) bad("n_utterances", "must be at least 2");
  if (cfg.n_male_raters < 1) bad("n_male_raters", "must be at least 1");
  if (cfg.n_female_raters < 1) bad("n_female_raters", "must be at least 1");
  if (cfg.annotations_per_utterance < 2) {
    bad("annotations_per_utterance", "must be at least 2 (one male, one female)");
  }
  if (cfg.annotations_per_utterance > cfg.n_male_raters + cfg.n_female_raters) {
    bad("annotations_per_utterance", "cannot exceed the number of raters");
  }
  if (cfg.zipf_s < 0) bad("zipf_s", "must be non-negative");
  if (cfg.rater_spread < 0) bad("rater_spread", "must be non-negative");
  if (!(cfg.rating_noise > 0)) bad("rating_noise", "must be positive");
  if (!(cfg.speaker_female_mix >= 0 && cfg.speaker_female_mix <= 1)) {
    bad("speaker_female_mix", "must lie in [0, 1]");
  }
  if (cfg.n_replications < 1) bad("n_replications", "must be at least 1");
  if (!(cfg.alpha > 0 && cfg.alpha < 1)) bad("alpha", "must lie in (0, 1)");
  for (double d : cfg.gender_effect_grid) {
    if (d < 0) bad("gender_effect_grid", "grid values must be non-negative");
  }
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  SimConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if ((key == "gender_effect_grid" || key == "delta_grid") && value.is_array()) {
      std::vector<double> grid;
      for (const auto& item : value) {
        if (!item.is_number()) {
          throw ConfigError("config key '" + key + "': grid entries must be numbers", key);
        }
        grid.push_back(item.get<double>());
      }
      cfg.gender_effect_grid = std::move(grid);
      continue;
    }
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else if (value.is_boolean()) text = value.get<bool>() ? "1" : "0";
    else if (value.is_number_unsigned()) text = std::to_string(value.get<std::uint64_t>());
    else if (value.is_number_integer()) text = std::to_string(value.get<std::int64_t>());
    else if (value.is_number_float()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", value.get<double>());
      text = buf;
    } else {
      throw ConfigError("config key '" + key + "': unsupported value type", key);
    }
    apply_config_key(cfg, key, text);
  }
  validate_config(cfg);
  return cfg;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  const auto first =
      std::find_if_not(text.begin(), text.end(),
                       [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (first != text.end() && *first == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return sim_config_from_json(j);
  }

  SimConfig cfg;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: '" +
                        line + "'");
    }
    apply_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate_config(cfg);
  return cfg;
}

nlohmann::ordered_json to_json(const SimConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_utterances"] = cfg.n_utterances;
  j["n_male_raters"] = cfg.n_male_raters;
  j["n_female_raters"] = cfg.n_female_raters;
  j["annotations_per_utterance"] = cfg.annotations_per_utterance;
  j["load"] = cfg.load == LoadDistribution::uniform ? "uniform" : "zipf";
  j["zipf_s"] = cfg.zipf_s;
  j["noise"] = cfg.noise == NoiseDistribution::normal ? "normal" : "uniform";
  j["global_mean"] = cfg.global_mean;
  j["rater_spread"] = cfg.rater_spread;
  j["rating_noise"] = cfg.rating_noise;
  j["gender_effect"] = cfg.gender_effect;
  j["gender_effect_grid"] = cfg.gender_effect_grid;
  j["speaker_female_mix"] = cfg.speaker_female_mix;
  j["n_replications"] = cfg.n_replications;
  j["seed"] = cfg.seed;
  j["alpha"] = cfg.alpha;
  j["threads"] = cfg.threads;
  return j;
}

namespace {

struct WeightTables {
  std::vector<double> male_cum, female_cum, all_cum;  // cumulative weights
};

WeightTables build_weights(const SimConfig& cfg) {
  const std::size_t rm = cfg.n_male_raters, rf = cfg.n_female_raters;
  std::vector<double> w(rm + rf, 1.0);
  if (cfg.load == LoadDistribution::zipf) {
    // interleave global ranks so both genders share the same load profile
    for (std::size_t i = 0; i < rm; ++i) w[i] = std::pow(2.0 * i + 1.0, -cfg.zipf_s);
    for (std::size_t i = 0; i < rf; ++i) w[rm + i] = std::pow(2.0 * i + 2.0, -cfg.zipf_s);
  }
  WeightTables t;
  t.male_cum.resize(rm);
  t.female_cum.resize(rf);
  t.all_cum.resize(rm + rf);
  double acc = 0;
  for (std::size_t i = 0; i < rm; ++i) t.male_cum[i] = (acc += w[i]);
  acc = 0;
  for (std::size_t i = 0; i < rf; ++i) t.female_cum[i] = (acc += w[rm + i]);
  acc = 0;
  for (std::size_t i = 0; i < rm + rf; ++i) t.all_cum[i] = (acc += w[i]);
  return t;
}

std::size_t weighted_pick(std::mt19937_64& gen, const std::vector<double>& cum) {
  const double u = rng::unit_real(gen) * cum.back();
  return static_cast<std::size_t>(
      std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

std::string zero_pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
  return buf;
}

}  // namespace

AssignmentPlan build_assignment_plan(const SimConfig& cfg, std::uint64_t structure_stream) {
  std::mt19937_64 gen = rng::make_stream(cfg.seed, structure_stream);
  const std::size_t rm = cfg.n_male_raters, rf = cfg.n_female_raters;

  AssignmentPlan plan;
  plan.n_utterances = cfg.n_utterances;
  plan.n_male_raters = rm;
  plan.rater_ids.reserve(rm + rf);
  for (std::size_t i = 0; i < rm; ++i) plan.rater_ids.push_back("m" + zero_pad(i + 1, 4));
  for (std::size_t i = 0; i < rf; ++i) plan.rater_ids.push_back("f" + zero_pad(i + 1, 4));

  const WeightTables weights = build_weights(cfg);
  plan.utterance_raters.resize(cfg.n_utterances);
  plan.speaker_labels.resize(cfg.n_utterances);

  for (std::size_t u = 0; u < cfg.n_utterances; ++u) {
    plan.speaker_labels[u] = rng::unit_real(gen) < cfg.speaker_female_mix
                                 ? SpeakerLabel::female
                                 : SpeakerLabel::male;
    auto& chosen = plan.utterance_raters[u];
    chosen.reserve(cfg.annotations_per_utterance);
    chosen.push_back(static_cast<std::uint32_t>(weighted_pick(gen, weights.male_cum)));
    chosen.push_back(
        static_cast<std::uint32_t>(rm + weighted_pick(gen, weights.female_cum)));
    while (chosen.size() < cfg.annotations_per_utterance) {
      const auto pick = static_cast<std::uint32_t>(weighted_pick(gen, weights.all_cum));
      if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) {
        chosen.push_back(pick);
      }
    }
  }

  // a rater with a single annotation would form a single-annotation session,
  // which the zero-variance rule removes; give them a second one
  std::vector<std::uint32_t> load(rm + rf, 0);
  for (const auto& raters : plan.utterance_raters) {
    for (std::uint32_t r : raters) load[r]++;
  }
  for (std::uint32_t r = 0; r < load.size(); ++r) {
    if (load[r] != 1) continue;
    for (;;) {
      const auto u = static_cast<std::size_t>(rng::bounded(gen, cfg.n_utterances));
      auto& raters = plan.utterance_raters[u];
      if (std::find(raters.begin(), raters.end(), r) == raters.end()) {
        raters.push_back(r);
        load[r]++;
        break;
      }
    }
  }

  // sessions: blocks of 5 utterances per rater; a trailing singleton is
  // merged into the previous block
  plan.rater_sessions.resize(rm + rf);
  std::vector<std::vector<std::uint32_t>> per_rater(rm + rf);
  for (std::uint32_t u = 0; u < plan.utterance_raters.size(); ++u) {
    for (std::uint32_t r : plan.utterance_raters[u]) per_rater[r].push_back(u);
  }
  for (std::uint32_t r = 0; r < per_rater.size(); ++r) {
    const auto& utts = per_rater[r];
    const std::size_t n = utts.size();
    plan.rater_sessions[r].reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t ordinal = static_cast<std::uint32_t>(i / 5);
      if (n % 5 == 1 && n > 5 && i == n - 1) ordinal--;  // merge the singleton
      plan.rater_sessions[r].push_back({utts[i], ordinal});
    }
  }
  return plan;
}

namespace {

double draw_noise(std::mt19937_64& gen, NoiseDistribution dist, double sigma) {
  if (dist == NoiseDistribution::normal) return rng::standard_normal(gen) * sigma;
  return rng::uniform_zero_mean(gen, sigma);
}

std::vector<double> draw_rater_means(std::mt19937_64& gen, const SimConfig& cfg,
                                     double gender_effect, std::size_t per_rater_draws) {
  const std::size_t total = cfg.n_male_raters + cfg.n_female_raters;
  std::vector<double> means(total * per_rater_draws);
  for (std::size_t r = 0; r < total; ++r) {
    const double shift = r >= cfg.n_male_raters ? gender_effect : 0.0;
    for (std::size_t k = 0; k < per_rater_draws; ++k) {
      means[r * per_rater_draws + k] =
          cfg.global_mean + shift + draw_noise(gen, cfg.noise, cfg.rater_spread);
    }
  }
  return means;
}

std::string session_id_for(const AssignmentPlan& plan, std::uint32_t rater,
                           std::uint32_t utterance) {
  const auto& sessions = plan.rater_sessions[rater];
  const auto it = std::lower_bound(
      sessions.begin(), sessions.end(), utterance,
      [](const std::pair<std::uint32_t, std::uint32_t>& a, std::uint32_t u) {
        return a.first < u;
      });
  const std::uint32_t ordinal = it != sessions.end() && it->first == utterance
                                    ? it->second
                                    : 0;
  return plan.rater_ids[rater] + "-s" + zero_pad(ordinal + 1, 3);
}

std::string synthetic_timestamp(std::size_t row) {
  const std::size_t day = 1 + (row / 86400) % 27;
  const std::size_t rem = row % 86400;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "2024-01-%02zuT%02zu:%02zu:%02zu", day, rem / 3600,
                (rem / 60) % 60, rem % 60);
  return buf;
}

}  // namespace

GeneratedDataset generate_synthetic_dataset(const SimConfig& cfg, std::uint64_t replication) {
  validate_config(cfg);
  const AssignmentPlan plan = build_assignment_plan(cfg, 2 * replication);
  std::mt19937_64 gen = rng::make_stream(cfg.seed, 2 * replication + 1);

  // three independent rater means per rater, one per dimension
  const std::vector<double> means = draw_rater_means(gen, cfg, cfg.gender_effect, 3);

  std::vector<AnnotationRecord> records;
  std::size_t clamped = 0, total_values = 0;
  std::size_t row = 0;
  for (std::uint32_t u = 0; u < plan.utterance_raters.size(); ++u) {
    for (std::uint32_t r : plan.utterance_raters[u]) {
      AnnotationRecord a;
      a.annotation_id = "a" + zero_pad(++row, 7);
      a.session_id = session_id_for(plan, r, u);
      a.utterance_id = "u" + zero_pad(u + 1, 5);
      a.rater_id = plan.rater_ids[r];
      a.rater_gender = r < plan.n_male_raters ? RaterGender::male : RaterGender::female;
      double values[3];
      for (std::size_t dim = 0; dim < 3; ++dim) {
        double v = means[r * 3 + dim] + draw_noise(gen, cfg.noise, cfg.rating_noise);
        ++total_values;
        if (v < -1.0) {
          v = -1.0;
          ++clamped;
        } else if (v > 1.0) {
          v = 1.0;
          ++clamped;
        }
        values[dim] = v;
      }
      a.valence = values[0];
      a.arousal = values[1];
      a.dominance = values[2];
      a.speaker_sex_label = plan.speaker_labels[u];
      a.multi_speaker = false;
      a.noisy = false;
      a.timestamp = synthetic_timestamp(row);
      records.push_back(std::move(a));
    }
  }

  GeneratedDataset out;
  out.clamp_rate = total_values == 0 ? 0.0 : static_cast<double>(clamped) / total_values;
  out.dataset = Dataset::from_records(
      std::move(records),
      {"synthetic:seed=" + std::to_string(cfg.seed) +
       ":replication=" + std::to_string(replication)});
  return out;
}

namespace {

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

std::map<std::string, double> quantile_summary(std::vector<double> xs) {
  std::map<std::string, double> q;
  if (xs.empty()) return q;
  std::sort(xs.begin(), xs.end());
  auto at = [&](double p) {
    const double idx = p * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
  };
  q["q01"] = at(0.01);
  q["q05"] = at(0.05);
  q["q25"] = at(0.25);
  q["q50"] = at(0.50);
  q["q75"] = at(0.75);
  q["q95"] = at(0.95);
  q["q99"] = at(0.99);
  return q;
}

double ks_statistic_against_t(std::vector<double> xs, double dof) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = student_t_cdf(xs[i], dof);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

std::uint64_t sample_seed_for(const SimConfig& cfg, std::uint64_t replication) {
  std::uint64_t state = cfg.seed ^ 0xC2B2AE3D27D4EB4Full;
  rng::splitmix64(state);
  return state + 0x9E3779B97F4A7C15ull * replication;
}

}  // namespace

SimReport type_i_error_experiment(const SimConfig& cfg) {
  validate_config(cfg);
  if (cfg.gender_effect != 0.0) {
    throw ConfigError("type1 experiment requires gender_effect = 0", "gender_effect");
  }
  const std::size_t reps = cfg.n_replications;
  std::vector<double> p_corr(reps), p_naive(reps), dbar(reps), formula(reps),
      tstats(reps), clamp(reps), p_u_corr(reps), p_u_naive(reps);

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    GeneratedDataset gen = generate_synthetic_dataset(cfg, rep);
    clamp[rep] = gen.clamp_rate;
    auto [filtered, reports] = apply_filter_pipeline(gen.dataset);
    PairedSample ps = sample_pairs(filtered, sample_seed_for(cfg, rep));

    TestResult corrected = paired_test(ps, Dimension::valence);
    TestOptions naive_options;
    naive_options.zero_repetition_counts = true;
    TestResult naive = paired_test(ps, Dimension::valence, naive_options);
    p_corr[rep] = corrected.p_value;
    p_naive[rep] = naive.p_value;
    dbar[rep] = corrected.paired->mean_diff;
    formula[rep] = corrected.variance_of_mean;
    tstats[rep] = corrected.tstat;

    UnpairedGroups groups;
    for (const AnnotationRecord& a : filtered.annotations()) {
      if (a.rater_gender != RaterGender::male) continue;
      const SpeakerLabel label =
          filtered.utterances().at(a.utterance_id).speaker_gender_majority;
      if (label == SpeakerLabel::female) {
        groups.female_spoken.push_back({a.rater_id, a.valence});
      } else if (label == SpeakerLabel::male) {
        groups.male_spoken.push_back({a.rater_id, a.valence});
      }
    }
    p_u_corr[rep] = unpaired_test(groups, Dimension::valence).p_value;
    p_u_naive[rep] = unpaired_test(groups, Dimension::valence, naive_options).p_value;
  });

  SimReport r;
  r.experiment = "type1";
  r.n_replications = reps;
  r.alpha = cfg.alpha;
  auto rate = [&](const std::vector<double>& ps_) {
    std::size_t k = 0;
    for (double p : ps_) k += p < cfg.alpha;
    return static_cast<double>(k) / static_cast<double>(ps_.size());
  };
  r.rejection_rate_corrected = rate(p_corr);
  r.rejection_rate_naive = rate(p_naive);
  r.rejection_rate_corrected_unpaired = rate(p_u_corr);
  r.rejection_rate_naive_unpaired = rate(p_u_naive);
  r.empirical_var_of_mean = sample_variance(dbar);
  double mean_formula = 0.0;
  for (double f : formula) mean_formula += f;
  mean_formula /= static_cast<double>(reps);
  r.formula_var_of_mean = mean_formula;
  r.relative_error = std::fabs(*r.empirical_var_of_mean - mean_formula) / mean_formula;
  r.tstat_quantiles = quantile_summary(tstats);
  r.tstat_quantiles["ks_vs_t30"] = ks_statistic_against_t(tstats, 30.0);
  double mean_clamp = 0.0;
  for (double c : clamp) mean_clamp += c;
  r.mean_clamp_rate = mean_clamp / static_cast<double>(reps);
  r.tstats = std::move(tstats);
  return r;
}

SimReport power_experiment(const SimConfig& cfg) {
  validate_config(cfg);
  std::vector<double> grid = cfg.gender_effect_grid;
  if (grid.empty()) grid.push_back(cfg.gender_effect);

  SimReport r;
  r.experiment = "power";
  r.n_replications = cfg.n_replications;
  r.alpha = cfg.alpha;

  double mean_clamp = 0.0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    SimConfig point = cfg;
    point.gender_effect = grid[gi];
    const std::size_t reps = cfg.n_replications;
    std::vector<double> p_corr(reps), clamp(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t rep) {
      const std::uint64_t global_rep = gi * reps + rep;
      GeneratedDataset gen = generate_synthetic_dataset(point, global_rep);
      clamp[rep] = gen.clamp_rate;
      auto [filtered, reports] = apply_filter_pipeline(gen.dataset);
      PairedSample ps = sample_pairs(filtered, sample_seed_for(point, global_rep));
      p_corr[rep] = paired_test(ps, Dimension::valence).p_value;
    });
    std::size_t k = 0;
    for (double p : p_corr) k += p < cfg.alpha;
    PowerGridRow row;
    row.gender_effect = grid[gi];
    row.rejection_rate = static_cast<double>(k) / static_cast<double>(reps);
    r.power_grid.push_back(row);
    for (double c : clamp) mean_clamp += c;
  }
  r.mean_clamp_rate = mean_clamp / static_cast<double>(grid.size() * cfg.n_replications);
  return r;
}

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * 0.3989422804014326779; }

struct ClampedMoments {
  double mean;
  double second;
};

// E[clamp(Y, -1, 1)] and E[clamp(Y)^2] for Y ~ N(mu, sigma^2), closed form.
ClampedMoments clamped_normal_moments(double mu, double sigma) {
  if (sigma <= 0.0) {
    const double v = std::clamp(mu, -1.0, 1.0);
    return {v, v * v};
  }
  const double alpha = (-1.0 - mu) / sigma;
  const double beta = (1.0 - mu) / sigma;
  const double pa = normal_cdf(alpha);
  const double pb = 1.0 - normal_cdf(beta);
  const double pm = normal_cdf(beta) - normal_cdf(alpha);
  const double ez_mid = normal_pdf(alpha) - normal_pdf(beta);
  const double ez2_mid = pm + alpha * normal_pdf(alpha) - beta * normal_pdf(beta);
  ClampedMoments m;
  m.mean = -pa + pb + mu * pm + sigma * ez_mid;
  m.second = pa + pb + mu * mu * pm + 2.0 * mu * sigma * ez_mid + sigma * sigma * ez2_mid;
  return m;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

TrueMoments true_clamped_moments(double mu_g, double sigma_b, double sigma_w) {
  TrueMoments t;
  if (sigma_b <= 0.0) {
    const ClampedMoments m = clamped_normal_moments(mu_g, sigma_w);
    t.rating_variance = m.second - m.mean * m.mean;
    t.between_rater_variance = 0.0;
    t.diff_variance = 2.0 * t.rating_variance;
    return t;
  }
  const double lo = mu_g - 10.0 * sigma_b;
  const double hi = mu_g + 10.0 * sigma_b;
  auto weighted = [&](const std::function<double(double)>& f) {
    return integrate(
        [&](double mu) {
          const double z = (mu - mu_g) / sigma_b;
          return f(mu) * normal_pdf(z) / sigma_b;
        },
        lo, hi, 1e-13);
  };
  const double ex = weighted([&](double mu) { return clamped_normal_moments(mu, sigma_w).mean; });
  const double eg2 = weighted([&](double mu) {
    const double g = clamped_normal_moments(mu, sigma_w).mean;
    return g * g;
  });
  const double em2 =
      weighted([&](double mu) { return clamped_normal_moments(mu, sigma_w).second; });
  t.rating_variance = em2 - ex * ex;
  t.between_rater_variance = eg2 - ex * ex;
  t.diff_variance = 2.0 * t.rating_variance;
  return t;
}

SimReport variance_oracle_check(const SimConfig& cfg) {
  validate_config(cfg);
  if (cfg.gender_effect != 0.0) {
    throw ConfigError("variance experiment requires gender_effect = 0", "gender_effect");
  }
  if (cfg.noise != NoiseDistribution::normal) {
    throw ConfigError("variance experiment requires normal noise", "noise");
  }

  // fixed structure: assignment plan, speaker labels, and the pair sample
  const AssignmentPlan plan = build_assignment_plan(cfg, 0);
  GeneratedDataset base = generate_synthetic_dataset(cfg, 0);
  const PairedSample ps = sample_pairs(base.dataset, cfg.seed);

  const std::size_t n_raters = plan.rater_ids.size();
  std::unordered_map<std::string, std::uint32_t> rater_index;
  for (std::uint32_t r = 0; r < n_raters; ++r) rater_index.emplace(plan.rater_ids[r], r);

  // incidence offsets: value slot for each (utterance, rater in stored order)
  std::vector<std::size_t> offset(plan.n_utterances + 1, 0);
  for (std::size_t u = 0; u < plan.n_utterances; ++u) {
    offset[u + 1] = offset[u] + plan.utterance_raters[u].size();
  }
  const std::size_t n_incidences = offset[plan.n_utterances];

  auto incidence_of = [&](std::uint32_t u, std::uint32_t rater) -> std::size_t {
    const auto& raters = plan.utterance_raters[u];
    for (std::size_t i = 0; i < raters.size(); ++i) {
      if (raters[i] == rater) return offset[u] + i;
    }
    throw Error("internal: rater not assigned to utterance");
  };

  // paired structure: per sampled utterance, the incidences of the two slots
  std::vector<std::pair<std::size_t, std::size_t>> slot_incidence;  // (male, female)
  slot_incidence.reserve(ps.assignments.size());
  for (const PairedUtterance& pu : ps.assignments) {
    const std::uint32_t u =
        static_cast<std::uint32_t>(std::stoul(pu.utterance_id.substr(1))) - 1;
    slot_incidence.emplace_back(incidence_of(u, rater_index.at(pu.male.rater_id)),
                                incidence_of(u, rater_index.at(pu.female.rater_id)));
  }
  const PairedCounts structure_counts = paired_repetition_count(ps, Dimension::valence);

  // unpaired structure: male-rater incidences grouped by speaker label
  std::vector<std::size_t> male_female_spoken, male_male_spoken;  // incidence ids
  UnpairedGroups group_shape;
  for (std::uint32_t u = 0; u < plan.n_utterances; ++u) {
    const SpeakerLabel label = plan.speaker_labels[u];
    if (label != SpeakerLabel::female && label != SpeakerLabel::male) continue;
    const auto& raters = plan.utterance_raters[u];
    for (std::size_t i = 0; i < raters.size(); ++i) {
      if (raters[i] >= plan.n_male_raters) continue;
      if (label == SpeakerLabel::female) {
        male_female_spoken.push_back(offset[u] + i);
        group_shape.female_spoken.push_back({plan.rater_ids[raters[i]], 0.0});
      } else {
        male_male_spoken.push_back(offset[u] + i);
        group_shape.male_spoken.push_back({plan.rater_ids[raters[i]], 0.0});
      }
    }
  }
  const UnpairedCounts structure_unpaired = unpaired_shared_rater_counts(group_shape);

  const std::size_t reps = cfg.n_replications;
  std::vector<double> dbar(reps), udiff(reps), clamp(reps);

  parallel_for(reps, cfg.threads, [&](std::size_t rep) {
    std::mt19937_64 gen = rng::make_stream(cfg.seed, 2 * rep + 1);
    std::vector<double> means(n_raters);
    for (std::size_t r = 0; r < n_raters; ++r) {
      means[r] = cfg.global_mean + rng::standard_normal(gen) * cfg.rater_spread;
    }
    std::vector<double> values(n_incidences);
    std::size_t clamped = 0;
    for (std::size_t u = 0; u < plan.n_utterances; ++u) {
      const auto& raters = plan.utterance_raters[u];
      for (std::size_t i = 0; i < raters.size(); ++i) {
        double v = means[raters[i]] + rng::standard_normal(gen) * cfg.rating_noise;
        if (v < -1.0) {
          v = -1.0;
          ++clamped;
        } else if (v > 1.0) {
          v = 1.0;
          ++clamped;
        }
        values[offset[u] + i] = v;
      }
    }
    clamp[rep] = static_cast<double>(clamped) / static_cast<double>(n_incidences);

    double dsum = 0.0;
    for (const auto& [mi, fi] : slot_incidence) dsum += values[fi] - values[mi];
    dbar[rep] = dsum / static_cast<double>(slot_incidence.size());

    double fsum = 0.0, msum = 0.0;
    for (std::size_t i : male_female_spoken) fsum += values[i];
    for (std::size_t i : male_male_spoken) msum += values[i];
    udiff[rep] = fsum / static_cast<double>(male_female_spoken.size()) -
                 msum / static_cast<double>(male_male_spoken.size());
  });

  const TrueMoments truth =
      true_clamped_moments(cfg.global_mean, cfg.rater_spread, cfg.rating_noise);
  const double n = static_cast<double>(slot_incidence.size());
  const double formula_paired =
      truth.diff_variance / n + static_cast<double>(structure_counts.repetition_count) *
                                    truth.between_rater_variance / (n * n);
  const double nf = static_cast<double>(structure_unpaired.n_female);
  const double nm = static_cast<double>(structure_unpaired.n_male);
  const double formula_unpaired =
      (1.0 / nf + 1.0 / nm) * truth.rating_variance +
      truth.between_rater_variance *
          (static_cast<double>(structure_unpaired.same_rater_female) / (nf * nf) +
           static_cast<double>(structure_unpaired.same_rater_male) / (nm * nm) -
           2.0 * static_cast<double>(structure_unpaired.cross_group_shared) / (nf * nm));

  SimReport r;
  r.experiment = "variance";
  r.n_replications = reps;
  r.alpha = cfg.alpha;
  r.empirical_var_of_mean = sample_variance(dbar);
  r.formula_var_of_mean = formula_paired;
  r.relative_error = std::fabs(*r.empirical_var_of_mean - formula_paired) / formula_paired;
  r.empirical_var_unpaired = sample_variance(udiff);
  r.formula_var_unpaired = formula_unpaired;
  r.relative_error_unpaired =
      std::fabs(*r.empirical_var_unpaired - formula_unpaired) / formula_unpaired;
  double mean_clamp = 0.0;
  for (double c : clamp) mean_clamp += c;
  r.mean_clamp_rate = mean_clamp / static_cast<double>(reps);
  std::vector<double> standardized(reps);
  const double scale = std::sqrt(formula_paired);
  for (std::size_t i = 0; i < reps; ++i) standardized[i] = dbar[i] / scale;
  r.tstat_quantiles = quantile_summary(standardized);
  r.tstats = std::move(standardized);
  return r;
}

nlohmann::ordered_json to_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["n_replications"] = r.n_replications;
  j["alpha"] = r.alpha;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("rejection_rate_corrected", r.rejection_rate_corrected);
  put("rejection_rate_naive", r.rejection_rate_naive);
  put("rejection_rate_corrected_unpaired", r.rejection_rate_corrected_unpaired);
  put("rejection_rate_naive_unpaired", r.rejection_rate_naive_unpaired);
  put("empirical_var_of_mean", r.empirical_var_of_mean);
  put("formula_var_of_mean", r.formula_var_of_mean);
  put("relative_error", r.relative_error);
  put("empirical_var_unpaired", r.empirical_var_unpaired);
  put("formula_var_unpaired", r.formula_var_unpaired);
  put("relative_error_unpaired", r.relative_error_unpaired);
  if (!r.power_grid.empty()) {
    nlohmann::ordered_json grid = nlohmann::ordered_json::array();
    for (const PowerGridRow& row : r.power_grid) {
      nlohmann::ordered_json g;
      g["gender_effect"] = row.gender_effect;
      g["rejection_rate"] = row.rejection_rate;
      grid.push_back(std::move(g));
    }
    j["power_grid"] = grid;
  }
  if (!r.tstat_quantiles.empty()) {
    nlohmann::ordered_json q;
    for (const auto& [key, value] : r.tstat_quantiles) q[key] = value;
    j["tstat_quantiles"] = q;
  }
  j["mean_clamp_rate"] = r.mean_clamp_rate;
  return j;
}

std::string render_sim_summary(const SimReport& r) {
  std::ostringstream out;
  char buf[160];
  out << "experiment: " << r.experiment << "\n";
  std::snprintf(buf, sizeof(buf), "replications: %zu, alpha: %g\n", r.n_replications,
                r.alpha);
  out << buf;
  auto line = [&](const char* label, const std::optional<double>& v) {
    if (!v) return;
    std::snprintf(buf, sizeof(buf), "%s: %.6g\n", label, *v);
    out << buf;
  };
  line("rejection rate (corrected, paired)", r.rejection_rate_corrected);
  line("rejection rate (naive, paired)", r.rejection_rate_naive);
  line("rejection rate (corrected, unpaired)", r.rejection_rate_corrected_unpaired);
  line("rejection rate (naive, unpaired)", r.rejection_rate_naive_unpaired);
  line("empirical var of mean (paired)", r.empirical_var_of_mean);
  line("formula var of mean (paired)", r.formula_var_of_mean);
  line("relative error (paired)", r.relative_error);
  line("empirical var of mean (unpaired)", r.empirical_var_unpaired);
  line("formula var of mean (unpaired)", r.formula_var_unpaired);
  line("relative error (unpaired)", r.relative_error_unpaired);
  for (const PowerGridRow& row : r.power_grid) {
    std::snprintf(buf, sizeof(buf), "power at gender_effect=%.6g: %.4f\n",
                  row.gender_effect, row.rejection_rate);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean clamp rate: %.4g\n", r.mean_clamp_rate);
  out << buf;
  return out.str();
}

void write_tstats_csv(const SimReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << "replication,tstat\n";
  for (std::size_t i = 0; i < r.tstats.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, r.tstats[i]);
    out << buf;
  }
}

}  // namespace percept
