#pragma once

// Test-side fixtures and independent oracles. Everything here is written
// against the documented behavior, not against the library internals, so it
// can disagree with the implementation when the implementation is wrong.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "percept/estimators.hpp"
#include "percept/pair_sampler.hpp"
#include "percept/rng.hpp"
#include "percept/types.hpp"

namespace percept::test {

// ---------------------------------------------------------------------------
// record/fixture builders

struct RecordSpec {
  std::string annotation_id;
  std::string session_id;
  std::string utterance_id;
  std::string rater_id;
  RaterGender gender = RaterGender::male;
  double valence = 0.0;
  double arousal = 0.0;
  double dominance = 0.0;
  SpeakerLabel label = SpeakerLabel::male;
};

inline AnnotationRecord make_record(const RecordSpec& s) {
  AnnotationRecord a;
  a.annotation_id = s.annotation_id;
  a.session_id = s.session_id;
  a.utterance_id = s.utterance_id;
  a.rater_id = s.rater_id;
  a.rater_gender = s.gender;
  a.valence = s.valence;
  a.arousal = s.arousal;
  a.dominance = s.dominance;
  a.speaker_sex_label = s.label;
  a.timestamp = "2024-01-01T00:00:00";
  return a;
}

// Messy random dataset for filter/sampler robustness tests: flat sessions,
// inconsistent raters, sparse utterances, single-gender utterances.
inline Dataset random_dirty_dataset(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto pick = [&](std::uint64_t n) { return rng::bounded(gen, n); };
  auto real = [&]() { return 2.0 * rng::unit_real(gen) - 1.0; };

  const std::size_t n_raters = 6 + pick(12);
  const std::size_t n_utterances = 8 + pick(25);
  std::vector<AnnotationRecord> records;
  std::size_t next_id = 0;

  for (std::size_t r = 0; r < n_raters; ++r) {
    const RaterGender gender = pick(10) < 4   ? RaterGender::male
                               : pick(10) < 7 ? RaterGender::female
                                              : (pick(8) == 0 ? RaterGender::other
                                                              : RaterGender::female);
    const bool inconsistent = pick(7) == 0;
    const std::size_t n_sessions = 1 + pick(3);
    for (std::size_t s = 0; s < n_sessions; ++s) {
      const bool flat = pick(8) == 0;
      const double flat_value = real();
      const std::size_t session_size = 1 + pick(6);
      for (std::size_t k = 0; k < session_size; ++k) {
        AnnotationRecord a;
        a.annotation_id = "a" + std::to_string(100000 + next_id++);
        a.session_id = "r" + std::to_string(r) + "-s" + std::to_string(s);
        a.utterance_id = "u" + std::to_string(pick(n_utterances));
        a.rater_id = "r" + std::to_string(r);
        a.rater_gender = gender;
        a.rater_age = inconsistent && s > 0 ? std::optional<int>(20 + static_cast<int>(s))
                                            : std::optional<int>(30);
        a.valence = flat ? flat_value : real();
        a.arousal = flat ? flat_value : real();
        a.dominance = flat ? flat_value : real();
        a.speaker_sex_label = static_cast<SpeakerLabel>(pick(5));
        a.timestamp = "2024-01-01T00:00:00";
        records.push_back(std::move(a));
      }
    }
  }
  // dedupe (rater, utterance) pairs: keep first
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<AnnotationRecord> unique_records;
  for (auto& a : records) {
    if (seen.emplace(a.rater_id, a.utterance_id).second) {
      unique_records.push_back(std::move(a));
    }
  }
  return Dataset::from_records(std::move(unique_records));
}

// Clean random dataset that already satisfies every filter rule: every
// utterance gets >= min_per_utt annotations with both genders present, all
// sessions have >= 2 annotations and continuous values, demographics fixed.
inline Dataset random_clean_dataset(std::uint64_t seed, std::size_t n_utterances,
                                    std::size_t n_male, std::size_t n_female,
                                    std::size_t per_utterance,
                                    bool skewed_loads = false) {
  std::mt19937_64 gen(seed);
  auto real = [&]() { return 2.0 * rng::unit_real(gen) - 1.0; };
  const std::size_t n_raters = n_male + n_female;

  // optional skew: rater i gets weight ~ 1/(i+1)
  std::vector<double> male_cum(n_male), female_cum(n_female);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_male; ++i) {
    acc += skewed_loads ? 1.0 / static_cast<double>(i + 1) : 1.0;
    male_cum[i] = acc;
  }
  acc = 0.0;
  for (std::size_t i = 0; i < n_female; ++i) {
    acc += skewed_loads ? 1.0 / static_cast<double>(i + 1) : 1.0;
    female_cum[i] = acc;
  }
  auto weighted = [&](const std::vector<double>& cum) {
    const double u = rng::unit_real(gen) * cum.back();
    return static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  std::vector<std::vector<std::size_t>> assigned(n_utterances);
  for (std::size_t u = 0; u < n_utterances; ++u) {
    std::set<std::size_t> chosen;
    chosen.insert(weighted(male_cum));
    chosen.insert(n_male + weighted(female_cum));
    while (chosen.size() < std::min(per_utterance, n_raters)) {
      const bool male = rng::bounded(gen, 2) == 0;
      chosen.insert(male ? weighted(male_cum) : n_male + weighted(female_cum));
    }
    assigned[u].assign(chosen.begin(), chosen.end());
  }
  // raters with one annotation would form zero-variance singleton sessions
  std::vector<std::size_t> load(n_raters, 0);
  for (const auto& utts : assigned) {
    for (std::size_t r : utts) load[r]++;
  }
  for (std::size_t r = 0; r < n_raters; ++r) {
    if (load[r] != 1) continue;
    for (std::size_t u = 0; u < n_utterances && load[r] == 1; ++u) {
      if (std::find(assigned[u].begin(), assigned[u].end(), r) == assigned[u].end()) {
        assigned[u].push_back(r);
        load[r]++;
      }
    }
  }

  std::vector<AnnotationRecord> records;
  std::size_t next_id = 0;
  std::vector<std::size_t> emitted(n_raters, 0);
  for (std::size_t u = 0; u < n_utterances; ++u) {
    const SpeakerLabel label = rng::bounded(gen, 2) == 0 ? SpeakerLabel::male
                                                         : SpeakerLabel::female;
    for (std::size_t r : assigned[u]) {
      AnnotationRecord a;
      a.annotation_id = "a" + std::to_string(1000000 + next_id++);
      a.session_id = "r" + std::to_string(r) + "-s" + std::to_string(emitted[r]++ / 5);
      a.utterance_id = "u" + std::to_string(10000 + u);
      a.rater_id = "r" + std::to_string(r);
      a.rater_gender = r < n_male ? RaterGender::male : RaterGender::female;
      a.rater_age = 30;
      a.valence = real();
      a.arousal = real();
      a.dominance = real();
      a.speaker_sex_label = label;
      a.timestamp = "2024-01-01T00:00:00";
      records.push_back(std::move(a));
    }
  }
  // merge trailing singleton sessions into the previous block
  std::map<std::string, std::size_t> session_sizes;
  for (const auto& a : records) session_sizes[a.session_id]++;
  for (auto& a : records) {
    if (session_sizes[a.session_id] == 1 && a.session_id.back() != '0') {
      std::string prev = a.session_id;
      prev.back() = static_cast<char>(prev.back() - 1);
      a.session_id = prev;
    }
  }
  return Dataset::from_records(std::move(records));
}

// ---------------------------------------------------------------------------
// independent rule scanner: re-checks all four filter postconditions

struct RuleScanResult {
  bool ok = true;
  std::vector<std::string> violations;
};

inline RuleScanResult scan_filter_rules(const Dataset& ds, std::size_t min_per_utterance) {
  RuleScanResult result;
  auto fail = [&](std::string v) {
    result.ok = false;
    result.violations.push_back(std::move(v));
  };

  std::map<std::string, std::vector<const AnnotationRecord*>> by_utt, by_session, by_rater;
  for (const AnnotationRecord& a : ds.annotations()) {
    by_utt[a.utterance_id].push_back(&a);
    by_session[a.session_id].push_back(&a);
    by_rater[a.rater_id].push_back(&a);
  }

  for (const auto& [utt, rows] : by_utt) {
    if (rows.size() < min_per_utterance) fail("utterance below threshold: " + utt);
    bool m = false, f = false;
    for (const auto* a : rows) {
      m |= a->rater_gender == RaterGender::male;
      f |= a->rater_gender == RaterGender::female;
    }
    if (!m || !f) fail("single-gender utterance: " + utt);
  }
  for (const auto& [session, rows] : by_session) {
    for (Dimension d : kAllDimensions) {
      bool all_equal = true;
      for (const auto* a : rows) {
        if (a->value(d) != rows.front()->value(d)) {
          all_equal = false;
          break;
        }
      }
      if (all_equal) {
        fail("zero-variance session: " + session);
        break;
      }
    }
  }
  for (const auto& [rater, rows] : by_rater) {
    for (const auto* a : rows) {
      const auto* first = rows.front();
      if (a->rater_gender != first->rater_gender || a->rater_age != first->rater_age ||
          a->rater_language != first->rater_language ||
          a->rater_country != first->rater_country) {
        fail("inconsistent demographics: " + rater);
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// brute-force O(N^2) count oracles

inline std::uint64_t brute_force_repetition_count(
    const std::vector<PairedUtterance>& utts) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    for (std::size_t j = 0; j < utts.size(); ++j) {
      if (i == j) continue;
      if (utts[i].male.rater_id == utts[j].male.rater_id) ++m;
      if (utts[i].female.rater_id == utts[j].female.rater_id) ++m;
    }
  }
  return m;
}

struct BruteForceUnpaired {
  std::uint64_t same_female = 0;
  std::uint64_t same_male = 0;
  std::uint64_t cross = 0;
};

inline BruteForceUnpaired brute_force_shared_counts(const UnpairedGroups& g) {
  BruteForceUnpaired out;
  const auto& f = g.female_spoken;
  const auto& m = g.male_spoken;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (i != j && f[i].rater_id == f[j].rater_id) ++out.same_female;
    }
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i != j && m[i].rater_id == m[j].rater_id) ++out.same_male;
    }
  }
  for (const auto& a : f) {
    for (const auto& b : m) {
      if (a.rater_id == b.rater_id) ++out.cross;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// reference re-implementation of the documented sampling loop
// (simple data structures, same pseudorandom draw protocol)

inline std::map<std::string, std::pair<std::string, std::string>> reference_sample(
    const Dataset& ds, std::uint64_t seed) {
  // canonical pair list: sorted (male, female), utterances sorted by id
  std::map<std::pair<std::string, std::string>, std::set<std::string>> co;
  for (const auto& [utt, ui] : ds.utterances()) {
    std::vector<std::string> males, females;
    for (std::size_t row : ui.annotation_rows) {
      const AnnotationRecord& a = ds.annotations()[row];
      if (a.rater_gender == RaterGender::male) males.push_back(a.rater_id);
      if (a.rater_gender == RaterGender::female) females.push_back(a.rater_id);
    }
    std::sort(males.begin(), males.end());
    std::sort(females.begin(), females.end());
    for (const auto& m : males) {
      for (const auto& f : females) {
        co[{m, f}].insert(utt);
      }
    }
  }
  struct Pair {
    std::pair<std::string, std::string> ids;
    std::vector<std::string> utts;
  };
  std::vector<Pair> pairs;
  for (const auto& [ids, utts] : co) {
    pairs.push_back({ids, std::vector<std::string>(utts.begin(), utts.end())});
  }

  std::vector<std::size_t> eligible(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) eligible[i] = i;
  std::set<std::string> assigned;
  std::map<std::string, std::pair<std::string, std::string>> result;

  std::mt19937_64 gen = rng::make_stream(seed, 0);
  const std::size_t total = ds.utterances().size();
  while (assigned.size() < total) {
    const std::size_t slot = rng::bounded(gen, eligible.size());
    Pair& p = pairs[eligible[slot]];
    std::vector<std::string> remaining;
    for (const std::string& u : p.utts) {
      if (!assigned.count(u)) remaining.push_back(u);
    }
    if (remaining.empty()) {
      eligible[slot] = eligible.back();
      eligible.pop_back();
      continue;
    }
    p.utts = remaining;
    const std::size_t pick = rng::bounded(gen, remaining.size());
    const std::string& u = remaining[pick];
    result[u] = p.ids;
    assigned.insert(u);
    p.utts.erase(p.utts.begin() + static_cast<std::ptrdiff_t>(pick));
    if (p.utts.empty()) {
      eligible[slot] = eligible.back();
      eligible.pop_back();
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// adaptive Simpson integration of the t density (p-value oracle)

inline double t_density(double x, double dof) {
  const double c = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                   0.5 * std::log(dof * 3.14159265358979323846);
  return std::exp(c - 0.5 * (dof + 1.0) * std::log1p(x * x / dof));
}

inline double simpson_rec(double (*f)(double, double), double dof, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm, dof), frm = f(rm, dof);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, dof, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, dof, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Two-sided p-value by adaptive quadrature: 2 * integral_|t|^inf of the t
/// density, computed as 1 - 2*integral_0^|t| for accuracy near 0.
inline double integrated_two_sided_p(double t, double dof) {
  const double a = 0.0, b = std::fabs(t);
  if (b == 0.0) return 1.0;
  const double fa = t_density(a, dof), fb = t_density(b, dof),
               fm = t_density(0.5 * (a + b), dof);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double inner =
      simpson_rec(&t_density, dof, a, b, fa, fm, fb, whole, 1e-14, 48);
  return 1.0 - 2.0 * inner;
}

}  // namespace percept::test
