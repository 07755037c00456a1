#include "percept/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "percept/student_t.hpp"

namespace percept {

bool is_paired(HypothesisId h) {
  switch (h) {
    case HypothesisId::rater_given_speaker_all:
    case HypothesisId::rater_given_speaker_female:
    case HypothesisId::rater_given_speaker_male:
      return true;
    default:
      return false;
  }
}

std::string_view hypothesis_label(HypothesisId h) {
  switch (h) {
    case HypothesisId::rater_given_speaker_all: return "R|S=a";
    case HypothesisId::rater_given_speaker_female: return "R|S=f";
    case HypothesisId::rater_given_speaker_male: return "R|S=m";
    case HypothesisId::speaker_given_rater_male: return "S|R=m";
    default: return "S|R=f";
  }
}

HypothesisId parse_hypothesis(std::string_view s) {
  for (HypothesisId h : kAllHypotheses) {
    if (s == hypothesis_label(h)) return h;
  }
  throw Error("unknown hypothesis '" + std::string(s) +
              "' (expected one of R|S=a, R|S=f, R|S=m, S|R=m, S|R=f)");
}

SignificanceTier significance_tier(double p_value) {
  if (p_value < 0.001) return SignificanceTier::p0001;
  if (p_value < 0.01) return SignificanceTier::p001;
  if (p_value < 0.05) return SignificanceTier::p005;
  if (p_value < 0.1) return SignificanceTier::p010;
  return SignificanceTier::ns;
}

std::string_view to_string(SignificanceTier t) {
  switch (t) {
    case SignificanceTier::p0001: return "0.001";
    case SignificanceTier::p001: return "0.01";
    case SignificanceTier::p005: return "0.05";
    case SignificanceTier::p010: return "0.1";
    default: return "ns";
  }
}

UnpairedScope parse_unpaired_scope(std::string_view s) {
  if (s == "full") return UnpairedScope::full_dataset;
  if (s == "sampled") return UnpairedScope::sampled;
  throw Error("unknown unpaired scope '" + std::string(s) + "' (expected full or sampled)");
}

namespace {

// Equal-weight rater groups over the pool an individual test consumes,
// both genders pooled, sorted by rater id.
RaterStats paired_pool_rater_stats(std::span<const PairedUtterance> utterances, Dimension d) {
  std::map<std::string, std::vector<double>> pool;
  for (const PairedUtterance& pu : utterances) {
    pool[pu.male.rater_id].push_back(pu.male.value(d));
    pool[pu.female.rater_id].push_back(pu.female.value(d));
  }
  std::vector<RaterRatings> groups;
  groups.reserve(pool.size());
  for (auto& [id, values] : pool) groups.push_back({id, std::move(values)});
  return between_rater_variance(groups);
}

RaterStats unpaired_pool_rater_stats(const UnpairedGroups& g) {
  std::map<std::string, std::vector<double>> pool;
  for (const UnpairedObservation& o : g.female_spoken) pool[o.rater_id].push_back(o.value);
  for (const UnpairedObservation& o : g.male_spoken) pool[o.rater_id].push_back(o.value);
  std::vector<RaterRatings> groups;
  groups.reserve(pool.size());
  for (auto& [id, values] : pool) groups.push_back({id, std::move(values)});
  return between_rater_variance(groups);
}

TestResult finish(TestResult r, double mean, double variance, const TestOptions& options) {
  r.variance_of_mean = variance;
  r.tstat = mean / std::sqrt(variance);
  r.p_value = two_sided_p_value(r.tstat, options.dof);
  r.tier = significance_tier(r.p_value);
  return r;
}

}  // namespace

TestResult paired_test(const PairedSample& ps, Dimension d, const TestOptions& options) {
  return paired_test(std::span<const PairedUtterance>(ps.assignments), d, options);
}

TestResult paired_test(std::span<const PairedUtterance> utterances, Dimension d,
                       const TestOptions& options) {
  if (utterances.size() < 2) {
    throw InsufficientDataError("paired test needs at least 2 utterances, got " +
                                std::to_string(utterances.size()));
  }
  TestResult r;
  r.dimension = d;
  r.n_effective = utterances.size();
  r.rater_stats = paired_pool_rater_stats(utterances, d);
  PairedCounts counts = paired_repetition_count(utterances, d);
  if (options.zero_repetition_counts) counts.repetition_count = 0;
  r.paired = counts;
  const double variance = paired_variance_of_mean(counts, r.rater_stats);
  return finish(std::move(r), counts.mean_diff, variance, options);
}

TestResult unpaired_test(const UnpairedGroups& groups, Dimension d,
                         const TestOptions& options) {
  if (groups.female_spoken.size() < 2 || groups.male_spoken.size() < 2) {
    throw EmptyGroupError("unpaired test needs at least 2 ratings per speaker-gender group");
  }
  TestResult r;
  r.dimension = d;
  r.n_effective = groups.female_spoken.size() + groups.male_spoken.size();
  r.rater_stats = unpaired_pool_rater_stats(groups);
  UnpairedCounts counts = unpaired_shared_rater_counts(groups);
  if (options.zero_repetition_counts) {
    counts.same_rater_female = 0;
    counts.same_rater_male = 0;
    counts.cross_group_shared = 0;
  }
  r.unpaired = counts;
  const double variance = unpaired_variance_of_mean(counts, r.rater_stats);
  return finish(std::move(r), counts.mean_female - counts.mean_male, variance, options);
}

namespace {

std::string error_kind_of(const Error& e) {
  if (dynamic_cast<const InsufficientDataError*>(&e)) return "InsufficientData";
  if (dynamic_cast<const InsufficientRatersError*>(&e)) return "InsufficientRaters";
  if (dynamic_cast<const DegenerateVarianceError*>(&e)) return "DegenerateVariance";
  if (dynamic_cast<const EmptyGroupError*>(&e)) return "EmptyGroup";
  if (dynamic_cast<const EmptyInputError*>(&e)) return "EmptyInput";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionViolation";
  return "Error";
}

UnpairedGroups collect_unpaired_full(const Dataset& ds, RaterGender rater_gender,
                                     Dimension d) {
  UnpairedGroups g;
  for (const AnnotationRecord& a : ds.annotations()) {
    if (a.rater_gender != rater_gender) continue;
    const SpeakerLabel label =
        ds.utterances().at(a.utterance_id).speaker_gender_majority;
    if (label == SpeakerLabel::female) {
      g.female_spoken.push_back({a.rater_id, a.value(d)});
    } else if (label == SpeakerLabel::male) {
      g.male_spoken.push_back({a.rater_id, a.value(d)});
    }
  }
  return g;
}

UnpairedGroups collect_unpaired_sampled(const Dataset& ds, const PairedSample& ps,
                                        RaterGender rater_gender, Dimension d) {
  UnpairedGroups g;
  for (const PairedUtterance& pu : ps.assignments) {
    auto it = ds.utterances().find(pu.utterance_id);
    if (it == ds.utterances().end()) continue;
    const SpeakerLabel label = it->second.speaker_gender_majority;
    if (label != SpeakerLabel::female && label != SpeakerLabel::male) continue;
    const PairedSlot& slot = rater_gender == RaterGender::male ? pu.male : pu.female;
    if (label == SpeakerLabel::female) {
      g.female_spoken.push_back({slot.rater_id, slot.value(d)});
    } else {
      g.male_spoken.push_back({slot.rater_id, slot.value(d)});
    }
  }
  return g;
}

}  // namespace

std::vector<BatteryEntry> run_battery(const Dataset& ds, const PairedSample& ps,
                                      UnpairedScope scope, const TestOptions& options) {
  // speaker-conditioned paired subsets, from the dataset's majority labels
  std::vector<PairedUtterance> female_spoken, male_spoken;
  for (const PairedUtterance& pu : ps.assignments) {
    auto it = ds.utterances().find(pu.utterance_id);
    if (it == ds.utterances().end()) continue;
    switch (it->second.speaker_gender_majority) {
      case SpeakerLabel::female: female_spoken.push_back(pu); break;
      case SpeakerLabel::male: male_spoken.push_back(pu); break;
      default: break;  // both/neither/na are excluded from conditioned tests
    }
  }

  std::vector<BatteryEntry> entries;
  entries.reserve(15);
  for (HypothesisId h : kAllHypotheses) {
    for (Dimension d : kAllDimensions) {
      BatteryEntry entry;
      entry.hypothesis = h;
      entry.dimension = d;
      try {
        TestResult r;
        switch (h) {
          case HypothesisId::rater_given_speaker_all:
            r = paired_test(ps, d, options);
            break;
          case HypothesisId::rater_given_speaker_female:
            r = paired_test(std::span<const PairedUtterance>(female_spoken), d, options);
            break;
          case HypothesisId::rater_given_speaker_male:
            r = paired_test(std::span<const PairedUtterance>(male_spoken), d, options);
            break;
          case HypothesisId::speaker_given_rater_male:
          case HypothesisId::speaker_given_rater_female: {
            const RaterGender rg = h == HypothesisId::speaker_given_rater_male
                                       ? RaterGender::male
                                       : RaterGender::female;
            UnpairedGroups groups = scope == UnpairedScope::full_dataset
                                        ? collect_unpaired_full(ds, rg, d)
                                        : collect_unpaired_sampled(ds, ps, rg, d);
            r = unpaired_test(groups, d, options);
            break;
          }
        }
        r.hypothesis = h;
        entry.result = std::move(r);
      } catch (const Error& e) {
        entry.error_kind = error_kind_of(e);
        entry.error_message = e.what();
      }
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

nlohmann::ordered_json to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["hypothesis"] = std::string(hypothesis_label(r.hypothesis));
  j["dimension"] = std::string(to_string(r.dimension));
  j["tstat"] = r.tstat;
  j["p_value"] = r.p_value;
  j["significance_tier"] = std::string(to_string(r.tier));
  j["n_effective"] = r.n_effective;
  j["variance_of_mean"] = r.variance_of_mean;
  nlohmann::ordered_json inter;
  nlohmann::ordered_json rs;
  rs["global_mean"] = r.rater_stats.global_mean;
  rs["between_rater_variance"] = r.rater_stats.between_rater_variance;
  rs["n_raters"] = r.rater_stats.n_raters;
  inter["rater_stats"] = rs;
  if (r.paired) {
    nlohmann::ordered_json pc;
    pc["n_utterances"] = r.paired->n_utterances;
    pc["repetition_count"] = r.paired->repetition_count;
    pc["diff_variance"] = r.paired->diff_variance;
    pc["mean_diff"] = r.paired->mean_diff;
    inter["paired_counts"] = pc;
  }
  if (r.unpaired) {
    nlohmann::ordered_json uc;
    uc["n_female_spoken"] = r.unpaired->n_female;
    uc["n_male_spoken"] = r.unpaired->n_male;
    uc["same_rater_female"] = r.unpaired->same_rater_female;
    uc["same_rater_male"] = r.unpaired->same_rater_male;
    uc["cross_group_shared"] = r.unpaired->cross_group_shared;
    uc["pooled_variance"] = r.unpaired->pooled_variance;
    uc["mean_female_spoken"] = r.unpaired->mean_female;
    uc["mean_male_spoken"] = r.unpaired->mean_male;
    inter["unpaired_counts"] = uc;
  }
  j["intermediates"] = inter;
  return j;
}

nlohmann::ordered_json battery_to_json(const std::vector<BatteryEntry>& entries,
                                       UnpairedScope scope) {
  nlohmann::ordered_json j;
  j["unpaired_scope"] = scope == UnpairedScope::full_dataset ? "full" : "sampled";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const BatteryEntry& e : entries) {
    if (e.result) {
      arr.push_back(to_json(*e.result));
    } else {
      nlohmann::ordered_json err;
      err["hypothesis"] = std::string(hypothesis_label(e.hypothesis));
      err["dimension"] = std::string(to_string(e.dimension));
      nlohmann::ordered_json detail;
      detail["kind"] = e.error_kind;
      detail["message"] = e.error_message;
      err["error"] = detail;
      arr.push_back(std::move(err));
    }
  }
  j["results"] = arr;
  return j;
}

std::string render_battery_table(const std::vector<BatteryEntry>& entries) {
  auto cell = [&](HypothesisId h, Dimension d) -> std::string {
    for (const BatteryEntry& e : entries) {
      if (e.hypothesis != h || e.dimension != d) continue;
      if (!e.result) return "error:" + e.error_kind;
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%.3f(%s)", e.result->tstat,
                    std::string(to_string(e.result->tier)).c_str());
      return buf;
    }
    return "-";
  };
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-12s %-18s %-18s %-18s\n", "Hyp", "V tstat(alpha)",
                "A tstat(alpha)", "D tstat(alpha)");
  out << buf;
  for (HypothesisId h : kAllHypotheses) {
    const std::string name = "H0(" + std::string(hypothesis_label(h)) + ")";
    std::snprintf(buf, sizeof(buf), "%-12s %-18s %-18s %-18s\n", name.c_str(),
                  cell(h, Dimension::valence).c_str(), cell(h, Dimension::arousal).c_str(),
                  cell(h, Dimension::dominance).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace percept
