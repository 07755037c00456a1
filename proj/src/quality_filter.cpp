#include "percept/quality_filter.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace percept {

namespace {

enum RuleIndex {
  kZeroVariance = 0,
  kInconsistentDemographics = 1,
  kMinAnnotations = 2,
  kSingleGender = 3,
  kRuleCount = 4,
};

std::string_view rule_name(std::size_t rule) {
  switch (rule) {
    case kZeroVariance: return kRuleZeroVarianceSessions;
    case kInconsistentDemographics: return kRuleInconsistentDemographics;
    case kMinAnnotations: return kRuleMinAnnotations;
    default: return kRuleSingleGender;
  }
}

// Flag sets are computed against a fixed snapshot of the dataset.
std::vector<bool> flag_zero_variance_sessions(const Dataset& ds) {
  std::vector<bool> flagged(ds.size(), false);
  for (const auto& [session, rows] : ds.sessions()) {
    bool flat = false;
    for (Dimension d : kAllDimensions) {
      bool all_equal = true;
      const double first = ds.annotations()[rows.front()].value(d);
      for (std::size_t row : rows) {
        if (ds.annotations()[row].value(d) != first) {
          all_equal = false;
          break;
        }
      }
      if (all_equal) {
        flat = true;
        break;
      }
    }
    if (flat) {
      for (std::size_t row : rows) flagged[row] = true;
    }
  }
  return flagged;
}

std::vector<bool> flag_inconsistent_demographics(const Dataset& ds) {
  std::vector<bool> flagged(ds.size(), false);
  for (const auto& [rater, rp] : ds.raters()) {
    const AnnotationRecord& first = ds.annotations()[rp.annotation_rows.front()];
    const Demographics ref{first.rater_gender, first.rater_age, first.rater_language,
                           first.rater_country};
    bool inconsistent = false;
    for (std::size_t row : rp.annotation_rows) {
      const AnnotationRecord& a = ds.annotations()[row];
      if (Demographics{a.rater_gender, a.rater_age, a.rater_language, a.rater_country} != ref) {
        inconsistent = true;
        break;
      }
    }
    if (inconsistent) {
      for (std::size_t row : rp.annotation_rows) flagged[row] = true;
    }
  }
  return flagged;
}

std::vector<bool> flag_min_annotations(const Dataset& ds, std::size_t k) {
  std::vector<bool> flagged(ds.size(), false);
  for (const auto& [utt, ui] : ds.utterances()) {
    if (ui.annotation_rows.size() < k) {
      for (std::size_t row : ui.annotation_rows) flagged[row] = true;
    }
  }
  return flagged;
}

std::vector<bool> flag_single_gender(const Dataset& ds) {
  std::vector<bool> flagged(ds.size(), false);
  for (const auto& [utt, ui] : ds.utterances()) {
    bool has_male = false, has_female = false;
    for (std::size_t row : ui.annotation_rows) {
      switch (ds.annotations()[row].rater_gender) {
        case RaterGender::male: has_male = true; break;
        case RaterGender::female: has_female = true; break;
        default: break;  // 'other' satisfies neither requirement
      }
    }
    if (!has_male || !has_female) {
      for (std::size_t row : ui.annotation_rows) flagged[row] = true;
    }
  }
  return flagged;
}

std::vector<bool> compute_flags(const Dataset& ds, std::size_t rule,
                                const FilterOptions& options) {
  switch (rule) {
    case kZeroVariance: return flag_zero_variance_sessions(ds);
    case kInconsistentDemographics: return flag_inconsistent_demographics(ds);
    case kMinAnnotations: return flag_min_annotations(ds, options.min_annotations_per_utterance);
    default: return flag_single_gender(ds);
  }
}

// Runs one pipeline pass over a snapshot: each rule's flags are evaluated on
// the snapshot, a removed annotation is attributed to the first rule in
// order that flagged it, and an utterance or rater counts as removed by the
// rule whose attributed rows emptied it.
struct PassOutcome {
  std::vector<bool> remove;
  std::size_t removed_count = 0;
};

PassOutcome run_pass(const Dataset& ds, const std::vector<std::size_t>& rules,
                     const FilterOptions& options, std::vector<FilterReport>& reports) {
  PassOutcome outcome;
  outcome.remove.assign(ds.size(), false);

  std::vector<int> attributed(ds.size(), -1);
  std::vector<std::vector<bool>> flags(reports.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    flags[r] = compute_flags(ds, rules[r], options);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (flags[r][i] && attributed[i] < 0) attributed[i] = static_cast<int>(r);
    }
  }

  std::map<std::string, std::size_t> utt_remaining, rater_remaining;
  for (const auto& [id, ui] : ds.utterances()) utt_remaining[id] = ui.annotation_rows.size();
  for (const auto& [id, rp] : ds.raters()) rater_remaining[id] = rp.annotation_rows.size();

  for (std::size_t r = 0; r < rules.size(); ++r) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (attributed[i] != static_cast<int>(r)) continue;
      outcome.remove[i] = true;
      outcome.removed_count++;
      reports[r].annotations_removed++;
      const AnnotationRecord& a = ds.annotations()[i];
      if (--utt_remaining[a.utterance_id] == 0) reports[r].utterances_removed++;
      if (--rater_remaining[a.rater_id] == 0) reports[r].raters_removed++;
    }
  }
  return outcome;
}

std::pair<Dataset, FilterReport> apply_single_rule(const Dataset& ds, std::size_t rule,
                                                   const FilterOptions& options) {
  std::vector<FilterReport> reports{FilterReport{std::string(rule_name(rule))}};
  PassOutcome outcome = run_pass(ds, {rule}, options, reports);
  if (outcome.removed_count == 0) {
    return {ds.with_provenance("filter:" + reports[0].rule_name + ":removed=0"), reports[0]};
  }
  std::vector<bool> keep(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) keep[i] = !outcome.remove[i];
  Dataset filtered = ds.subset(keep, "filter:" + reports[0].rule_name + ":removed=" +
                                         std::to_string(outcome.removed_count));
  return {std::move(filtered), reports[0]};
}

}  // namespace

std::pair<Dataset, FilterReport> filter_min_annotations(const Dataset& ds, std::size_t k) {
  if (k < 1) throw PreconditionError("min-annotations threshold must be >= 1");
  FilterOptions options;
  options.min_annotations_per_utterance = k;
  return apply_single_rule(ds, kMinAnnotations, options);
}

std::pair<Dataset, FilterReport> filter_single_gender_utterances(const Dataset& ds) {
  return apply_single_rule(ds, kSingleGender, {});
}

std::pair<Dataset, FilterReport> filter_zero_variance_sessions(const Dataset& ds) {
  return apply_single_rule(ds, kZeroVariance, {});
}

std::pair<Dataset, FilterReport> filter_inconsistent_demographics(const Dataset& ds) {
  return apply_single_rule(ds, kInconsistentDemographics, {});
}

std::pair<Dataset, std::vector<FilterReport>> apply_filter_pipeline(
    const Dataset& ds, const FilterOptions& options) {
  std::vector<std::size_t> rules = {kZeroVariance, kInconsistentDemographics,
                                    kMinAnnotations, kSingleGender};
  std::vector<FilterReport> reports;
  reports.reserve(rules.size());
  for (std::size_t rule : rules) reports.push_back({std::string(rule_name(rule))});

  Dataset current = ds;
  std::size_t passes = 0;
  std::size_t total_removed = 0;
  for (;;) {
    ++passes;
    PassOutcome outcome = run_pass(current, rules, options, reports);
    if (outcome.removed_count == 0) break;
    total_removed += outcome.removed_count;
    std::vector<bool> keep(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) keep[i] = !outcome.remove[i];
    current = current.subset(keep, "filter:pass=" + std::to_string(passes) +
                                       ":removed=" + std::to_string(outcome.removed_count));
  }
  for (auto& r : reports) r.passes = passes;
  current = current.with_provenance("filter:fixpoint:passes=" + std::to_string(passes) +
                                    ":removed=" + std::to_string(total_removed));
  return {std::move(current), std::move(reports)};
}

nlohmann::ordered_json to_json(const std::vector<FilterReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const FilterReport& r : reports) {
    nlohmann::ordered_json j;
    j["rule"] = r.rule_name;
    j["annotations_removed"] = r.annotations_removed;
    j["utterances_removed"] = r.utterances_removed;
    j["raters_removed"] = r.raters_removed;
    j["passes"] = r.passes;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string render_filter_table(const std::vector<FilterReport>& reports) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-28s %12s %12s %8s\n", "rule", "annotations",
                "utterances", "raters");
  out << buf;
  std::size_t total = 0;
  for (const FilterReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-28s %12zu %12zu %8zu\n", r.rule_name.c_str(),
                  r.annotations_removed, r.utterances_removed, r.raters_removed);
    out << buf;
    total += r.annotations_removed;
  }
  std::snprintf(buf, sizeof(buf), "%-28s %12zu  (passes: %zu)\n", "total removed", total,
                reports.empty() ? 1 : reports.front().passes);
  out << buf;
  return out.str();
}

}  // namespace percept
