#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "percept/types.hpp"

namespace percept {

struct FilterReport {
  std::string rule_name;
  std::size_t annotations_removed = 0;
  std::size_t utterances_removed = 0;
  std::size_t raters_removed = 0;
  std::size_t passes = 1;  // fixpoint iterations (shared across rules)
};

struct FilterOptions {
  std::size_t min_annotations_per_utterance = 5;
};

inline constexpr std::string_view kRuleZeroVarianceSessions = "zero_variance_sessions";
inline constexpr std::string_view kRuleInconsistentDemographics = "inconsistent_demographics";
inline constexpr std::string_view kRuleMinAnnotations = "min_annotations";
inline constexpr std::string_view kRuleSingleGender = "single_gender_utterances";

/// Drops every utterance with fewer than k annotations.
std::pair<Dataset, FilterReport> filter_min_annotations(const Dataset& ds,
                                                        std::size_t k = 5);

/// Keeps only utterances with at least one male-rater and one female-rater
/// annotation; rater_gender = other satisfies neither requirement.
std::pair<Dataset, FilterReport> filter_single_gender_utterances(const Dataset& ds);

/// Drops all annotations of any session whose valence, arousal, or dominance
/// values are all equal (population variance exactly zero; a single
/// annotation counts as zero variance).
std::pair<Dataset, FilterReport> filter_zero_variance_sessions(const Dataset& ds);

/// Drops all annotations of raters whose (gender, age, language, country)
/// response differs between sessions; absent compares equal to absent only.
std::pair<Dataset, FilterReport> filter_inconsistent_demographics(const Dataset& ds);

/// Applies all four rules in order (zero-variance sessions, inconsistent
/// demographics, min-annotations, single-gender), evaluating each pass
/// against the dataset as it stood at the start of the pass, and iterates
/// passes until nothing is removed. The output satisfies every rule
/// simultaneously; the returned reports share the pass count and their
/// removal counts partition the removed annotations by first-flagging rule.
std::pair<Dataset, std::vector<FilterReport>> apply_filter_pipeline(
    const Dataset& ds, const FilterOptions& options = {});

nlohmann::ordered_json to_json(const std::vector<FilterReport>& reports);
std::string render_filter_table(const std::vector<FilterReport>& reports);

}  // namespace percept
