#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "percept/types.hpp"

namespace percept {

struct RaterPair {
  std::string male_rater_id;
  std::string female_rater_id;
  std::vector<std::string> co_annotated;  // utterance ids, sorted
};

/// One (male, female) pair per rater combination with a non-empty set of
/// co-annotated utterances; pairs ordered by (male_rater_id, female_rater_id).
std::vector<RaterPair> build_pair_index(const Dataset& ds);

struct PairedSlot {
  std::string rater_id;
  double valence = 0.0;
  double arousal = 0.0;
  double dominance = 0.0;

  double value(Dimension d) const {
    switch (d) {
      case Dimension::valence: return valence;
      case Dimension::arousal: return arousal;
      default: return dominance;
    }
  }
};

struct PairedUtterance {
  std::string utterance_id;
  PairedSlot male;
  PairedSlot female;
};

struct PairedSample {
  std::vector<PairedUtterance> assignments;  // sorted by utterance_id
  std::uint64_t seed = 0;
  std::string generator;  // pseudorandom algorithm identity
  std::vector<std::string> source_provenance;
};

/// Resamples the dataset down to exactly one male and one female annotation
/// per utterance.
///
/// Normative algorithm (deterministic given the seed):
///   1. Index utterances, raters, and (male, female) pairs in lexicographic
///      id order; each pair holds its co-annotated utterances sorted by id.
///   2. Keep an eligible-pair list, initially all pairs in index order.
///   3. Repeat until every utterance is assigned:
///      a. Draw i uniformly in [0, eligible_count) (rng::bounded).
///      b. Strip already-assigned utterances from that pair's list, keeping
///         order. If the list is empty, remove the pair by swapping in the
///         last eligible pair, and go to (a).
///      c. Draw j uniformly in [0, remaining_count); assign the pair's two
///         annotations to the j-th remaining utterance and mark it assigned.
///      d. If the pair's list became empty, remove it as in (b).
/// The RNG is mt19937_64 seeded via rng::make_stream(seed, 0); every draw
/// consumes the generator exactly as rng::bounded does.
///
/// Throws PreconditionError if some utterance lacks a male or female
/// annotation.
PairedSample sample_pairs(const Dataset& ds, std::uint64_t seed);

struct VerificationReport {
  bool pass = true;
  std::vector<std::string> violations;
};

/// Re-checks every PairedSample invariant against the dataset: coverage of
/// the utterance set, one male and one female slot per utterance, and slot
/// provenance (annotation exists, values match, rater gender matches slot).
VerificationReport verify_sample(const PairedSample& ps, const Dataset& ds);

inline constexpr std::string_view kPairedSampleCsvHeader =
    "utterance_id,male_rater_id,male_valence,male_arousal,male_dominance,"
    "female_rater_id,female_valence,female_arousal,female_dominance";

void write_paired_sample_csv(const PairedSample& ps, const std::filesystem::path& path);

/// Sidecar JSON with the seed, generator identity, and source provenance.
void write_sample_provenance(const PairedSample& ps, const std::filesystem::path& path);

PairedSample read_paired_sample_csv(const std::filesystem::path& path);

}  // namespace percept
