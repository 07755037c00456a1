#include "percept/pair_sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "percept/io.hpp"
#include "percept/rng.hpp"

namespace percept {

namespace {

struct SamplerIndex {
  std::vector<std::string> utterance_ids;  // sorted
  std::unordered_map<std::string, std::uint32_t> utterance_index;
  // (rater_id, utterance index) -> annotation row (smallest annotation_id wins)
  std::unordered_map<std::string, std::size_t> annotation_row;

  static std::string key(const std::string& rater, std::uint32_t utt) {
    return rater + '\x1f' + std::to_string(utt);
  }
};

SamplerIndex build_index(const Dataset& ds) {
  SamplerIndex idx;
  idx.utterance_ids.reserve(ds.utterances().size());
  for (const auto& [id, ui] : ds.utterances()) idx.utterance_ids.push_back(id);
  for (std::uint32_t i = 0; i < idx.utterance_ids.size(); ++i) {
    idx.utterance_index[idx.utterance_ids[i]] = i;
  }
  for (std::size_t row = 0; row < ds.annotations().size(); ++row) {
    const AnnotationRecord& a = ds.annotations()[row];
    // rows are in annotation_id order, so the first one seen wins
    idx.annotation_row.emplace(
        SamplerIndex::key(a.rater_id, idx.utterance_index.at(a.utterance_id)), row);
  }
  return idx;
}

struct IndexedPair {
  std::string male_rater_id;
  std::string female_rater_id;
  std::vector<std::uint32_t> utterances;  // sorted by utterance id order
};

std::vector<IndexedPair> build_indexed_pairs(const Dataset& ds, const SamplerIndex& idx) {
  // pair key -> utterance indices; map keeps (male, female) id order canonical
  std::map<std::pair<std::string, std::string>, std::vector<std::uint32_t>> co;
  for (const auto& [utt_id, ui] : ds.utterances()) {
    std::vector<const std::string*> males, females;
    for (std::size_t row : ui.annotation_rows) {
      const AnnotationRecord& a = ds.annotations()[row];
      if (a.rater_gender == RaterGender::male) males.push_back(&a.rater_id);
      else if (a.rater_gender == RaterGender::female) females.push_back(&a.rater_id);
    }
    const std::uint32_t u = idx.utterance_index.at(utt_id);
    for (const std::string* m : males) {
      for (const std::string* f : females) {
        co[{*m, *f}].push_back(u);
      }
    }
  }
  std::vector<IndexedPair> pairs;
  pairs.reserve(co.size());
  for (auto& [key, utts] : co) {
    std::sort(utts.begin(), utts.end());
    utts.erase(std::unique(utts.begin(), utts.end()), utts.end());
    pairs.push_back({key.first, key.second, std::move(utts)});
  }
  return pairs;
}

}  // namespace

std::vector<RaterPair> build_pair_index(const Dataset& ds) {
  SamplerIndex idx = build_index(ds);
  std::vector<RaterPair> out;
  for (IndexedPair& p : build_indexed_pairs(ds, idx)) {
    RaterPair rp;
    rp.male_rater_id = std::move(p.male_rater_id);
    rp.female_rater_id = std::move(p.female_rater_id);
    rp.co_annotated.reserve(p.utterances.size());
    for (std::uint32_t u : p.utterances) rp.co_annotated.push_back(idx.utterance_ids[u]);
    out.push_back(std::move(rp));
  }
  return out;
}

PairedSample sample_pairs(const Dataset& ds, std::uint64_t seed) {
  SamplerIndex idx = build_index(ds);

  for (const auto& [utt_id, ui] : ds.utterances()) {
    bool has_male = false, has_female = false;
    for (std::size_t row : ui.annotation_rows) {
      RaterGender g = ds.annotations()[row].rater_gender;
      has_male |= g == RaterGender::male;
      has_female |= g == RaterGender::female;
    }
    if (!has_male || !has_female) {
      throw PreconditionError("utterance '" + utt_id +
                              "' lacks a male or female annotation; run the quality "
                              "filter before sampling");
    }
  }

  std::vector<IndexedPair> pairs = build_indexed_pairs(ds, idx);
  const std::size_t n_utterances = idx.utterance_ids.size();

  std::vector<std::uint32_t> eligible(pairs.size());
  for (std::uint32_t i = 0; i < pairs.size(); ++i) eligible[i] = i;

  std::vector<bool> assigned(n_utterances, false);
  std::vector<std::pair<const IndexedPair*, std::size_t>> chosen(n_utterances,
                                                                 {nullptr, 0});
  std::mt19937_64 gen = rng::make_stream(seed, 0);
  std::size_t n_assigned = 0;

  while (n_assigned < n_utterances) {
    if (eligible.empty()) {
      throw PreconditionError("pair pool exhausted before covering all utterances");
    }
    const std::size_t slot = rng::bounded(gen, eligible.size());
    IndexedPair& pair = pairs[eligible[slot]];

    // lazily strip utterances assigned since this pair was last touched
    auto& utts = pair.utterances;
    utts.erase(std::remove_if(utts.begin(), utts.end(),
                              [&](std::uint32_t u) { return assigned[u]; }),
               utts.end());
    if (utts.empty()) {
      eligible[slot] = eligible.back();
      eligible.pop_back();
      continue;
    }

    const std::size_t pick = rng::bounded(gen, utts.size());
    const std::uint32_t u = utts[pick];
    assigned[u] = true;
    chosen[u] = {&pair, 0};
    ++n_assigned;
    utts.erase(utts.begin() + static_cast<std::ptrdiff_t>(pick));
    if (utts.empty()) {
      eligible[slot] = eligible.back();
      eligible.pop_back();
    }
  }

  PairedSample ps;
  ps.seed = seed;
  ps.generator = std::string(rng::kGeneratorId);
  ps.source_provenance = ds.provenance();
  ps.source_provenance.push_back("sample:seed=" + std::to_string(seed));
  ps.assignments.reserve(n_utterances);
  for (std::uint32_t u = 0; u < n_utterances; ++u) {
    const IndexedPair* pair = chosen[u].first;
    const AnnotationRecord& male =
        ds.annotations()[idx.annotation_row.at(SamplerIndex::key(pair->male_rater_id, u))];
    const AnnotationRecord& female =
        ds.annotations()[idx.annotation_row.at(SamplerIndex::key(pair->female_rater_id, u))];
    PairedUtterance pu;
    pu.utterance_id = idx.utterance_ids[u];
    pu.male = {male.rater_id, male.valence, male.arousal, male.dominance};
    pu.female = {female.rater_id, female.valence, female.arousal, female.dominance};
    ps.assignments.push_back(std::move(pu));
  }
  return ps;
}

VerificationReport verify_sample(const PairedSample& ps, const Dataset& ds) {
  VerificationReport report;
  auto fail = [&](std::string msg) {
    report.pass = false;
    report.violations.push_back(std::move(msg));
  };

  SamplerIndex idx = build_index(ds);
  std::vector<bool> covered(idx.utterance_ids.size(), false);

  for (const PairedUtterance& pu : ps.assignments) {
    auto it = idx.utterance_index.find(pu.utterance_id);
    if (it == idx.utterance_index.end()) {
      fail("extra-utterance: '" + pu.utterance_id + "' not in dataset");
      continue;
    }
    if (covered[it->second]) {
      fail("duplicate-utterance: '" + pu.utterance_id + "' assigned twice");
      continue;
    }
    covered[it->second] = true;

    struct SlotCheck {
      const PairedSlot* slot;
      RaterGender expected;
      const char* name;
    };
    for (const SlotCheck& sc : {SlotCheck{&pu.male, RaterGender::male, "male"},
                                SlotCheck{&pu.female, RaterGender::female, "female"}}) {
      auto row_it =
          idx.annotation_row.find(SamplerIndex::key(sc.slot->rater_id, it->second));
      if (row_it == idx.annotation_row.end()) {
        fail(std::string("unknown-annotation: rater '") + sc.slot->rater_id +
             "' did not annotate '" + pu.utterance_id + "'");
        continue;
      }
      const AnnotationRecord& a = ds.annotations()[row_it->second];
      if (a.rater_gender != sc.expected) {
        fail(std::string("gender-slot mismatch: rater '") + sc.slot->rater_id + "' in the " +
             sc.name + " slot of '" + pu.utterance_id + "' has gender " +
             std::string(to_string(a.rater_gender)));
      }
      if (a.valence != sc.slot->valence || a.arousal != sc.slot->arousal ||
          a.dominance != sc.slot->dominance) {
        fail(std::string("value-mismatch: slot values for rater '") + sc.slot->rater_id +
             "' on '" + pu.utterance_id + "' differ from the dataset");
      }
    }
  }

  for (std::size_t u = 0; u < covered.size(); ++u) {
    if (!covered[u]) fail("coverage: utterance '" + idx.utterance_ids[u] + "' unassigned");
  }
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line, const char* col) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw SchemaError(line, col, "not a plain decimal number: '" + s + "'");
  }
  return v;
}

}  // namespace

void write_paired_sample_csv(const PairedSample& ps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << kPairedSampleCsvHeader << '\n';
  for (const PairedUtterance& pu : ps.assignments) {
    out << pu.utterance_id << ',' << pu.male.rater_id << ',' << format_double(pu.male.valence)
        << ',' << format_double(pu.male.arousal) << ',' << format_double(pu.male.dominance)
        << ',' << pu.female.rater_id << ',' << format_double(pu.female.valence) << ','
        << format_double(pu.female.arousal) << ',' << format_double(pu.female.dominance)
        << '\n';
  }
  if (!out) throw FileError("write failed for '" + path.string() + "'");
}

void write_sample_provenance(const PairedSample& ps, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["seed"] = ps.seed;
  j["generator"] = ps.generator;
  j["source_provenance"] = ps.source_provenance;
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

PairedSample read_paired_sample_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(1, "", "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPairedSampleCsvHeader) {
    throw SchemaError(1, "", "header row does not match the paired-sample schema");
  }
  PairedSample ps;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 9) {
      throw SchemaError(lineno, "", "expected 9 fields, got " + std::to_string(f.size()));
    }
    PairedUtterance pu;
    pu.utterance_id = f[0];
    pu.male = {f[1], parse_double(f[2], lineno, "male_valence"),
               parse_double(f[3], lineno, "male_arousal"),
               parse_double(f[4], lineno, "male_dominance")};
    pu.female = {f[5], parse_double(f[6], lineno, "female_valence"),
                 parse_double(f[7], lineno, "female_arousal"),
                 parse_double(f[8], lineno, "female_dominance")};
    ps.assignments.push_back(std::move(pu));
  }
  std::sort(ps.assignments.begin(), ps.assignments.end(),
            [](const PairedUtterance& a, const PairedUtterance& b) {
              return a.utterance_id < b.utterance_id;
            });

  auto sidecar = path;
  sidecar.replace_extension(".provenance.json");
  std::ifstream sc(sidecar);
  if (sc) {
    try {
      nlohmann::json j = nlohmann::json::parse(sc);
      if (j.contains("seed")) ps.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("generator")) ps.generator = j["generator"].get<std::string>();
      if (j.contains("source_provenance")) {
        ps.source_provenance = j["source_provenance"].get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception&) {
      // sidecar is advisory; a malformed one does not invalidate the sample
    }
  }
  return ps;
}

}  // namespace percept
