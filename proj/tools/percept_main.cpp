#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "percept/hypothesis.hpp"
#include "percept/io.hpp"
#include "percept/manifest.hpp"
#include "percept/pair_sampler.hpp"
#include "percept/quality_filter.hpp"
#include "percept/summary.hpp"
#include "percept/synthetic.hpp"
#include "percept/threading.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInternal = 3;

struct GlobalOptions {
  std::size_t threads = 0;
};

void write_json_file(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw percept::FileError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

percept::RunManifest start_manifest(const std::string& command) {
  percept::RunManifest m;
  m.command = command;
  m.started_at = percept::now_iso8601_utc();
  return m;
}

void finish_manifest(percept::RunManifest& m, const std::string& out_path) {
  m.finished_at = percept::now_iso8601_utc();
  percept::write_manifest(m, out_path + ".manifest.json");
}

int cmd_ingest(const std::string& annotations, const std::string& format,
               const std::string& out, bool lenient) {
  percept::RunManifest manifest = start_manifest("ingest");
  manifest.inputs = {annotations};

  percept::ParseOptions options;
  options.format = percept::parse_file_format(format);
  options.lenient = lenient;
  percept::ParseResult parsed = percept::parse_annotations(annotations, options);

  for (const percept::RowIssue& issue : parsed.report.rejected_rows) {
    std::cerr << "warning: rejected line " << issue.line << " (" << issue.column
              << "): " << issue.reason << "\n";
  }
  if (parsed.report.duplicate_id_drops > 0) {
    std::cerr << "warning: dropped " << parsed.report.duplicate_id_drops
              << " rows with duplicate annotation_id\n";
  }
  if (parsed.report.duplicate_pair_drops > 0) {
    std::cerr << "warning: dropped " << parsed.report.duplicate_pair_drops
              << " duplicate (rater, utterance) responses (kept earliest timestamp)\n";
  }

  percept::write_annotations_csv(parsed.dataset, out);
  std::cout << percept::render_summary_table(percept::summary_statistics(parsed.dataset));

  manifest.outputs = {out};
  finish_manifest(manifest, out);
  return kExitOk;
}

int cmd_filter(const std::string& in, const std::string& out, std::size_t min_annotations,
               const std::string& report_path) {
  percept::RunManifest manifest = start_manifest("filter");
  manifest.inputs = {in};

  percept::ParseOptions options;
  options.format = percept::FileFormat::csv;
  percept::ParseResult parsed = percept::parse_annotations(in, options);

  percept::FilterOptions filter_options;
  filter_options.min_annotations_per_utterance = min_annotations;
  auto [filtered, reports] = percept::apply_filter_pipeline(parsed.dataset, filter_options);

  std::cout << percept::render_filter_table(reports);
  percept::write_annotations_csv(filtered, out);
  manifest.outputs = {out};
  if (!report_path.empty()) {
    write_json_file(percept::to_json(reports), report_path);
    manifest.outputs.push_back(report_path);
  }
  finish_manifest(manifest, out);
  return kExitOk;
}

int cmd_sample(const std::string& in, const std::string& out, std::uint64_t seed) {
  percept::RunManifest manifest = start_manifest("sample");
  manifest.inputs = {in};
  manifest.seed = seed;

  percept::ParseOptions options;
  options.format = percept::FileFormat::csv;
  percept::ParseResult parsed = percept::parse_annotations(in, options);

  percept::PairedSample ps = percept::sample_pairs(parsed.dataset, seed);
  percept::VerificationReport verification = percept::verify_sample(ps, parsed.dataset);
  if (!verification.pass) {
    std::cerr << "error: sample verification failed; refusing to write output\n";
    for (const std::string& v : verification.violations) {
      std::cerr << "  violation: " << v << "\n";
    }
    return kExitInternal;
  }

  percept::write_paired_sample_csv(ps, out);
  std::filesystem::path sidecar(out);
  sidecar.replace_extension(".provenance.json");
  percept::write_sample_provenance(ps, sidecar);

  std::cout << "sampled " << ps.assignments.size() << " utterances ("
            << 2 * ps.assignments.size() << " annotations, seed " << seed << ")\n";
  manifest.outputs = {out, sidecar.string()};
  finish_manifest(manifest, out);
  return kExitOk;
}

int cmd_test(const std::string& data, const std::string& sample,
             const std::string& hypothesis, const std::string& dimension,
             const std::string& scope_name, const std::string& out) {
  percept::ParseOptions options;
  options.format = percept::FileFormat::csv;
  percept::ParseResult parsed = percept::parse_annotations(data, options);
  percept::PairedSample ps = percept::read_paired_sample_csv(sample);
  percept::UnpairedScope scope = percept::parse_unpaired_scope(scope_name);

  std::vector<percept::BatteryEntry> entries =
      percept::run_battery(parsed.dataset, ps, scope);

  const bool single_cell = hypothesis != "all" || dimension != "all";
  if (single_cell) {
    std::optional<percept::HypothesisId> want_h;
    std::optional<percept::Dimension> want_d;
    if (hypothesis != "all") want_h = percept::parse_hypothesis(hypothesis);
    if (dimension != "all") want_d = percept::parse_dimension(dimension);
    std::vector<percept::BatteryEntry> selected;
    for (const percept::BatteryEntry& e : entries) {
      if (want_h && e.hypothesis != *want_h) continue;
      if (want_d && e.dimension != *want_d) continue;
      selected.push_back(e);
    }
    entries = std::move(selected);
  }

  std::cout << percept::render_battery_table(entries);
  nlohmann::ordered_json j = percept::battery_to_json(entries, scope);
  if (!out.empty()) {
    write_json_file(j, out);
    percept::RunManifest manifest = start_manifest("test");
    manifest.inputs = {data, sample};
    manifest.outputs = {out};
    manifest.finished_at = percept::now_iso8601_utc();
    percept::write_manifest(manifest, out + ".manifest.json");
  } else {
    std::cout << j.dump(2) << '\n';
  }

  if (single_cell) {
    for (const percept::BatteryEntry& e : entries) {
      if (!e.result) {
        std::cerr << "error: requested cell failed (" << e.error_kind
                  << "): " << e.error_message << "\n";
        return kExitValidation;
      }
    }
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& experiment,
                 const std::string& out, const std::string& tstats_csv,
                 const GlobalOptions& global) {
  percept::RunManifest manifest = start_manifest("simulate");
  manifest.inputs = {config_path};
  manifest.config_digest = percept::digest_file(config_path);

  percept::SimConfig cfg = percept::load_sim_config(config_path);
  if (global.threads > 0) cfg.threads = global.threads;
  manifest.seed = cfg.seed;

  percept::SimReport report;
  if (experiment == "type1") {
    report = percept::type_i_error_experiment(cfg);
  } else if (experiment == "power") {
    report = percept::power_experiment(cfg);
  } else if (experiment == "variance") {
    report = percept::variance_oracle_check(cfg);
  } else {
    throw percept::ConfigError("unknown experiment '" + experiment +
                               "' (expected type1, power, or variance)");
  }

  std::cout << percept::render_sim_summary(report);
  nlohmann::ordered_json j = percept::to_json(report);
  j["config"] = percept::to_json(cfg);
  write_json_file(j, out);
  manifest.outputs = {out};
  if (!tstats_csv.empty()) {
    percept::write_tstats_csv(report, tstats_csv);
    manifest.outputs.push_back(tstats_csv);
  }
  finish_manifest(manifest, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rater-corrected hypothesis tests for crowdsourced perceptual annotations"};
  app.set_version_flag("--version", std::string(percept::kToolVersion));
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "worker threads (default: PERCEPT_THREADS or all cores)");

  std::string annotations, format = "csv", out, in, data, sample;
  std::string hypothesis = "all", dimension = "all", scope = "full";
  std::string config_path, experiment, report_path, tstats_csv;
  bool lenient = false;
  std::uint64_t seed = 0;
  std::size_t min_annotations = 5;

  CLI::App* ingest = app.add_subcommand("ingest", "parse and validate an annotation file");
  ingest->add_option("--annotations", annotations, "input annotation file")->required();
  ingest->add_option("--format", format, "csv or jsonl");
  ingest->add_option("--out", out, "canonical dataset CSV to write")->required();
  ingest->add_flag("--lenient", lenient, "collect bad rows instead of failing");

  CLI::App* filter = app.add_subcommand("filter", "apply the quality-filter pipeline");
  filter->add_option("--in", in, "dataset CSV")->required();
  filter->add_option("--out", out, "filtered dataset CSV")->required();
  filter->add_option("--min-annotations", min_annotations,
                     "minimum annotations per utterance");
  filter->add_option("--report", report_path, "write the per-rule report JSON here");

  CLI::App* sample_cmd =
      app.add_subcommand("sample", "resample to one (male, female) pair per utterance");
  sample_cmd->add_option("--in", in, "filtered dataset CSV")->required();
  sample_cmd->add_option("--out", out, "paired-sample CSV")->required();
  sample_cmd->add_option("--seed", seed, "sampling seed")->required();

  CLI::App* test = app.add_subcommand("test", "run the hypothesis battery");
  test->add_option("--data", data, "filtered dataset CSV")->required();
  test->add_option("--sample", sample, "paired-sample CSV")->required();
  test->add_option("--hypothesis", hypothesis, "R|S=a, R|S=f, R|S=m, S|R=m, S|R=f, or all");
  test->add_option("--dimension", dimension, "V, A, D, or all");
  test->add_option("--unpaired-scope", scope, "full or sampled");
  test->add_option("--out", out, "write battery JSON here");

  CLI::App* simulate = app.add_subcommand("simulate", "synthetic calibration experiments");
  simulate->add_option("--config", config_path, "SimConfig JSON or key=value file")
      ->required();
  simulate->add_option("--experiment", experiment, "type1, power, or variance")->required();
  simulate->add_option("--out", out, "write the report JSON here")->required();
  simulate->add_option("--tstats-csv", tstats_csv, "dump per-replication tstats");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(annotations, format, out, lenient);
    if (filter->parsed()) return cmd_filter(in, out, min_annotations, report_path);
    if (sample_cmd->parsed()) return cmd_sample(in, out, seed);
    if (test->parsed()) return cmd_test(data, sample, hypothesis, dimension, scope, out);
    if (simulate->parsed()) {
      return cmd_simulate(config_path, experiment, out, tstats_csv, global);
    }
  } catch (const percept::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const percept::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const percept::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const percept::DuplicateAnnotationIdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const percept::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const percept::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
