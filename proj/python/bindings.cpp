#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"
#include "percept/hypothesis.hpp"
#include "percept/io.hpp"
#include "percept/pair_sampler.hpp"
#include "percept/quality_filter.hpp"
#include "percept/student_t.hpp"
#include "percept/summary.hpp"
#include "percept/synthetic.hpp"

namespace py = pybind11;

namespace {

py::object json_to_py(const nlohmann::ordered_json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(json_to_py(item));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) {
        out[py::str(key)] = json_to_py(value);
      }
      return out;
    }
    default: return py::none();
  }
}

percept::SimConfig config_from_dict(const py::dict& d) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& item : d) {
    const std::string key = py::cast<std::string>(item.first);
    const py::handle v = item.second;
    if (py::isinstance<py::bool_>(v)) j[key] = py::cast<bool>(v);
    else if (py::isinstance<py::int_>(v)) j[key] = py::cast<std::int64_t>(v);
    else if (py::isinstance<py::float_>(v)) j[key] = py::cast<double>(v);
    else if (py::isinstance<py::str>(v)) j[key] = py::cast<std::string>(v);
    else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      std::vector<double> grid;
      for (const py::handle item2 : v) grid.push_back(py::cast<double>(item2));
      j[key] = grid;
    } else {
      throw percept::ConfigError("config key '" + key + "': unsupported value type", key);
    }
  }
  return percept::sim_config_from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rater-corrected hypothesis tests for crowdsourced perceptual annotations";
  m.attr("__version__") = "0.1.0";

  py::register_exception<percept::Error>(m, "PerceptError");

  py::class_<percept::Dataset>(m, "Dataset")
      .def("__len__", [](const percept::Dataset& ds) { return ds.size(); })
      .def_property_readonly("n_utterances",
                             [](const percept::Dataset& ds) { return ds.utterances().size(); })
      .def_property_readonly("n_raters",
                             [](const percept::Dataset& ds) { return ds.raters().size(); })
      .def_property_readonly("provenance",
                             [](const percept::Dataset& ds) { return ds.provenance(); })
      .def("summary", [](const percept::Dataset& ds) {
        return json_to_py(percept::to_json(percept::summary_statistics(ds)));
      });

  py::class_<percept::PairedSample>(m, "PairedSample")
      .def("__len__", [](const percept::PairedSample& ps) { return ps.assignments.size(); })
      .def_readonly("seed", &percept::PairedSample::seed)
      .def_readonly("generator", &percept::PairedSample::generator);

  m.def(
      "parse_annotations",
      [](const std::filesystem::path& path, const std::string& format, bool lenient) {
        percept::ParseOptions options;
        options.format = percept::parse_file_format(format);
        options.lenient = lenient;
        percept::ParseResult result = percept::parse_annotations(path, options);
        py::dict report;
        report["rejected_rows"] = result.report.rejected_rows.size();
        report["duplicate_pair_drops"] = result.report.duplicate_pair_drops;
        report["duplicate_id_drops"] = result.report.duplicate_id_drops;
        return py::make_tuple(std::move(result.dataset), report);
      },
      py::arg("path"), py::arg("format") = "csv", py::arg("lenient") = false);

  m.def("write_annotations_csv", &percept::write_annotations_csv, py::arg("dataset"),
        py::arg("path"));

  m.def(
      "apply_filter_pipeline",
      [](const percept::Dataset& ds, std::size_t min_annotations) {
        percept::FilterOptions options;
        options.min_annotations_per_utterance = min_annotations;
        auto [filtered, reports] = percept::apply_filter_pipeline(ds, options);
        return py::make_tuple(std::move(filtered), json_to_py(percept::to_json(reports)));
      },
      py::arg("dataset"), py::arg("min_annotations") = 5);

  m.def(
      "sample_pairs",
      [](const percept::Dataset& ds, std::uint64_t seed) {
        return percept::sample_pairs(ds, seed);
      },
      py::arg("dataset"), py::arg("seed"));

  m.def(
      "verify_sample",
      [](const percept::PairedSample& ps, const percept::Dataset& ds) {
        percept::VerificationReport report = percept::verify_sample(ps, ds);
        py::dict out;
        out["pass"] = report.pass;
        out["violations"] = report.violations;
        return out;
      },
      py::arg("sample"), py::arg("dataset"));

  m.def("write_paired_sample_csv", &percept::write_paired_sample_csv, py::arg("sample"),
        py::arg("path"));
  m.def("read_paired_sample_csv", &percept::read_paired_sample_csv, py::arg("path"));

  m.def(
      "paired_test",
      [](const percept::PairedSample& ps, const std::string& dimension, int dof,
         bool naive) {
        percept::TestOptions options;
        options.dof = dof;
        options.zero_repetition_counts = naive;
        return json_to_py(
            percept::to_json(percept::paired_test(ps, percept::parse_dimension(dimension),
                                                  options)));
      },
      py::arg("sample"), py::arg("dimension") = "valence", py::arg("dof") = 30,
      py::arg("naive") = false);

  m.def(
      "run_battery",
      [](const percept::Dataset& ds, const percept::PairedSample& ps,
         const std::string& scope) {
        const percept::UnpairedScope s = percept::parse_unpaired_scope(scope);
        return json_to_py(percept::battery_to_json(percept::run_battery(ds, ps, s), s));
      },
      py::arg("dataset"), py::arg("sample"), py::arg("unpaired_scope") = "full");

  m.def(
      "render_battery_table",
      [](const percept::Dataset& ds, const percept::PairedSample& ps,
         const std::string& scope) {
        const percept::UnpairedScope s = percept::parse_unpaired_scope(scope);
        return percept::render_battery_table(percept::run_battery(ds, ps, s));
      },
      py::arg("dataset"), py::arg("sample"), py::arg("unpaired_scope") = "full");

  m.def("p_value", &percept::two_sided_p_value, py::arg("tstat"), py::arg("dof") = 30);
  m.def("student_t_cdf", &percept::student_t_cdf, py::arg("t"), py::arg("dof"));

  m.def(
      "generate_synthetic_dataset",
      [](const py::dict& config, std::uint64_t replication) {
        percept::GeneratedDataset out =
            percept::generate_synthetic_dataset(config_from_dict(config), replication);
        return py::make_tuple(std::move(out.dataset), out.clamp_rate);
      },
      py::arg("config"), py::arg("replication") = 0);

  m.def(
      "simulate",
      [](const py::dict& config, const std::string& experiment) {
        const percept::SimConfig cfg = config_from_dict(config);
        percept::SimReport report;
        if (experiment == "type1") report = percept::type_i_error_experiment(cfg);
        else if (experiment == "power") report = percept::power_experiment(cfg);
        else if (experiment == "variance") report = percept::variance_oracle_check(cfg);
        else {
          throw percept::ConfigError("unknown experiment '" + experiment + "'");
        }
        return json_to_py(percept::to_json(report));
      },
      py::arg("config"), py::arg("experiment") = "type1");
}
