// Python bindings for the library core. Exposes the validated config,
// the closed-form solution and its queries, the chain oracle, and the
// simulator, so the package can drive everything the CLI can.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "hetq/closed_form.hpp"
#include "hetq/ctmc.hpp"
#include "hetq/model.hpp"
#include "hetq/sim.hpp"

namespace py = pybind11;
using namespace hetq;

namespace {

std::string config_repr(const SystemConfig& config) {
  std::ostringstream out;
  out << "SystemConfig(lambda_=" << config.lambda() << ", mu=[";
  for (std::size_t j = 0; j < config.mu().size(); ++j) {
    if (j) out << ", ";
    out << config.mu()[j];
  }
  out << "])";
  return out.str();
}

py::dict report_dict(const MetricsReport& report) {
  py::dict out;
  out["p0"] = report.p0;
  out["rho"] = report.rho;
  out["busy"] = report.busy;
  out["busy_idle"] = report.busy_idle;
  out["effective_rate"] = report.effective_rate;
  out["prob_all_busy"] = report.prob_all_busy;
  out["p_k"] = report.p_k;
  out["mean_customers"] = report.mean_customers;
  out["mean_sojourn"] = report.mean_sojourn;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Steady-state analysis of M|M|n queues with heterogeneous servers "
      "and uninformed (random-among-idle) routing";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ModelError& err) {
      PyErr_SetString(PyExc_ValueError, err.what());
    }
  });

  py::class_<SystemConfig>(m, "SystemConfig",
                           "Validated arrival rate and per-server service "
                           "rates (lambda < sum(mu) enforced)")
      .def(py::init<double, std::vector<double>>(), py::arg("lambda_"),
           py::arg("mu"))
      .def_property_readonly("lambda_", &SystemConfig::lambda)
      .def_property_readonly("mu", &SystemConfig::mu)
      .def_property_readonly("servers", &SystemConfig::servers)
      .def_property_readonly("mu_total", &SystemConfig::mu_total)
      .def_property_readonly("rho", &SystemConfig::rho)
      .def("__eq__",
           [](const SystemConfig& a, const SystemConfig& b) { return a == b; })
      .def("__repr__", &config_repr);

  py::class_<BoundaryState>(m, "BoundaryState",
                            "Set of busy servers with an empty queue")
      .def(py::init<std::vector<std::size_t>>(), py::arg("busy"))
      .def_static("from_mask", &BoundaryState::from_mask, py::arg("mask"))
      .def_static("all_busy", &BoundaryState::all_busy, py::arg("n"))
      .def_property_readonly("busy", &BoundaryState::busy)
      .def_property_readonly("count", &BoundaryState::count)
      .def("contains", &BoundaryState::contains, py::arg("server"))
      .def("mask", &BoundaryState::mask);

  py::class_<PairVerdict>(m, "PairVerdict",
                          "Inequality margins for one fast/slow server pair")
      .def_readonly("faster", &PairVerdict::faster)
      .def_readonly("slower", &PairVerdict::slower)
      .def_readonly("busy_margin", &PairVerdict::busy_margin)
      .def_readonly("rate_margin", &PairVerdict::rate_margin)
      .def_readonly("sandwich_lower_margin", &PairVerdict::sandwich_lower_margin)
      .def("holds", &PairVerdict::holds);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("p0", &MetricsReport::p0)
      .def_readonly("rho", &MetricsReport::rho)
      .def_readonly("busy", &MetricsReport::busy)
      .def_readonly("busy_idle", &MetricsReport::busy_idle)
      .def_readonly("effective_rate", &MetricsReport::effective_rate)
      .def_readonly("prob_all_busy", &MetricsReport::prob_all_busy)
      .def_readonly("p_k", &MetricsReport::p_k)
      .def_readonly("mean_customers", &MetricsReport::mean_customers)
      .def_readonly("mean_sojourn", &MetricsReport::mean_sojourn)
      .def("to_dict", &report_dict);

  py::class_<StationaryDistribution>(m, "StationaryDistribution")
      .def_property_readonly("p0", &StationaryDistribution::p0)
      .def_property_readonly("log_p0", &StationaryDistribution::log_p0)
      .def_property_readonly("rho", &StationaryDistribution::rho)
      .def_property_readonly("level_probs",
                             &StationaryDistribution::level_probs)
      .def_property_readonly("log_domain", &StationaryDistribution::log_domain)
      .def_property_readonly("config", &StationaryDistribution::config);

  m.def("validate", &validate, py::arg("lambda_"), py::arg("mu"),
        "Checks rates and returns the validated config");
  m.def("solve", &solve, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Closed-form stationary distribution");
  m.def("solve_in_domain", &solve_in_domain, py::arg("config"),
        py::arg("log_domain"), py::call_guard<py::gil_scoped_release>());

  m.def("boundary_state_prob", &boundary_state_prob, py::arg("dist"),
        py::arg("state"));
  m.def(
      "boundary_state_prob",
      [](const StationaryDistribution& dist, std::vector<std::size_t> busy) {
        return boundary_state_prob(dist, BoundaryState(std::move(busy)));
      },
      py::arg("dist"), py::arg("busy"));
  m.def("tail_prob", &tail_prob, py::arg("dist"), py::arg("queue_len"));
  m.def("busy_probability", &busy_probability, py::arg("dist"), py::arg("l"));
  m.def("busy_idle_probability", &busy_idle_probability, py::arg("dist"),
        py::arg("l"), py::arg("m"));
  m.def("prob_all_busy", &prob_all_busy, py::arg("dist"));
  m.def("effective_rate", &effective_rate, py::arg("dist"), py::arg("l"));
  m.def("metrics", &metrics, py::arg("dist"),
        py::call_guard<py::gil_scoped_release>());
  m.def("theorem_check", &theorem_check, py::arg("dist"),
        "Margins of the busy/effective-rate orderings for every "
        "strictly-ordered server pair");
  m.def("report_entries", &report_entries, py::arg("report"),
        "Flat (name, value) view of a report");

  m.def(
      "oracle_metrics",
      [](const SystemConfig& config, std::optional<int> truncation) {
        py::gil_scoped_release release;
        return oracle_metrics(config, truncation);
      },
      py::arg("config"), py::arg("truncation") = py::none(),
      "Independent metrics from the truncated-chain linear solve");
  m.def("balance_residual", &balance_residual, py::arg("config"),
        py::arg("dist"), py::call_guard<py::gil_scoped_release>(),
        "Largest relative violation of the balance equations");
  m.def("default_truncation", &StateSpace::default_truncation,
        py::arg("config"));

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init([](const SystemConfig& system, double horizon,
                       double warmup_fraction, int batches,
                       std::uint64_t seed) {
             return SimConfig{system, horizon, warmup_fraction, batches, seed};
           }),
           py::arg("system"), py::arg("horizon") = 1.0e6,
           py::arg("warmup_fraction") = 0.1, py::arg("batches") = 20,
           py::arg("seed") = 1)
      .def_readwrite("system", &SimConfig::system)
      .def_readwrite("horizon", &SimConfig::horizon)
      .def_readwrite("warmup_fraction", &SimConfig::warmup_fraction)
      .def_readwrite("batches", &SimConfig::batches)
      .def_readwrite("seed", &SimConfig::seed);

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("value", &Estimate::value)
      .def_readonly("half_width", &Estimate::half_width)
      .def("covers", &Estimate::covers, py::arg("reference"));

  py::class_<SimEstimates>(m, "SimEstimates")
      .def_readonly("busy_fraction", &SimEstimates::busy_fraction)
      .def_readonly("effective_rate", &SimEstimates::effective_rate)
      .def_readonly("mean_queue", &SimEstimates::mean_queue)
      .def_readonly("mean_customers", &SimEstimates::mean_customers)
      .def_readonly("mean_sojourn", &SimEstimates::mean_sojourn)
      .def_readonly("event_count", &SimEstimates::event_count)
      .def_readonly("low_events", &SimEstimates::low_events);

  py::class_<ReferenceValues>(m, "ReferenceValues")
      .def_readonly("busy", &ReferenceValues::busy)
      .def_readonly("effective_rate", &ReferenceValues::effective_rate)
      .def_readonly("mean_queue", &ReferenceValues::mean_queue)
      .def_readonly("mean_customers", &ReferenceValues::mean_customers)
      .def_readonly("mean_sojourn", &ReferenceValues::mean_sojourn);

  py::class_<CoverageReport>(m, "CoverageReport")
      .def_readonly("replications", &CoverageReport::replications)
      .def_readonly("busy_fraction", &CoverageReport::busy_fraction)
      .def_readonly("effective_rate", &CoverageReport::effective_rate)
      .def_readonly("mean_queue", &CoverageReport::mean_queue)
      .def_readonly("mean_customers", &CoverageReport::mean_customers)
      .def_readonly("mean_sojourn", &CoverageReport::mean_sojourn);

  m.def("simulate", &simulate, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Seeded discrete-event run with batch-means confidence intervals");
  m.def("closed_form_references", &closed_form_references, py::arg("config"));
  m.def(
      "replicate",
      [](const SimConfig& config, std::size_t replications) {
        py::gil_scoped_release release;
        return replicate(config, replications);
      },
      py::arg("config"), py::arg("replications"));
  m.def(
      "replicate",
      [](const SimConfig& config, std::size_t replications,
         const ReferenceValues& targets) {
        py::gil_scoped_release release;
        return replicate(config, replications, targets);
      },
      py::arg("config"), py::arg("replications"), py::arg("targets"));
  m.def("replication_seed", &replication_seed, py::arg("base"),
        py::arg("idx"));
}
