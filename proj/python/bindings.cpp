#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "drregret/commands.hpp"
#include "drregret/config.hpp"
#include "drregret/errors.hpp"
#include "drregret/linsys.hpp"
#include "drregret/regret.hpp"
#include "drregret/risk.hpp"
#include "drregret/uncertainty.hpp"
#include "drregret/wasserstein.hpp"

namespace py = pybind11;
using namespace drr;

namespace {

ExperimentConfig config_from(const std::string& text) {
  return text.empty() ? default_config() : parse_config(nlohmann::json::parse(text));
}

MomentTrajectory moments_for(const ExperimentConfig& c, int horizon) {
  return propagate_moments(make_system(c), stationary_policy(c, horizon), x0_set(c), w_set(c),
                           horizon);
}

}  // namespace

PYBIND11_MODULE(_drregret, m) {
  m.doc() = "Distributional regret analysis for moment-robust LQR";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  // ConfigError carries the offending field; translated by hand below.
  py::exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      const py::object cls = py::module_::import("drregret._drregret").attr("ConfigError");
      const py::object exc = cls(e.what());
      exc.attr("field") = e.field();
      PyErr_SetObject(cls.ptr(), exc.ptr());
    }
  });

  m.attr("__version__") = DRREGRET_VERSION;

  // linsys
  m.def(
      "riccati",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
         const MatrixXd& Qf, int horizon) {
        const LinearSystem sys(A, B, MatrixXd::Identity(A.rows(), A.rows()));
        const RiccatiSolution sol = riccati_finite_horizon(sys, CostSpec(Q, R, Qf, horizon));
        return py::make_tuple(sol.policy.gains(), sol.values.P);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("Qf"), py::arg("horizon"),
      "Finite-horizon gains K_0..K_{T-1} and value matrices P_0..P_T.");
  m.def(
      "dare",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
        const LinearSystem sys(A, B, MatrixXd::Identity(A.rows(), A.rows()));
        const StationaryLqr lqr = dare_stationary(sys, CostSpec(Q, R, Q, 1));
        return py::make_tuple(lqr.K, lqr.P);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), "Stationary LQR gain K and P.");

  // risk
  m.def(
      "empirical_var",
      [](const std::vector<double>& x, double alpha) { return empirical_var(x, RiskLevel(alpha)); },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "empirical_cvar",
      [](const std::vector<double>& x, double alpha) { return empirical_cvar(x, RiskLevel(alpha)); },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "worst_case_cvar_quadratic",
      [](const MatrixXd& cov, const MatrixXd& P, double alpha) {
        return worst_case_cvar_quadratic(cov, P, RiskLevel(alpha));
      },
      py::arg("cov"), py::arg("P"), py::arg("alpha"));
  m.def(
      "worst_case_cvar_linear",
      [](const MatrixXd& cov, const VectorXd& q, double alpha) {
        return worst_case_cvar_linear(cov, q, RiskLevel(alpha));
      },
      py::arg("cov"), py::arg("q"), py::arg("alpha"));
  m.def(
      "worst_case_cvar_general",
      [](const MatrixXd& cov, const MatrixXd& P, const VectorXd& q, double r, double alpha) {
        return worst_case_cvar_quadratic_general(SecondMomentMatrix::from_covariance(cov), P, q, r,
                                                 RiskLevel(alpha))
            .value;
      },
      py::arg("cov"), py::arg("P"), py::arg("q"), py::arg("r"), py::arg("alpha"),
      "Worst-case CVaR of x^T P x + 2 q^T x + r over zero-mean x with covariance cov.");

  // wasserstein
  m.def(
      "w2_empirical",
      [](const MatrixXd& x, const MatrixXd& y) {
        return w2_empirical(EmpiricalDistribution(x), EmpiricalDistribution(y));
      },
      py::arg("atoms_a"), py::arg("atoms_b"), "W2 between uniform empirical measures (atoms as columns).");
  m.def(
      "w2_gaussian",
      [](const VectorXd& m1, const MatrixXd& c1, const VectorXd& m2, const MatrixXd& c2) {
        return w2_gaussian(m1, c1, m2, c2);
      },
      py::arg("mean1"), py::arg("cov1"), py::arg("mean2"), py::arg("cov2"));

  // uncertainty
  m.def(
      "sample",
      [](const std::string& family, const VectorXd& mean, const MatrixXd& cov, int count,
         std::uint64_t seed, std::uint64_t stream) {
        return sample(DistributionModel{parse_family(family), MomentAmbiguitySet(mean, cov)},
                      RngSpec{seed, stream}, count);
      },
      py::arg("family"), py::arg("mean"), py::arg("cov"), py::arg("count"), py::arg("seed"),
      py::arg("stream") = 0, "Draw count samples (columns) from a gaussian or laplacian model.");

  // config-driven operations; configs travel as JSON text
  m.def(
      "default_config", [] { return to_json(default_config()).dump(); },
      "Default configuration as JSON text.");
  m.def(
      "normalize_config", [](const std::string& text) { return to_json(config_from(text)).dump(); },
      py::arg("config_json"), "Parse, validate and re-serialize a configuration.");
  m.def(
      "state_covariances",
      [](const std::string& text) {
        const ExperimentConfig c = config_from(text);
        return moments_for(c, c.horizon).covs;
      },
      py::arg("config_json") = "");
  m.def(
      "pseudo_regret",
      [](const std::string& text) {
        const ExperimentConfig c = config_from(text);
        const MomentTrajectory mt = moments_for(c, c.horizon);
        return pseudo_regret(mt, mt,
                             effective_weights(make_cost(c, c.horizon), stationary_policy(c, c.horizon)));
      },
      py::arg("config_json") = "");
  m.def(
      "bound_sweep",
      [](const std::string& text) {
        py::list out;
        for (const auto& r : bound_sweep(config_from(text))) {
          py::dict row;
          row["alpha"] = r.alpha;
          row["horizon"] = r.horizon;
          row["bound_total"] = r.bound_total;
          row["trace_sum"] = r.trace_sum;
          row["g_sum"] = r.g_sum;
          out.append(row);
        }
        return out;
      },
      py::arg("config_json") = "");
  m.def(
      "simulate",
      [](const std::string& text) {
        const SimulationResult r = run_simulation(config_from(text));
        return py::make_tuple(to_json(r.report).dump(), r.costs_true, r.costs_worst);
      },
      py::arg("config_json") = "",
      "Returns (report JSON text, costs under the true model, costs under the worst model).");
  m.def(
      "validate", [](const std::string& text) { return to_json(run_validation(config_from(text))).dump(); },
      py::arg("config_json") = "");
}
