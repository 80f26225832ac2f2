#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "poemlab/blr.hpp"
#include "poemlab/config.hpp"
#include "poemlab/errors.hpp"
#include "poemlab/io.hpp"
#include "poemlab/metrics.hpp"
#include "poemlab/mining.hpp"
#include "poemlab/model.hpp"
#include "poemlab/runner.hpp"
#include "poemlab/theory.hpp"

namespace py = pybind11;
using namespace poemlab;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows, std::size_t cols_if_empty = 0) {
  Matrix m(0, rows.empty() ? cols_if_empty : rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != m.cols()) throw DimensionMismatch("rows have different lengths");
    m.append_row(r);
  }
  return m;
}

Rows to_rows(const Matrix& m) {
  Rows out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

KeyValues to_kv(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) kv[py::str(k)] = py::str(v);
  return kv;
}

}  // namespace

PYBIND11_MODULE(_poemlab, m) {
  m.doc() = "Thompson-sampling outlier mining: core routines";

  // Translators are tried newest first, so the subclass goes last.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("q_function", &q_function, py::arg("x"));
  m.def("energy", [](const Vec& logits) { return energy(logits); }, py::arg("logits"));

  m.def(
      "auroc", [](const Vec& id, const Vec& ood) { return auroc({id, ood}); }, py::arg("id_scores"),
      py::arg("ood_scores"));
  m.def(
      "aupr", [](const Vec& id, const Vec& ood) { return aupr({id, ood}); }, py::arg("id_scores"),
      py::arg("ood_scores"));
  m.def(
      "fpr_at_tpr", [](const Vec& id, const Vec& ood, double tpr) { return fpr_at_tpr({id, ood}, tpr); },
      py::arg("id_scores"), py::arg("ood_scores"), py::arg("tpr") = 0.95);
  m.def(
      "threshold_at_tpr", [](const Vec& id, double tpr) { return threshold_at_tpr(id, tpr); },
      py::arg("id_scores"), py::arg("tpr") = 0.95);

  m.def(
      "posterior_update",
      [](const Rows& phi, const Vec& targets, double prior_scale, double noise_var) {
        if (phi.size() != targets.size()) throw LengthMismatch("phi and targets differ in length");
        if (phi.empty()) throw DimensionMismatch("need at least one feature row");
        const std::size_t dim = phi.front().size();
        FeatureQueue q(phi.size(), dim);
        for (std::size_t i = 0; i < phi.size(); ++i) q.push(phi[i], targets[i]);
        const auto post = posterior_update(q, isotropic_prior(dim, prior_scale), noise_var);
        py::dict out;
        out["mean"] = post.mean;
        out["precision"] = to_rows(post.precision);
        return out;
      },
      py::arg("phi"), py::arg("targets"), py::arg("prior_scale") = 1.0, py::arg("noise_var") = 1.0);

  m.def(
      "select_top_n",
      [](const Rows& features, const Vec& w, std::size_t n) {
        return select_top_n(to_matrix(features, w.size()), w, n).indices();
      },
      py::arg("features"), py::arg("w"), py::arg("n"));

  m.def(
      "boundary_score_exact",
      [](const Vec& mu, double sigma, const Vec& x) { return boundary_score_exact(GmmOracle(mu, sigma), x); },
      py::arg("mu"), py::arg("sigma"), py::arg("x"));

  m.def(
      "theorem_bound",
      [](std::size_t dim, double mu_norm, double sigma, std::size_t n, double epsilon) {
        TheoryConfig cfg = TheoryConfig::axis_aligned(dim, mu_norm, sigma);
        cfg.n = n;
        cfg.epsilon = epsilon;
        return theorem_bound(cfg);
      },
      py::arg("dim") = 20, py::arg("mu_norm") = 10.0, py::arg("sigma") = 1.0, py::arg("n") = 200,
      py::arg("epsilon") = 0.5);

  m.def(
      "verify_theorem",
      [](const py::dict& settings) {
        const auto setup = theorem_setup_from(to_kv(settings));
        return verify_theorem(setup.config, setup.options).to_json(false);
      },
      py::arg("settings") = py::dict(), "Runs the Monte Carlo check; returns the JSON report.");

  m.def(
      "train",
      [](const py::dict& settings) {
        const RunConfig cfg = run_config_from(to_kv(settings));
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(cfg);
        }
        std::vector<std::string> logs;
        for (const auto& log : r.logs) logs.push_back(log.to_json());
        return logs;
      },
      py::arg("settings") = py::dict(), "Trains one run; returns the per-epoch JSON log lines.");
}
