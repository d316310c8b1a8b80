//
// Copyright 2026 The CAPE-DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Python bindings for the core library.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cape/cape_fm.h"
#include "cape/cape_protocol.h"
#include "cape/dataset.h"
#include "cape/error.h"
#include "cape/experiment.h"
#include "cape/functional_mechanism.h"
#include "cape/privacy.h"
#include "cape/solvers.h"

namespace py = pybind11;

namespace cape {
namespace {

std::vector<NoiseScale> Taus(const std::vector<double>& taus) {
  return std::vector<NoiseScale>(taus.begin(), taus.end());
}

Participation MakeParticipation(int num_sites, const std::vector<int>& dropped) {
  Participation p = Participation::AllActive(num_sites);
  for (int s : dropped) {
    if (s < 0 || s >= num_sites) throw Error(ErrorCode::kParameter, "dropped site out of range");
    p.dropped[s] = true;
  }
  return p;
}

py::dict AggregateDict(const AggregateResult& r) {
  py::dict d;
  d["aggregate"] = r.aggregate;
  d["releases"] = r.releases;
  d["num_active"] = r.num_active;
  return d;
}

std::vector<SiteData> Sites(const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& data) {
  std::vector<SiteData> sites;
  for (const auto& [x, y] : data) sites.push_back({x, y});
  return sites;
}

LossSpec Spec(const std::string& loss) {
  if (loss == "linear_regression" || loss == "linear") return {LossKind::kLinearRegression};
  if (loss == "logistic_regression" || loss == "logistic") return {LossKind::kLogisticRegression};
  throw Error(ErrorCode::kParameter, "unknown loss " + loss);
}

py::dict CoeffsDict(const QuadraticCoeffs& c) {
  py::dict d;
  d["l0"] = c.l0;
  d["l1"] = c.l1;
  d["l2"] = c.l2;
  return d;
}

QuadraticCoeffs CoeffsFrom(double l0, const Eigen::VectorXd& l1, const Eigen::MatrixXd& l2) {
  if (l2.rows() != l1.size() || l2.cols() != l1.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "l2 must be D x D with D = len(l1)");
  }
  return {l0, l1, l2};
}

}  // namespace
}  // namespace cape

PYBIND11_MODULE(_cape, m) {
  using namespace cape;
  m.doc() = "Correlated-noise distributed differential privacy simulator";

  static py::exception<Error> error(m, "CapeError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("code") = ErrorCodeName(e.code());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def(
      "gaussian_tau",
      [](double sensitivity, double epsilon, double delta) {
        return GaussianTau(Sensitivity(sensitivity), PrivacyBudget(epsilon, delta)).tau();
      },
      py::arg("sensitivity"), py::arg("epsilon"), py::arg("delta"));
  m.def("max_colluders", &MaxColluders, py::arg("num_sites"));
  m.def(
      "cape_moments",
      [](int num_sites, int num_colluders, double tau, double total_samples) {
        const CapeMoments c = ComputeCapeMoments(num_sites, num_colluders, NoiseScale(tau), total_samples);
        return py::make_tuple(c.mu_z, c.sigma_z_sq);
      },
      py::arg("num_sites"), py::arg("num_colluders"), py::arg("tau"), py::arg("total_samples"));
  m.def(
      "cape_delta",
      [](double epsilon, int num_sites, int num_colluders, double tau, double total_samples) {
        const DeltaResult r =
            CapeDelta(epsilon, ComputeCapeMoments(num_sites, num_colluders, NoiseScale(tau), total_samples));
        return py::make_tuple(r.delta, r.log_delta, r.vacuous);
      },
      py::arg("epsilon"), py::arg("num_sites"), py::arg("num_colluders"), py::arg("tau"),
      py::arg("total_samples"));
  m.def(
      "conventional_delta",
      [](double epsilon, int num_sites, double total_samples, double tau_pool) {
        const DeltaResult r = ConventionalDelta(epsilon, num_sites, total_samples, NoiseScale(tau_pool));
        return py::make_tuple(r.delta, r.log_delta, r.vacuous);
      },
      py::arg("epsilon"), py::arg("num_sites"), py::arg("total_samples"), py::arg("tau_pool"));

  m.def(
      "cape_aggregate",
      [](const std::vector<std::vector<double>>& values, const std::vector<double>& taus,
         const std::vector<int>& dropped, int threshold, std::uint64_t seed) {
        const int s = static_cast<int>(values.size());
        return AggregateDict(CapeAggregate(values, Taus(taus), MakeParticipation(s, dropped),
                                           threshold > 0 ? threshold : DefaultThreshold(s), Rng(seed)));
      },
      py::arg("values"), py::arg("taus"), py::arg("dropped") = std::vector<int>{},
      py::arg("threshold") = 0, py::arg("seed") = 0);
  m.def(
      "conventional_aggregate",
      [](const std::vector<std::vector<double>>& values, const std::vector<double>& taus,
         std::uint64_t seed) {
        const int s = static_cast<int>(values.size());
        return AggregateDict(
            ConventionalAggregate(values, Taus(taus), Participation::AllActive(s), Rng(seed)));
      },
      py::arg("values"), py::arg("taus"), py::arg("seed") = 0);
  m.def(
      "h_ratio",
      [](const std::vector<double>& samples_per_site) {
        return HRatio(samples_per_site, [](double n) { return 1.0 / n; });
      },
      py::arg("samples_per_site"));
  m.def("h_ratio_upper_bound", &HRatioUpperBound, py::arg("total_samples"), py::arg("num_sites"));
  m.def(
      "communication_cost",
      [](int num_sites, int dim, const std::string& protocol) {
        const Protocol p = protocol == "cape" ? Protocol::kCape : Protocol::kConventional;
        if (protocol != "cape" && protocol != "conv") {
          throw Error(ErrorCode::kParameter, "protocol must be cape or conv");
        }
        const CostReport r = CommunicationCost(num_sites, dim, p);
        py::dict d;
        d["per_site_scalars"] = r.per_site_scalars;
        d["aggregator_scalars_received"] = r.aggregator_scalars_received;
        d["aggregator_scalars_sent"] = r.aggregator_scalars_sent;
        return d;
      },
      py::arg("num_sites"), py::arg("dim"), py::arg("protocol"));

  m.def(
      "sensitivity_table",
      [](const std::string& loss, double num_samples) { return SensitivityTable(Spec(loss), num_samples); },
      py::arg("loss"), py::arg("num_samples"));
  m.def(
      "build_coeffs",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::string& loss) {
        return CoeffsDict(BuildCoeffs(Spec(loss), x, y));
      },
      py::arg("x"), py::arg("y"), py::arg("loss") = "linear_regression");
  m.def(
      "minimize_quadratic",
      [](double l0, const Eigen::VectorXd& l1, const Eigen::MatrixXd& l2, double ridge) {
        const QuadraticSolveResult r = MinimizeQuadratic({CoeffsFrom(l0, l1, l2), Provenance::kExact}, ridge);
        return py::make_tuple(r.w_hat, r.regularizer_used, r.condition_flag);
      },
      py::arg("l0"), py::arg("l1"), py::arg("l2"), py::arg("ridge") = 0.0);
  m.def(
      "run_cape_fm",
      [](const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& sites, double epsilon,
         double delta, const std::string& loss, std::uint64_t seed) {
        const std::vector<SiteData> data = Sites(sites);
        const auto tau = DegreeNoiseScales(Spec(loss), data.front().num_samples(),
                                           PrivacyBudget(epsilon, delta));
        return CoeffsDict(RunCapeFm(data, Spec(loss), tau, Rng(seed)).objective.coeffs);
      },
      py::arg("sites"), py::arg("epsilon"), py::arg("delta"), py::arg("loss") = "linear_regression",
      py::arg("seed") = 0);

  m.def(
      "gen_synthetic_regression",
      [](int dim, int num_samples, double noise_sd, std::uint64_t seed) {
        RegressionData d = GenSyntheticRegression(dim, num_samples, noise_sd, seed);
        return py::make_tuple(d.data.x, d.data.y, d.w_true);
      },
      py::arg("dim"), py::arg("num_samples"), py::arg("noise_sd") = 0.1, py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig config = ExperimentConfig::FromJson(nlohmann::json::parse(config_json));
        ExperimentOutput out;
        {
          py::gil_scoped_release release;
          out = RunExperiment(config);
        }
        py::list records, summary, checks;
        for (const auto& r : out.records) {
          py::dict d;
          d["panel"] = r.panel;
          d["x"] = r.x;
          d["mode"] = r.mode;
          d["seed"] = r.seed;
          d["metric"] = r.metric;
          d["value"] = r.value;
          records.append(d);
        }
        for (const auto& r : out.summary) {
          py::dict d;
          d["panel"] = r.panel;
          d["x"] = r.x;
          d["mode"] = r.mode;
          d["metric"] = r.metric;
          d["mean"] = r.mean;
          d["sd"] = r.sd;
          d["n_seeds"] = r.n_seeds;
          summary.append(d);
        }
        for (const auto& c : out.checks) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["asserted"] = c.asserted;
          d["detail"] = c.detail;
          checks.append(d);
        }
        py::dict result;
        result["records"] = records;
        result["summary"] = summary;
        result["checks"] = checks;
        result["cell_errors"] = out.cell_errors;
        result["ok"] = out.ok();
        result["config"] = config.ToJson().dump();
        return result;
      },
      py::arg("config_json"));
}
