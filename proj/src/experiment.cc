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

#include "cape/experiment.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "cape/cape_fm.h"
#include "cape/cape_protocol.h"
#include "cape/dataset.h"
#include "cape/error.h"
#include "cape/nn.h"
#include "cape/privacy.h"
#include "cape/solvers.h"

namespace cape {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream ids for per-cell randomness.
constexpr std::uint64_t kSplitStream = 50;
constexpr std::uint64_t kCellStream = 51;
constexpr std::uint64_t kSubsampleStream = 52;
constexpr std::uint64_t kNnStream = 53;
constexpr std::uint64_t kCompositionStream = 54;

const std::vector<std::string> kLinregModes = {"non-priv", "pooled-dp", "capeFM",
                                               "conv",     "local",     "dpfm"};
const std::vector<std::string> kNnModes = {"non-priv", "conv", "cape"};

std::vector<double> LogGrid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) {
    g[i] = lo * std::pow(hi / lo, points == 1 ? 0.0 : static_cast<double>(i) / (points - 1));
  }
  return g;
}

std::string Num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string Csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string CanonicalMode(const std::string& mode, ExperimentKind kind) {
  if (kind == ExperimentKind::kNn && mode == "capeFM") return "cape";
  if (kind == ExperimentKind::kLinreg && mode == "cape") return "capeFM";
  return mode;
}

// Ranks with ties averaged.
std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

class Runner {
 public:
  explicit Runner(const ExperimentConfig& config) : config_(config) {}

  ExperimentOutput Run();

 private:
  ExperimentRecord Base(const std::string& panel, double x, const std::string& mode,
                        std::uint64_t seed) const;
  void Emit(ExperimentRecord r, const std::string& metric, double value) {
    r.metric = metric;
    r.value = value;
    out_.records.push_back(std::move(r));
  }
  void Check(const std::string& name, bool passed, const std::string& detail,
             bool asserted = true) {
    out_.checks.push_back({name, passed, asserted, detail});
  }
  void CellError(const std::string& where, const std::string& what) {
    out_.cell_errors.push_back(where + ": " + what);
  }

  void RunLinreg();
  void RunNn();
  void RunDeltaCompare();
  void RunCollusionSweep();
  void RunHRatio();
  void LinregTrendChecks();

  const ExperimentConfig& config_;
  ExperimentOutput out_;
};

ExperimentRecord Runner::Base(const std::string& panel, double x, const std::string& mode,
                              std::uint64_t seed) const {
  ExperimentRecord r;
  r.experiment = ExperimentKindName(config_.kind);
  r.panel = panel;
  r.axis = config_.axis;
  r.x = x;
  r.mode = mode;
  r.seed = seed;
  r.num_sites = config_.num_sites;
  r.dim = config_.dim;
  r.num_samples = config_.num_samples;
  r.epsilon = config_.epsilon;
  r.delta = config_.delta;
  r.tau = kNaN;
  r.num_colluders = kNaN;
  return r;
}

ExperimentOutput Runner::Run() {
  config_.Validate();
  switch (config_.kind) {
    case ExperimentKind::kLinreg:
      RunLinreg();
      break;
    case ExperimentKind::kNn:
      RunNn();
      break;
    case ExperimentKind::kDeltaCompare:
      RunDeltaCompare();
      break;
    case ExperimentKind::kCollusionSweep:
      RunCollusionSweep();
      break;
    case ExperimentKind::kHRatio:
      RunHRatio();
      break;
  }
  out_.summary = Summarize(out_.records);
  if (config_.kind == ExperimentKind::kLinreg) LinregTrendChecks();
  return std::move(out_);
}

void Runner::RunLinreg() {
  const LossSpec spec{config_.loss};
  const bool synthetic = config_.data.kind == "synthetic";
  DatasetBundle csv;
  if (!synthetic) csv = LoadCsv(config_.data.csv_path, config_.data.target_column, spec);
  if (!synthetic) {
    Check("csv rows loaded", csv.num_samples() > 0,
          std::to_string(csv.num_samples()) + " rows, " +
              std::to_string(csv.report.rejected_rows) + " rejected");
  }
  if (synthetic && spec.kind != LossKind::kLinearRegression) {
    throw Error(ErrorCode::kParameter, "synthetic data is regression only; use a csv for logistic");
  }
  const std::string panel = config_.axis;
  bool normalized = true;
  bool transcript_written = false;

  for (double x : config_.grid) {
    int n_total = config_.num_samples;
    double eps = config_.epsilon;
    double delta = config_.delta;
    if (config_.axis == "epsilon") eps = x;
    if (config_.axis == "N") n_total = static_cast<int>(std::lround(x));
    if (config_.axis == "delta") delta = x;

    for (std::uint64_t seed : config_.seeds) {
      const std::string where =
          "x=" + Num(x) + " seed=" + std::to_string(seed);
      Eigen::MatrixXd x_all;
      Eigen::VectorXd y_all;
      Eigen::VectorXd w_true;
      try {
        if (synthetic) {
          RegressionData d = GenSyntheticRegression(config_.dim, n_total, config_.data.noise_sd, seed);
          x_all = std::move(d.data.x);
          y_all = std::move(d.data.y);
          w_true = std::move(d.w_true);
        } else if (n_total < csv.num_samples()) {
          Rng sub = Rng(seed).Stream(kSubsampleStream);
          DatasetBundle d = Subsample(csv, n_total, sub);
          x_all = std::move(d.x);
          y_all = std::move(d.y);
        } else {
          x_all = csv.x;
          y_all = csv.y;
        }
      } catch (const Error& e) {
        CellError(where, e.what());
        continue;
      }
      if (!RejectedSamples(x_all, y_all, spec).empty()) normalized = false;

      Rng split = Rng(seed).Stream({kSplitStream, static_cast<std::uint64_t>(n_total)});
      SiteData pooled;
      std::vector<SiteData> sites;
      try {
        sites = SplitSites(x_all, y_all, config_.num_sites, split, &pooled);
      } catch (const Error& e) {
        CellError(where, e.what());
        continue;
      }
      const int n_site = sites.front().num_samples();
      const int n_used = pooled.num_samples();
      const QuadraticCoeffs exact = BuildCoeffs(spec, pooled.x, pooled.y);
      if (!synthetic) w_true = MinimizeQuadratic({exact, Provenance::kExact}).w_hat;

      for (std::size_t m = 0; m < config_.modes.size(); ++m) {
        const std::string& mode = config_.modes[m];
        ExperimentRecord base = Base(panel, x, mode, seed);
        base.num_samples = n_used;
        base.epsilon = eps;
        base.delta = delta;
        try {
          const PrivacyBudget budget(eps, delta);
          Rng cell = Rng(seed).Stream({kCellStream, static_cast<std::uint64_t>(n_total), m});
          PerturbedObjective obj;
          if (mode == "non-priv") {
            obj = {exact, Provenance::kExact};
          } else if (mode == "pooled-dp") {
            obj = PerturbObjective(exact, spec, n_used, budget, FmMechanism::kGaussianFm, cell);
          } else if (mode == "capeFM") {
            const auto tau = DegreeNoiseScales(spec, n_site, budget);
            base.tau = tau[1].tau();
            DistributedFmResult r = RunCapeFm(sites, spec, tau, cell);
            obj = r.objective;
            if (config_.write_transcript && !transcript_written) {
              std::ostringstream nd;
              r.transcript.WriteNdjson(nd);
              out_.transcript_ndjson = nd.str();
              transcript_written = true;
            }
          } else if (mode == "conv") {
            const auto tau = DegreeNoiseScales(spec, n_site, budget);
            base.tau = tau[1].tau();
            obj = RunConventionalFm(sites, spec, tau, cell).objective;
          } else if (mode == "local") {
            obj = RunLocalFm(sites.front(), spec, budget, cell);
          } else if (mode == "dpfm") {
            // Every site runs the Laplace baseline on its own data.
            QuadraticCoeffs sum = QuadraticCoeffs::Zero(exact.dim());
            for (std::size_t s = 0; s < sites.size(); ++s) {
              Rng site_rng = cell.Stream(s);
              const QuadraticCoeffs local = BuildCoeffs(spec, sites[s].x, sites[s].y);
              const PerturbedObjective p =
                  PerturbObjective(local, spec, n_site, budget, FmMechanism::kLaplaceDpfm, site_rng);
              sum.l0 += p.coeffs.l0;
              sum.l1 += p.coeffs.l1;
              sum.l2 += p.coeffs.l2;
            }
            const double inv = 1.0 / static_cast<double>(sites.size());
            obj = {{sum.l0 * inv, sum.l1 * inv, sum.l2 * inv}, Provenance::kLaplaceDpfm};
          } else {
            throw Error(ErrorCode::kParameter, "mode " + mode + " not implemented");
          }
          const QuadraticSolveResult sol = MinimizeQuadratic(obj);
          const double loss = spec.kind == LossKind::kLinearRegression
                                  ? SquaredLoss(pooled.x, pooled.y, sol.w_hat)
                                  : LogisticLoss(pooled.x, pooled.y, sol.w_hat);
          Emit(base, "loss", loss);
          Emit(base, "err_w", ParameterError(w_true, sol.w_hat));
          if (spec.kind == LossKind::kLogisticRegression) {
            const Eigen::VectorXd z = pooled.x * sol.w_hat;
            int hits = 0;
            for (Eigen::Index n = 0; n < z.size(); ++n) hits += (z(n) > 0.0) == (pooled.y(n) == 1.0);
            Emit(base, "accuracy", 100.0 * hits / static_cast<double>(z.size()));
          }
          Emit(base, "regularized", sol.condition_flag ? 1.0 : 0.0);
        } catch (const Error& e) {
          CellError(where + " mode=" + mode, e.what());
        }
      }
    }
  }
  Check("samples within loss bounds after normalization", normalized,
        normalized ? "all rows satisfy ||x|| <= 1 and the target domain" : "rows out of bounds");
}

void Runner::LinregTrendChecks() {
  const std::string panel = config_.axis;
  const auto has = [&](const std::string& mode) {
    return std::find(config_.modes.begin(), config_.modes.end(), mode) != config_.modes.end();
  };
  if (has("capeFM") && config_.grid.size() >= 2 && config_.axis != "delta") {
    std::vector<double> means;
    for (double x : config_.grid) means.push_back(out_.Mean(panel, x, "capeFM", "loss"));
    const double rho = SpearmanRho(config_.grid, means);
    std::ostringstream d;
    d << "spearman rho of capeFM mean loss vs " << config_.axis << " = " << rho;
    Check("capeFM loss decreasing in " + config_.axis, rho <= -0.9, d.str(), false);
  }
  if (config_.axis == "epsilon") {
    // Grid point closest to epsilon = 1.
    double best = config_.grid.front();
    for (double x : config_.grid) {
      if (std::abs(std::log(x)) < std::abs(std::log(best))) best = x;
    }
    const std::vector<std::string> order = {"non-priv", "capeFM", "conv", "local"};
    std::vector<double> means;
    std::ostringstream d;
    d << "eps=" << best << ":";
    for (const auto& m : order) {
      if (!has(m)) continue;
      means.push_back(out_.Mean(panel, best, m, "loss"));
      d << ' ' << m << '=' << means.back();
    }
    bool sorted = true;
    for (std::size_t i = 1; i < means.size(); ++i) sorted = sorted && means[i - 1] <= means[i];
    Check("mean loss ordering non-priv <= capeFM <= conv <= local", sorted, d.str(), false);
    if (has("dpfm") && has("capeFM")) {
      bool dominated = true;
      for (double x : config_.grid) {
        dominated = dominated && out_.Mean(panel, x, "dpfm", "loss") > out_.Mean(panel, x, "capeFM", "loss");
      }
      Check("dpfm mean loss above capeFM at every epsilon", dominated, "", false);
    }
  }
}

void Runner::RunNn() {
  const int s_count = config_.num_sites;
  const std::string panel = "epsilon";
  const auto has = [&](const std::string& mode) {
    return std::find(config_.modes.begin(), config_.modes.end(), mode) != config_.modes.end();
  };
  bool grad_checked = false;
  for (std::uint64_t seed : config_.seeds) {
    const std::string where = "seed=" + std::to_string(seed);
    ClassData data;
    std::vector<ClassSite> sites;
    try {
      data = GenSyntheticClasses(config_.dim, config_.num_samples, config_.data.separation, seed);
      Rng split = Rng(seed).Stream(kSplitStream);
      for (SiteData& s : SplitSites(data.train.x, data.train.y, s_count, split)) {
        sites.push_back({std::move(s.x), std::move(s.y)});
      }
    } catch (const Error& e) {
      CellError(where, e.what());
      continue;
    }
    const Rng run_rng = Rng(seed).Stream(kNnStream);
    DistributedGdConfig gd;
    gd.hidden = config_.hidden;
    gd.iterations = config_.iterations;
    gd.learning_rate = config_.learning_rate;
    gd.delta = config_.delta;
    gd.clip.clip_norm = config_.clip_norm;

    if (!grad_checked) {
      Rng init = run_rng.Stream(30);
      const NNParams p = NNParams::Init(config_.dim, config_.hidden, init);
      const int rows = std::min<int>(200, static_cast<int>(data.train.x.rows()));
      const double err =
          GradientCheck(p, data.train.x.topRows(rows), data.train.y.head(rows));
      std::ostringstream d;
      d << "max relative error " << err;
      Check("gradient finite-difference check", err <= 1e-5, d.str());
      grad_checked = true;
      if (err > 1e-5) return;
    }

    const auto emit_trace = [&](ExperimentRecord base, const DistributedGdResult& r) {
      const TraceRow& t = r.trace.back();
      Emit(base, "train_acc", t.train_acc);
      Emit(base, "test_acc", t.test_acc);
      Emit(base, "loss", t.loss);
      Emit(base, "aborted_iterations", r.aborted_iterations);
    };

    if (has("non-priv")) {
      try {
        gd.mode = GdMode::kNonPrivate;
        const DistributedGdResult r = DistributedDpGd(sites, data.test, gd, run_rng);
        for (double x : config_.grid) {
          ExperimentRecord base = Base(panel, x, "non-priv", seed);
          base.epsilon = x;
          emit_trace(base, r);
        }
      } catch (const Error& e) {
        CellError(where + " mode=non-priv", e.what());
      }
    }
    for (double x : config_.grid) {
      for (const std::string mode : {"conv", "cape"}) {
        if (!has(mode)) continue;
        try {
          gd.mode = mode == std::string("cape") ? GdMode::kCape : GdMode::kConventional;
          gd.epsilon = x;
          const DistributedGdResult r = DistributedDpGd(sites, data.test, gd, run_rng);
          ExperimentRecord base = Base(panel, x, mode, seed);
          base.epsilon = x;
          base.tau = r.tau_site;
          emit_trace(base, r);
        } catch (const Error& e) {
          CellError(where + " x=" + Num(x) + " mode=" + mode, e.what());
        }
      }
    }
  }
  out_.summary = Summarize(out_.records);
  if (has("cape") && has("conv")) {
    bool ok = true;
    std::ostringstream d;
    for (double x : config_.grid) {
      const double c = out_.Mean(panel, x, "cape", "test_acc");
      const double v = out_.Mean(panel, x, "conv", "test_acc");
      ok = ok && c >= v - 0.5;
      d << "eps=" << x << " cape=" << c << " conv=" << v << "; ";
    }
    Check("cape test accuracy >= conv - 0.5 at every epsilon", ok, d.str(), false);
  }
  if (has("cape") && has("non-priv")) {
    const double top = *std::max_element(config_.grid.begin(), config_.grid.end());
    const double c = out_.Mean(panel, top, "cape", "test_acc");
    const double n = out_.Mean(panel, top, "non-priv", "test_acc");
    std::ostringstream d;
    d << "eps=" << top << " cape=" << c << " non-priv=" << n;
    Check("cape within 2 points of non-priv at the largest epsilon", std::abs(c - n) <= 2.0,
          d.str(), false);
  }
}

void Runner::RunDeltaCompare() {
  int feasible = 0, infeasible = 0, violations = 0;
  std::ostringstream bad;
  for (int s : config_.site_counts) {
    const int sc = MaxColluders(s);
    const double n = static_cast<double>(config_.samples_per_site) * s;
    for (double eps : config_.epsilons) {
      const std::string panel = "S=" + std::to_string(s) + " eps=" + Num(eps);
      for (double tau : config_.grid) {
        ExperimentRecord base = Base(panel, tau, "", 0);
        base.num_sites = s;
        base.num_samples = n;
        base.epsilon = eps;
        base.delta = kNaN;
        base.dim = kNaN;
        base.tau = tau;
        base.num_colluders = sc;
        const DeltaResult conv = ConventionalDelta(eps, s, n, NoiseScale(tau / s));
        base.mode = "conv";
        Emit(base, "log_delta", conv.log_delta);
        Emit(base, "delta", conv.delta);
        base.mode = "cape";
        DeltaResult cape;
        try {
          cape = CapeDelta(eps, ComputeCapeMoments(s, sc, NoiseScale(tau), n));
        } catch (const Error& e) {
          ++infeasible;
          Emit(base, "infeasible", 1.0);
          continue;
        }
        Emit(base, "log_delta", cape.log_delta);
        Emit(base, "delta", cape.delta);
        if (cape.vacuous) {
          ++infeasible;
          Emit(base, "infeasible", 1.0);
          continue;
        }
        ++feasible;
        if (!(cape.log_delta < conv.log_delta)) {
          ++violations;
          bad << ' ' << panel << " tau=" << tau;
        }
      }
    }
  }
  Check("cape delta < conventional delta at every feasible point", violations == 0 && feasible > 0,
        std::to_string(feasible) + " feasible, " + std::to_string(infeasible) +
            " infeasible flagged" + bad.str());
}

void Runner::RunCollusionSweep() {
  int feasible = 0, violations = 0, monotone_breaks = 0;
  bool zero_column = true;
  std::ostringstream bad;
  for (int s : config_.site_counts) {
    const double n = static_cast<double>(config_.samples_per_site) * s;
    bool has_zero = false;
    for (double eps : config_.epsilons) {
      for (double tau : config_.grid) {
        const std::string panel = "S=" + std::to_string(s) + " eps=" + Num(eps) + " tau=" + Num(tau);
        const DeltaResult conv = ConventionalDelta(eps, s, n, NoiseScale(tau / s));
        double prev = -std::numeric_limits<double>::infinity();
        bool prev_feasible = false;
        for (int sc = 0; sc <= MaxColluders(s); ++sc) {
          if (sc == 0) has_zero = true;
          ExperimentRecord base = Base(panel, static_cast<double>(sc) / s, "", 0);
          base.num_sites = s;
          base.num_samples = n;
          base.epsilon = eps;
          base.delta = kNaN;
          base.dim = kNaN;
          base.tau = tau;
          base.num_colluders = sc;
          base.mode = "conv";
          Emit(base, "log_delta", conv.log_delta);
          base.mode = "cape";
          DeltaResult cape;
          bool ok = true;
          try {
            cape = CapeDelta(eps, ComputeCapeMoments(s, sc, NoiseScale(tau), n));
            ok = !cape.vacuous;
          } catch (const Error&) {
            ok = false;
          }
          if (!ok) {
            Emit(base, "infeasible", 1.0);
            prev_feasible = false;
            continue;
          }
          Emit(base, "log_delta", cape.log_delta);
          Emit(base, "delta", cape.delta);
          ++feasible;
          if (!(cape.log_delta < conv.log_delta)) {
            ++violations;
            bad << ' ' << panel << " S_C=" << sc;
          }
          if (prev_feasible && !(cape.log_delta > prev)) {
            ++monotone_breaks;
            bad << " non-monotone at " << panel << " S_C=" << sc;
          }
          prev = cape.log_delta;
          prev_feasible = true;
        }
      }
    }
    zero_column = zero_column && has_zero;
  }
  Check("cape delta < conventional delta at every feasible point", violations == 0 && feasible > 0,
        std::to_string(feasible) + " feasible" + bad.str());
  Check("delta increases with the number of colluders", monotone_breaks == 0,
        std::to_string(monotone_breaks) + " breaks");
  Check("S_C = 0 column present", zero_column, "");
}

void Runner::RunHRatio() {
  const SensitivityFn inv = [](double n) { return 1.0 / n; };
  bool above_one = true, symmetric_one = true, bound_holds = true;
  std::ostringstream bad;
  for (double xs : config_.grid) {
    const int s = static_cast<int>(std::lround(xs));
    const int n = config_.num_samples;
    const std::string panel = "N=" + std::to_string(n);
    for (std::uint64_t seed : config_.seeds) {
      Rng rng = Rng(seed).Stream({kCompositionStream, static_cast<std::uint64_t>(s)});
      double h_min = std::numeric_limits<double>::infinity(), h_max = 0.0;
      for (int c = 0; c < config_.compositions; ++c) {
        // S - 1 distinct cut points in 1..N-1.
        std::vector<int> cuts;
        while (static_cast<int>(cuts.size()) < s - 1) {
          const int cut = 1 + static_cast<int>(rng.UniformBelow(n - 1));
          if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> parts;
        int last = 0;
        for (int cut : cuts) {
          parts.push_back(cut - last);
          last = cut;
        }
        parts.push_back(n - last);
        const double h = HRatio(parts, inv);
        h_min = std::min(h_min, h);
        h_max = std::max(h_max, h);
      }
      ExperimentRecord base = Base(panel, s, "random", seed);
      base.num_sites = s;
      base.num_samples = n;
      base.dim = base.epsilon = base.delta = kNaN;
      Emit(base, "h_min", h_min);
      Emit(base, "h_max", h_max);
      if (h_min < 1.0 - 1e-12) {
        above_one = false;
        bad << " S=" << s << " h_min=" << h_min;
      }
    }
    ExperimentRecord base = Base(panel, s, "symmetric", 0);
    base.num_sites = s;
    base.num_samples = n;
    base.dim = base.epsilon = base.delta = kNaN;
    const double h_sym = HRatio(std::vector<double>(s, static_cast<double>(n) / s), inv);
    Emit(base, "h", h_sym);
    if (std::abs(h_sym - 1.0) > 1e-12) symmetric_one = false;
    std::vector<double> extreme(s, 1.0);
    extreme[0] = n - s + 1;
    const double h_ext = HRatio(extreme, inv);
    const double bound = HRatioUpperBound(n, s);
    base.mode = "extreme";
    Emit(base, "h", h_ext);
    Emit(base, "upper_bound", bound);
    if (h_ext > bound * (1.0 + 1e-12)) {
      bound_holds = false;
      bad << " S=" << s << " extreme H=" << h_ext << " > " << bound;
    }
  }
  Check("H >= 1 over random compositions", above_one, bad.str());
  Check("H = 1 at the symmetric split", symmetric_one, "");
  Check("upper bound holds at the extreme composition", bound_holds, "");
}

}  // namespace

const char* ExperimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kLinreg:
      return "linreg";
    case ExperimentKind::kNn:
      return "nn";
    case ExperimentKind::kDeltaCompare:
      return "delta-compare";
    case ExperimentKind::kCollusionSweep:
      return "collusion-sweep";
    case ExperimentKind::kHRatio:
      return "h-ratio";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::kLinreg, ExperimentKind::kNn,
                           ExperimentKind::kDeltaCompare, ExperimentKind::kCollusionSweep,
                           ExperimentKind::kHRatio}) {
    if (name == ExperimentKindName(k)) return k;
  }
  throw Error(ErrorCode::kParameter, "unknown experiment kind " + name);
}

ExperimentConfig ExperimentConfig::Defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.seeds.resize(10);
  std::iota(c.seeds.begin(), c.seeds.end(), 1);
  switch (kind) {
    case ExperimentKind::kLinreg:
      c.axis = "epsilon";
      c.grid = {0.2, 0.5, 1.0, 2.0, 5.0};
      c.num_sites = 5;
      c.dim = 20;
      c.num_samples = 20000;
      c.delta = 1e-5;
      c.modes = kLinregModes;
      break;
    case ExperimentKind::kNn:
      c.axis = "epsilon";
      c.grid = {0.01, 0.03, 0.1, 0.3, 1.0};
      c.num_sites = 4;
      c.dim = 50;
      c.num_samples = 10000;
      c.delta = 0.01;
      c.modes = kNnModes;
      break;
    case ExperimentKind::kDeltaCompare:
      c.axis = "tau";
      c.grid = LogGrid(1e-3, 1.0, 13);
      c.site_counts = {4, 10};
      c.epsilons = {0.1, 1.0};
      c.seeds = {0};
      break;
    case ExperimentKind::kCollusionSweep:
      c.axis = "collusion_fraction";
      c.grid = LogGrid(1e-2, 1.0, 5);
      c.site_counts = {6, 12, 30, 60};
      c.epsilons = {0.1, 1.0};
      c.seeds = {0};
      break;
    case ExperimentKind::kHRatio:
      c.axis = "S";
      c.grid = {2, 3, 5, 10, 20};
      c.num_samples = 1000;
      c.compositions = 2000;
      c.seeds = {1, 2, 3, 4, 5};
      break;
  }
  return c;
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  j["experiment"] = ExperimentKindName(kind);
  j["axis"] = axis;
  j["grid"] = grid;
  j["num_sites"] = num_sites;
  j["dim"] = dim;
  j["num_samples"] = num_samples;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["seeds"] = seeds;
  j["modes"] = modes;
  j["loss"] = LossKindName(loss);
  j["data"] = {{"kind", data.kind},
               {"csv_path", data.csv_path},
               {"target_column", data.target_column},
               {"noise_sd", data.noise_sd},
               {"separation", data.separation}};
  j["hidden"] = hidden;
  j["iterations"] = iterations;
  j["learning_rate"] = learning_rate;
  j["clip_norm"] = clip_norm;
  j["site_counts"] = site_counts;
  j["epsilons"] = epsilons;
  j["samples_per_site"] = samples_per_site;
  j["compositions"] = compositions;
  j["write_transcript"] = write_transcript;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  const ExperimentKind kind =
      j.contains("experiment") ? ParseExperimentKind(j.at("experiment").get<std::string>())
                               : ExperimentKind::kLinreg;
  ExperimentConfig c = Defaults(kind);
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("axis", c.axis);
  get("grid", c.grid);
  get("num_sites", c.num_sites);
  get("dim", c.dim);
  get("num_samples", c.num_samples);
  get("epsilon", c.epsilon);
  get("delta", c.delta);
  get("seeds", c.seeds);
  get("modes", c.modes);
  get("hidden", c.hidden);
  get("iterations", c.iterations);
  get("learning_rate", c.learning_rate);
  get("clip_norm", c.clip_norm);
  get("site_counts", c.site_counts);
  get("epsilons", c.epsilons);
  get("samples_per_site", c.samples_per_site);
  get("compositions", c.compositions);
  get("write_transcript", c.write_transcript);
  if (j.contains("loss")) {
    const auto name = j.at("loss").get<std::string>();
    if (name == "linear_regression") {
      c.loss = LossKind::kLinearRegression;
    } else if (name == "logistic_regression") {
      c.loss = LossKind::kLogisticRegression;
    } else {
      throw Error(ErrorCode::kParameter, "unknown loss " + name);
    }
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (d.contains("kind")) c.data.kind = d.at("kind").get<std::string>();
    if (d.contains("csv_path")) c.data.csv_path = d.at("csv_path").get<std::string>();
    if (d.contains("target_column")) c.data.target_column = d.at("target_column").get<std::string>();
    if (d.contains("noise_sd")) c.data.noise_sd = d.at("noise_sd").get<double>();
    if (d.contains("separation")) c.data.separation = d.at("separation").get<double>();
    // Real-data regression defaults to the looser delta unless given.
    if (c.data.kind == "csv" && kind == ExperimentKind::kLinreg && !j.contains("delta")) {
      c.delta = 1e-3;
    }
  }
  for (auto& m : c.modes) m = CanonicalMode(m, kind);
  return c;
}

void ExperimentConfig::Validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kParameter, what); };
  if (grid.empty()) fail("grid must be nonempty");
  if (seeds.empty()) fail("need at least one seed");
  static const std::vector<std::string> kAllowed = {"non-priv", "pooled-dp", "cape", "capeFM",
                                                    "conv",     "local",     "dpfm", "objPert"};
  for (const auto& m : modes) {
    if (std::find(kAllowed.begin(), kAllowed.end(), m) == kAllowed.end()) fail("unknown mode " + m);
  }
  if (kind == ExperimentKind::kLinreg || kind == ExperimentKind::kNn) {
    if (modes.empty()) fail("mode set must be nonempty");
    if (num_sites < 1 || dim < 1 || num_samples < 1) fail("S, D, N must be >= 1");
    if (!(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0)) fail("need epsilon > 0, 0 < delta < 1");
  }
  if (kind == ExperimentKind::kLinreg) {
    if (axis != "epsilon" && axis != "N" && axis != "delta") fail("linreg axis must be epsilon, N or delta");
    if (data.kind != "synthetic" && data.kind != "csv") fail("data kind must be synthetic or csv");
    if (data.kind == "csv" && (data.csv_path.empty() || data.target_column.empty())) {
      fail("csv data needs csv_path and target_column");
    }
  }
  if (kind == ExperimentKind::kNn && axis != "epsilon") fail("nn axis must be epsilon");
  if (kind == ExperimentKind::kDeltaCompare || kind == ExperimentKind::kCollusionSweep) {
    if (site_counts.empty() || epsilons.empty()) fail("site_counts and epsilons must be nonempty");
    for (int s : site_counts) {
      if (s < 3) fail("site counts must be >= 3");
    }
    if (samples_per_site < 1) fail("samples_per_site must be >= 1");
  }
  if (kind == ExperimentKind::kHRatio) {
    for (double s : grid) {
      if (s < 1 || s > num_samples) fail("h-ratio grid needs 1 <= S <= N");
    }
    if (compositions < 1) fail("compositions must be >= 1");
  }
  for (double g : grid) {
    if (!(g > 0.0)) fail("grid values must be positive");
  }
}

bool ExperimentOutput::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const InvariantCheck& c) { return c.passed || !c.asserted; });
}

double ExperimentOutput::Mean(const std::string& panel, double x, const std::string& mode,
                              const std::string& metric) const {
  for (const auto& r : summary) {
    if (r.panel == panel && r.x == x && r.mode == mode && r.metric == metric) return r.mean;
  }
  return kNaN;
}

std::vector<SummaryRow> Summarize(const std::vector<ExperimentRecord>& records) {
  using Key = std::tuple<std::string, double, std::string, std::string>;
  std::map<Key, std::size_t> index;
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    const Key key{r.panel, r.x, r.mode, r.metric};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.panel, r.x, r.mode, r.metric, 0.0, 0.0, 0});
      values.emplace_back();
    }
    values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = values[i];
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    rows[i].mean = mean;
    rows[i].sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    rows[i].n_seeds = static_cast<int>(v.size());
  }
  return rows;
}

double ParameterError(const Eigen::VectorXd& w_true, const Eigen::VectorXd& w_hat) {
  if (w_true.size() != w_hat.size() || w_true.size() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vectors differ in size");
  }
  return (w_true - w_hat).norm() / static_cast<double>(w_true.size());
}

double SpearmanRho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kParameter, "spearman needs two equal series of length >= 2");
  }
  const std::vector<double> ra = Ranks(a), rb = Ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

void WriteRecordsCsv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << "experiment,panel,axis,x,mode,seed,num_sites,dim,num_samples,epsilon,delta,tau,"
         "num_colluders,metric,value\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << Csv(r.panel) << ',' << r.axis << ',' << Num(r.x) << ','
        << r.mode << ',' << r.seed << ',' << Num(r.num_sites) << ',' << Num(r.dim) << ','
        << Num(r.num_samples) << ',' << Num(r.epsilon) << ',' << Num(r.delta) << ','
        << Num(r.tau) << ',' << Num(r.num_colluders) << ',' << r.metric << ',' << Num(r.value)
        << '\n';
  }
}

void WriteSummaryCsv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "panel,x,mode,metric,mean,sd,n_seeds\n";
  for (const auto& r : rows) {
    out << Csv(r.panel) << ',' << Num(r.x) << ',' << r.mode << ',' << r.metric << ','
        << Num(r.mean) << ',' << Num(r.sd) << ',' << r.n_seeds << '\n';
  }
}

void WriteOutputs(const ExperimentConfig& config, const ExperimentOutput& output,
                  const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  {
    std::ofstream f(root / "records.csv");
    WriteRecordsCsv(output.records, f);
  }
  {
    std::ofstream f(root / "summary.csv");
    WriteSummaryCsv(output.summary, f);
  }
  {
    std::ofstream f(root / "config.json");
    f << config.ToJson().dump(2) << '\n';
  }
  {
    std::ofstream f(root / "checks.csv");
    f << "check,asserted,passed,detail\n";
    for (const auto& c : output.checks) {
      f << Csv(c.name) << ',' << (c.asserted ? 1 : 0) << ',' << (c.passed ? 1 : 0) << ','
        << Csv(c.detail) << '\n';
    }
  }
  if (!output.cell_errors.empty()) {
    std::ofstream f(root / "errors.log");
    for (const auto& e : output.cell_errors) f << e << '\n';
  }
  if (config.write_transcript) {
    std::ofstream f(root / "transcript.ndjson");
    f << output.transcript_ndjson;
  }
}

ExperimentOutput RunExperiment(const ExperimentConfig& config) { return Runner(config).Run(); }

}  // namespace cape
