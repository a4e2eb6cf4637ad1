#include "crf/simulation.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace crf {
namespace {

// Correlated standard normals with a common exchangeable correlation:
// z_j = sqrt(corr) g0 + sqrt(1-corr) g_j.
void equicorr_normals(RngStream& rng, double corr, std::span<double> z) {
  const double shared = std::sqrt(corr) * rng.next_normal();
  const double own = std::sqrt(1.0 - corr);
  for (double& v : z) v = shared + own * rng.next_normal();
}

double ramp_sigma(const DgpSpec& spec, double x) {
  if (x <= spec.a2) return 1.0;
  if (x >= spec.b1) return spec.eta;
  return 1.0 + (spec.eta - 1.0) * (x - spec.a2) / (spec.b1 - spec.a2);
}

}  // namespace

std::string to_string(DgpId id) {
  switch (id) {
    case DgpId::kIntro2d:
      return "intro_2d";
    case DgpId::kShiftEquicorr:
      return "shift_equicorr";
    case DgpId::kAr2Inference:
      return "ar2_inference";
    case DgpId::kTheorem2:
      return "theorem2";
  }
  throw std::logic_error("unknown dgp");
}

DgpId dgp_from_string(const std::string& s) {
  if (s == "intro_2d") return DgpId::kIntro2d;
  if (s == "shift_equicorr") return DgpId::kShiftEquicorr;
  if (s == "ar2_inference") return DgpId::kAr2Inference;
  if (s == "theorem2") return DgpId::kTheorem2;
  throw std::invalid_argument("unknown dgp: " + s);
}

DgpSpec DgpSpec::preset(DgpId id, std::size_t I, std::uint64_t seed) {
  DgpSpec spec;
  spec.id = id;
  spec.I = I;
  spec.seed = seed;
  switch (id) {
    case DgpId::kIntro2d:
      spec.n_i = 2;
      spec.d = 2;
      break;
    case DgpId::kShiftEquicorr:
      spec.n_i = 4;
      spec.d = 1;
      break;
    case DgpId::kAr2Inference:
      spec.n_i = 5;
      spec.d = 1;
      break;
    case DgpId::kTheorem2:
      spec.n_i = 2;
      spec.d = 1;
      break;
  }
  return spec;
}

void DgpSpec::validate() const {
  if (I == 0 || n_i == 0 || d == 0)
    throw ConfigError("dgp needs positive I, n_i, d");
  if (!(corr >= 0.0 && corr < 1.0))
    throw ConfigError("equicorrelation must lie in [0, 1)");
  if (id == DgpId::kAr2Inference) {
    // stationarity triangle for AR(2)
    if (!(phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0 && std::abs(phi2) < 1.0))
      throw ConfigError("AR(2) coefficients are non-stationary");
  }
  if (id == DgpId::kTheorem2) {
    if (!(eta >= 1.0) || !(theorem2_corr >= 0.0 && theorem2_corr < 1.0) ||
        !(0.0 < a2 && a2 < b1 && b1 < 1.0))
      throw ConfigError("invalid theorem2 ramp parameters");
  }
  if (id == DgpId::kIntro2d && d != 2)
    throw ConfigError("intro_2d is a d=2 process");
  if ((id == DgpId::kShiftEquicorr || id == DgpId::kTheorem2) && d != 1)
    throw ConfigError("this dgp is a d=1 process");
}

GeneratedData generate(const DgpSpec& spec, std::uint64_t rep) {
  spec.validate();
  RngStream rng(spec.seed, rep, 0, RngStage::kDgp);
  GeneratedData out;
  out.ds.d = spec.d;
  out.ds.clusters.reserve(spec.I);
  const std::size_t n = spec.n_i;

  std::vector<double> z(n), eps(n);
  for (std::size_t i = 0; i < spec.I; ++i) {
    Cluster c;
    c.id = std::to_string(i);
    c.x.resize(n * spec.d);
    c.y.resize(n);
    switch (spec.id) {
      case DgpId::kIntro2d: {
        for (double& v : c.x) v = rng.next_normal();
        equicorr_normals(rng, spec.corr, z);
        for (std::size_t j = 0; j < n; ++j) {
          const double* x = c.row(j, spec.d);
          c.y[j] = std::tanh(x[0]) + std::tanh(x[1]) + z[j];
        }
        break;
      }
      case DgpId::kShiftEquicorr: {
        for (double& v : c.x) v = rng.next_normal();
        equicorr_normals(rng, spec.corr, z);
        for (std::size_t j = 0; j < n; ++j) {
          const double xj = c.x[j];
          const double sigma = 0.25 + 1.0 / (1.0 + std::exp(4.0 * xj));
          c.y[j] = std::tanh(xj) + sigma * z[j];
        }
        break;
      }
      case DgpId::kAr2Inference: {
        for (double& v : c.x) v = rng.next_normal();
        // exact stationary start: gamma0, gamma1 from Yule-Walker with
        // unit innovation variance
        const double p1 = spec.phi1, p2 = spec.phi2;
        const double gamma0 =
            (1.0 - p2) / ((1.0 + p2) * ((1.0 - p2) * (1.0 - p2) - p1 * p1));
        const double gamma1 = p1 / (1.0 - p2) * gamma0;
        eps[0] = std::sqrt(gamma0) * rng.next_normal();
        if (n > 1)
          eps[1] = (gamma1 / gamma0) * eps[0] +
                   std::sqrt(gamma0 - gamma1 * gamma1 / gamma0) *
                       rng.next_normal();
        for (std::size_t j = 2; j < n; ++j)
          eps[j] = p1 * eps[j - 1] + p2 * eps[j - 2] + rng.next_normal();
        for (std::size_t j = 0; j < n; ++j)
          c.y[j] = 4.0 * std::sin(c.row(j, spec.d)[0]) + eps[j];
        break;
      }
      case DgpId::kTheorem2: {
        for (double& v : c.x) v = rng.next_double();
        equicorr_normals(rng, spec.theorem2_corr, z);
        for (std::size_t j = 0; j < n; ++j)
          c.y[j] = ramp_sigma(spec, c.x[j]) * z[j];
        break;
      }
    }
    out.ds.clusters.push_back(std::move(c));
  }

  switch (spec.id) {
    case DgpId::kIntro2d:
      out.truth = [](std::span<const double> x) {
        return std::tanh(x[0]) + std::tanh(x[1]);
      };
      break;
    case DgpId::kShiftEquicorr:
      out.truth = [](std::span<const double> x) { return std::tanh(x[0]); };
      break;
    case DgpId::kAr2Inference:
      out.truth = [](std::span<const double> x) {
        return 4.0 * std::sin(x[0]);
      };
      break;
    case DgpId::kTheorem2:
      out.truth = [](std::span<const double>) { return 0.0; };
      break;
  }
  return out;
}

double evaluate_mspe(const ClusteredForest& forest,
                     const std::function<double(std::span<const double>)>&
                         truth,
                     const CovariateShiftSpec& shift, std::size_t n_eval,
                     RngStream& rng) {
  auto sq_err = [&](std::span<const double> x) {
    const double e = predict(forest, x) - truth(x);
    return e * e;
  };
  switch (shift.kind) {
    case CovariateShiftSpec::Kind::kPointMass:
      return sq_err(shift.point);
    case CovariateShiftSpec::Kind::kEmpirical: {
      double sum = 0.0;
      for (const auto& row : shift.rows) sum += sq_err(row);
      return sum / double(shift.rows.size());
    }
    case CovariateShiftSpec::Kind::kUniformBox: {
      if (n_eval == 0)
        throw std::invalid_argument("box MSPE needs evaluation draws");
      std::vector<double> x(forest.d);
      double sum = 0.0;
      for (std::size_t i = 0; i < n_eval; ++i) {
        for (std::size_t j = 0; j < forest.d; ++j)
          x[j] = rng.uniform(shift.lo[j], shift.hi[j]);
        sum += sq_err(x);
      }
      return sum / double(n_eval);
    }
    case CovariateShiftSpec::Kind::kTraining:
      throw std::invalid_argument(
          "MSPE evaluation needs an explicit target distribution");
  }
  throw std::logic_error("unknown shift kind");
}

ExperimentReport coverage_experiment(const DgpSpec& spec,
                                     const ForestConfig& cfg,
                                     std::span<const double> target,
                                     std::size_t reps,
                                     std::span<const ForestMethod> methods,
                                     std::span<const std::string> names) {
  if (reps == 0) throw std::invalid_argument("reps must be positive");
  if (methods.empty() || methods.size() != names.size())
    throw std::invalid_argument("methods and names must align");
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.reps = reps;

  std::vector<MethodStats> stats(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m)
    stats[m].name = names[m];
  std::vector<std::size_t> hits(methods.size(), 0);
  std::vector<double> widths(methods.size(), 0.0);
  std::vector<double> sqerr(methods.size(), 0.0);

  for (std::size_t rep = 0; rep < reps; ++rep) {
    GeneratedData data = generate(spec, rep);
    const double truth = data.truth(target);
    if (rep == 0) report.truth_at_target = truth;
    ForestConfig rep_cfg = cfg;
    rep_cfg.seed = cfg.seed ^ (0x9e3779b97f4a7c15ULL * (rep + 1));
    auto forests = fit_forests(data.ds, rep_cfg, methods);
    for (std::size_t m = 0; m < forests.size(); ++m) {
      const IntervalEstimate est =
          confidence_interval(forests[m], target, rep_cfg.alpha_ci);
      const bool hit = est.lo <= truth && truth <= est.hi;
      hits[m] += hit;
      widths[m] += est.hi - est.lo;
      const double e = est.point - truth;
      sqerr[m] += e * e;
      report.records.push_back(
          {rep, stats[m].name, est.point, est.lo, est.hi, hit});
    }
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    stats[m].coverage = double(hits[m]) / double(reps);
    stats[m].mean_ci_width = widths[m] / double(reps);
    stats[m].mse_at_target = sqerr[m] / double(reps);
  }
  report.methods = std::move(stats);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace crf
