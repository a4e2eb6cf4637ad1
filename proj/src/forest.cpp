#include "crf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace crf {
namespace {

void run_jobs(std::size_t n, std::size_t threads,
              const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Fit one tree's shared structure (partition, eval design, pilot
// residuals), then one ClusteredTree per method differing only in rho and
// leaf values.
std::vector<ClusteredTree> fit_tree_methods(
    const ClusteredDataset& ds, std::vector<std::size_t> split_ids,
    std::vector<std::size_t> eval_ids, std::vector<std::size_t> corr_ids,
    const ForestConfig& cfg, std::span<const ForestMethod> methods,
    RngStream& split_rng) {
  ClusteredTree proto;
  proto.split_ids = std::move(split_ids);
  proto.eval_ids = std::move(eval_ids);
  proto.corr_ids = std::move(corr_ids);

  const FlatRows rows = FlatRows::from_clusters(ds, proto.split_ids);
  DesignAssembly design;
  if (rows.size() == 0) {
    proto.degenerate = true;
  } else {
    proto.partition = fit_partition(rows, cfg, split_rng);
    design = assemble_design(proto.partition, ds, proto.eval_ids);
    proto.degenerate = design.total_rows == 0;
  }
  if (proto.degenerate)
    return std::vector<ClusteredTree>(methods.size(), proto);

  const WeightSpec base =
      WeightSpec::make(cfg.weight_class, 0.0, cfg.gamma_lo, cfg.gamma_hi);
  std::vector<double> rho(methods.size(), 0.0);
  if (cfg.weight_class != WeightClass::kIdentity) {
    bool need_residuals = false;
    for (const auto& m : methods)
      need_residuals |= m.strategy != RhoStrategy::kFixed;
    PilotResiduals res;
    if (need_residuals) {
      if (proto.corr_ids.empty())
        throw ForestError(
            "rho estimation needs a correlation subsample; use the fixed "
            "strategy instead");
      res = pilot_residuals(proto.partition, ds, proto.corr_ids);
    }
    std::vector<RhoLossTarget> targets;
    std::vector<std::size_t> target_of(methods.size(), SIZE_MAX);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const auto& method = methods[m];
      if (method.strategy == RhoStrategy::kFixed) {
        base.with_rho(method.rho_fixed).require_admissible();
        rho[m] = method.rho_fixed;
      } else if (method.strategy == RhoStrategy::kMoment) {
        rho[m] = moment_rho(res, base);
      } else {
        RhoLossTarget t;
        if (method.strategy == RhoStrategy::kQShift) {
          t.masses = leaf_mass(method.shift, proto.partition,
                               res.design.counts);
          t.normalize = true;
          double occupied = 0.0;
          for (std::size_t l = 0; l < t.masses.size(); ++l)
            if (res.design.counts[l] > 0) occupied += t.masses[l];
          if (occupied <= 0.0) {
            // Q only meets corr-empty leaves: fall back to the training
            // loss for this tree.
            t.masses.assign(res.design.counts.begin(),
                            res.design.counts.end());
            t.normalize = false;
          }
        } else {  // kTrain
          t.masses.assign(res.design.counts.begin(),
                          res.design.counts.end());
          t.normalize = false;
        }
        target_of[m] = targets.size();
        targets.push_back(std::move(t));
      }
    }
    if (!targets.empty()) {
      auto curves = estimate_rho_multi(res, base, cfg, targets);
      for (std::size_t m = 0; m < methods.size(); ++m)
        if (target_of[m] != SIZE_MAX) rho[m] = curves[target_of[m]].rho_hat;
    }
  } else {
    for (const auto& m : methods)
      if (m.strategy == RhoStrategy::kFixed && m.rho_fixed != 0.0)
        throw ConfigError("identity weights require rho 0");
  }

  std::vector<ClusteredTree> out(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::size_t prior = m;
    for (std::size_t p = 0; p < m; ++p)
      if (rho[p] == rho[m]) {
        prior = p;
        break;
      }
    out[m] = proto;
    out[m].rho_hat = rho[m];
    if (prior != m) {
      out[m].leaf_values = out[prior].leaf_values;
      out[m].imputed = out[prior].imputed;
    } else {
      LeafFit fit = fitted_leaf_values(design, base.with_rho(rho[m]), cfg);
      out[m].leaf_values = std::move(fit.gamma);
      out[m].imputed = std::move(fit.imputed);
    }
  }
  return out;
}

double tree_value(const ClusteredTree& t, std::span<const double> x) {
  return t.leaf_values[t.partition.leaf_index(x)];
}

// Per-bag mean over non-degenerate trees; returns usable bag means.
std::vector<double> bag_means(const ClusteredForest& forest,
                              std::span<const double> x) {
  std::vector<double> means;
  means.reserve(forest.bags.size());
  for (const auto& bag : forest.bags) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& t : bag) {
      if (t.degenerate) continue;
      sum += tree_value(t, x);
      ++used;
    }
    if (used > 0) means.push_back(sum / double(used));
  }
  return means;
}

}  // namespace

ClusteredTree fit_tree(const ClusteredDataset& ds,
                       std::span<const std::size_t> split_ids,
                       std::span<const std::size_t> eval_ids,
                       std::span<const std::size_t> corr_ids,
                       const ForestConfig& cfg,
                       const CovariateShiftSpec& shift, RngStream& rng) {
  if (cfg.honesty) {
    std::vector<std::size_t> all;
    all.insert(all.end(), split_ids.begin(), split_ids.end());
    all.insert(all.end(), eval_ids.begin(), eval_ids.end());
    all.insert(all.end(), corr_ids.begin(), corr_ids.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
      throw ForestError("honest tree subsets must be pairwise disjoint");
  }
  ForestMethod method;
  method.strategy = cfg.rho_strategy;
  method.rho_fixed = cfg.rho_fixed;
  method.shift = shift;
  auto trees = fit_tree_methods(
      ds, {split_ids.begin(), split_ids.end()},
      {eval_ids.begin(), eval_ids.end()},
      {corr_ids.begin(), corr_ids.end()}, cfg,
      std::span(&method, 1), rng);
  return std::move(trees[0]);
}

std::vector<ClusteredForest> fit_forests(
    const ClusteredDataset& ds, const ForestConfig& cfg0,
    std::span<const ForestMethod> methods) {
  if (methods.empty()) throw ForestError("no methods to fit");
  ds.validate();
  ForestConfig cfg = cfg0;
  cfg.resolve(ds.num_clusters());
  cfg.validate();
  for (const auto& m : methods)
    if (m.strategy == RhoStrategy::kQShift) m.shift.validate(ds.d);

  const std::size_t I = ds.num_clusters();
  const std::size_t half = I / 2;

  struct TreeJob {
    std::size_t r = 0, b = 0;
    std::vector<std::size_t> split, eval, corr;
  };
  std::vector<TreeJob> jobs;
  jobs.reserve(cfg.R * cfg.B);
  for (std::size_t r = 0; r < cfg.R; ++r) {
    std::vector<std::size_t> bag_pool;
    if (cfg.R == 1) {
      bag_pool = iota_indices(I);
    } else {
      RngStream bag_rng(cfg.seed, r, 0, RngStage::kSubsetDraw);
      bag_pool = sample_without_replacement(iota_indices(I), half, bag_rng);
    }
    for (std::size_t b = 0; b < cfg.B; ++b) {
      RngStream sub_rng(cfg.seed, r, b + 1, RngStage::kSubsetDraw);
      TreeJob job;
      job.r = r;
      job.b = b;
      if (cfg.honesty) {
        auto draw = sample_without_replacement(
            bag_pool, 2 * cfg.s_I + cfg.s_corr, sub_rng);
        job.split.assign(draw.begin(), draw.begin() + cfg.s_I);
        job.eval.assign(draw.begin() + cfg.s_I,
                        draw.begin() + 2 * cfg.s_I);
        job.corr.assign(draw.begin() + 2 * cfg.s_I, draw.end());
      } else {
        const std::size_t take = std::min(
            bag_pool.size(),
            std::max<std::size_t>(
                1, std::size_t(cfg.dishonest_frac * double(I))));
        job.split = sample_without_replacement(bag_pool, take, sub_rng);
        job.eval = job.split;
      }
      jobs.push_back(std::move(job));
    }
  }

  std::vector<ForestMethod> resolved(methods.begin(), methods.end());
  if (!cfg.honesty)
    for (auto& m : resolved) {
      // dishonest mode has no correlation subsample; rho is a fixed
      // hyperparameter
      if (m.strategy != RhoStrategy::kFixed) {
        m.strategy = RhoStrategy::kFixed;
        m.rho_fixed = cfg.rho_fixed;
      }
    }

  std::vector<std::vector<ClusteredTree>> fitted(jobs.size());
  run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
    RngStream split_rng(cfg.seed, jobs[j].r, jobs[j].b + 1,
                        RngStage::kSplitNoise);
    fitted[j] = fit_tree_methods(ds, jobs[j].split, jobs[j].eval,
                                 jobs[j].corr, cfg, resolved, split_rng);
  });

  auto [lo, hi] = ds.bounding_box();
  std::vector<ClusteredForest> forests(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    forests[m].config = cfg;
    forests[m].config.rho_strategy = methods[m].strategy;
    forests[m].config.rho_fixed = methods[m].rho_fixed;
    forests[m].d = ds.d;
    forests[m].box_lo = lo;
    forests[m].box_hi = hi;
    forests[m].bags.assign(cfg.R, {});
    for (auto& bag : forests[m].bags) bag.reserve(cfg.B);
  }
  for (std::size_t j = 0; j < jobs.size(); ++j)
    for (std::size_t m = 0; m < methods.size(); ++m)
      forests[m].bags[jobs[j].r].push_back(std::move(fitted[j][m]));
  return forests;
}

ClusteredForest fit_forest(const ClusteredDataset& ds,
                           const ForestConfig& cfg,
                           const CovariateShiftSpec& shift) {
  ForestMethod method;
  method.strategy = cfg.rho_strategy;
  method.rho_fixed = cfg.rho_fixed;
  method.shift = shift;
  auto forests = fit_forests(ds, cfg, std::span(&method, 1));
  return std::move(forests[0]);
}

double predict(const ClusteredForest& forest, std::span<const double> x,
               bool* extrapolated) {
  if (x.size() != forest.d)
    throw std::invalid_argument("query dimension mismatch");
  if (extrapolated) {
    *extrapolated = false;
    for (std::size_t j = 0; j < forest.d; ++j)
      if (x[j] < forest.box_lo[j] || x[j] > forest.box_hi[j])
        *extrapolated = true;
  }
  const std::vector<double> means = bag_means(forest, x);
  if (means.empty()) throw ForestError("all trees degenerate");
  double sum = 0.0;
  for (double m : means) sum += m;
  return sum / double(means.size());
}

double variance_little_bags(const ClusteredForest& forest,
                            std::span<const double> x) {
  if (!forest.config.honesty)
    throw ForestError("little-bags variance requires honest fitting");
  if (forest.bags.size() < 2)
    throw ForestError(
        "little-bags variance requires R >= 2 bags; refit with higher R");
  const std::vector<double> means = bag_means(forest, x);
  if (means.size() < 2) throw ForestError("fewer than 2 usable bags");
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= double(means.size());
  double v = 0.0;
  for (double m : means) v += (m - mu) * (m - mu);
  return v / double(means.size());
}

IntervalEstimate confidence_interval(const ClusteredForest& forest,
                                     std::span<const double> x,
                                     double alpha_ci) {
  if (!(alpha_ci > 0.0 && alpha_ci < 1.0))
    throw std::invalid_argument("alpha_ci must lie in (0, 1)");
  IntervalEstimate est;
  est.point = predict(forest, x);
  est.variance = variance_little_bags(forest, x);
  const double z = normal_quantile(1.0 - alpha_ci / 2.0);
  const double hw = z * std::sqrt(est.variance);
  est.lo = est.point - hw;
  est.hi = est.point + hw;
  return est;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("quantile level must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley refinement against
  // erfc, giving near machine precision.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
         c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
         a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double integrated_mean(const ClusteredForest& forest,
                       const CovariateShiftSpec& shift, std::size_t n_draws,
                       RngStream& rng) {
  switch (shift.kind) {
    case CovariateShiftSpec::Kind::kPointMass:
      return predict(forest, shift.point);
    case CovariateShiftSpec::Kind::kEmpirical: {
      double sum = 0.0;
      for (const auto& row : shift.rows) sum += predict(forest, row);
      return sum / double(shift.rows.size());
    }
    case CovariateShiftSpec::Kind::kUniformBox: {
      if (n_draws == 0)
        throw std::invalid_argument("uniform box integration needs draws");
      std::vector<double> x(forest.d);
      double sum = 0.0;
      for (std::size_t i = 0; i < n_draws; ++i) {
        for (std::size_t j = 0; j < forest.d; ++j)
          x[j] = rng.uniform(shift.lo[j], shift.hi[j]);
        sum += predict(forest, x);
      }
      return sum / double(n_draws);
    }
    case CovariateShiftSpec::Kind::kTraining:
      throw std::invalid_argument(
          "integrated_mean needs an explicit target distribution");
  }
  throw std::logic_error("unknown shift kind");
}

double recommend_ratio(std::size_t I, std::size_t n_c, std::size_t d,
                       double alpha_split, double pi_frac, double c_bias,
                       double v_hat) {
  if (I == 0 || n_c == 0 || d == 0 || alpha_split <= 0.0 ||
      alpha_split > 0.5 || pi_frac <= 0.0 || c_bias <= 0.0 || v_hat <= 0.0)
    throw std::invalid_argument("recommend_ratio inputs must be positive");
  const double phi = pi_frac * std::log(1.0 / (1.0 - alpha_split)) /
                     std::log(1.0 / alpha_split);
  const double dd = double(d);
  const double inner = c_bias * c_bias * phi * double(I) /
                       (std::pow(double(n_c), 2.0 * phi / dd) * v_hat);
  return 2.0 * std::pow(inner, dd / (2.0 * phi + dd));
}

double estimate_vq(const ClusteredForest& forest,
                   const CovariateShiftSpec& shift, std::size_t n_draws,
                   RngStream& rng) {
  std::vector<std::vector<double>> points;
  switch (shift.kind) {
    case CovariateShiftSpec::Kind::kPointMass:
      points.push_back(shift.point);
      break;
    case CovariateShiftSpec::Kind::kEmpirical:
      points = shift.rows;
      break;
    case CovariateShiftSpec::Kind::kUniformBox:
      for (std::size_t i = 0; i < std::max<std::size_t>(1, n_draws); ++i) {
        std::vector<double> x(forest.d);
        for (std::size_t j = 0; j < forest.d; ++j)
          x[j] = rng.uniform(shift.lo[j], shift.hi[j]);
        points.push_back(std::move(x));
      }
      break;
    case CovariateShiftSpec::Kind::kTraining:
      throw std::invalid_argument(
          "estimate_vq needs an explicit target distribution");
  }
  double acc = 0.0;
  for (const auto& x : points) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& bag : forest.bags)
      for (const auto& t : bag) {
        if (t.degenerate) continue;
        const double v = tree_value(t, x);
        sum += v;
        sq += v * v;
        ++n;
      }
    if (n < 2) throw ForestError("too few trees to estimate variance");
    const double mean = sum / double(n);
    acc += (sq - double(n) * mean * mean) / double(n - 1);
  }
  return acc / double(points.size());
}

}  // namespace crf
