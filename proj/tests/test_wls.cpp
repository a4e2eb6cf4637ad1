#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "crf/rng.hpp"
#include "crf/wls.hpp"
#include "doctest.h"

using namespace crf;

namespace {

DesignAssembly random_design(RngStream& rng, std::size_t M,
                             std::size_t clusters, bool allow_empty) {
  DesignAssembly d;
  d.M = M;
  d.counts.assign(M, 0);
  for (std::size_t i = 0; i < clusters; ++i) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::uint32_t> rows(n);
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
      rows[j] = std::uint32_t(rng.below(M));
      y[j] = rng.next_normal();
      d.counts[rows[j]]++;
    }
    d.total_rows += n;
    d.max_cluster_size = std::max(d.max_cluster_size, n);
    d.leaf_rows.push_back(std::move(rows));
    d.y.push_back(std::move(y));
  }
  if (!allow_empty) {
    // fill any empty leaf with a singleton cluster
    for (std::size_t m = 0; m < M; ++m)
      if (d.counts[m] == 0) {
        d.leaf_rows.push_back({std::uint32_t(m)});
        d.y.push_back({rng.next_normal()});
        d.counts[m] = 1;
        d.total_rows += 1;
        d.max_cluster_size = std::max<std::size_t>(d.max_cluster_size, 1);
      }
  }
  return d;
}

Eigen::MatrixXd dense_normal(const DesignAssembly& d, const WeightSpec& spec) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d.M, d.M);
  for (std::size_t i = 0; i < d.leaf_rows.size(); ++i) {
    const std::size_t n = d.leaf_rows[i].size();
    Eigen::MatrixXd chi = Eigen::MatrixXd::Zero(n, d.M);
    for (std::size_t j = 0; j < n; ++j) chi(j, d.leaf_rows[i][j]) = 1.0;
    auto wflat = weight_dense(spec, n);
    Eigen::MatrixXd W(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) W(a, b) = wflat[a * n + b];
    A += chi.transpose() * W * chi;
  }
  return A;
}

Eigen::VectorXd dense_rhs(const DesignAssembly& d, const WeightSpec& spec) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(d.M);
  for (std::size_t i = 0; i < d.leaf_rows.size(); ++i) {
    const std::size_t n = d.leaf_rows[i].size();
    std::vector<double> wy(n);
    weight_matvec(spec, d.y[i], wy);
    for (std::size_t j = 0; j < n; ++j) r(d.leaf_rows[i][j]) += wy[j];
  }
  return r;
}

WeightSpec random_spec(RngStream& rng) {
  const int pick = int(rng.below(3));
  const WeightClass cls = pick == 0   ? WeightClass::kIdentity
                          : pick == 1 ? WeightClass::kEquicorrelated
                                      : WeightClass::kAr1;
  auto base = WeightSpec::make(cls);
  return base.with_rho(base.gamma_lo +
                       (base.gamma_hi - base.gamma_lo) * rng.next_double());
}

}  // namespace

TEST_SUITE("wls") {

TEST_CASE("normal matvec spec examples") {
  // one cluster, both rows in the single leaf, equicorrelated rho=0.5
  DesignAssembly d;
  d.M = 1;
  d.leaf_rows = {{0, 0}};
  d.y = {{1.0, 2.0}};
  d.counts = {2};
  d.total_rows = 2;
  d.max_cluster_size = 2;
  auto equi = WeightSpec::make(WeightClass::kEquicorrelated, 0.5);
  auto out = normal_matvec(d, equi, std::vector<double>{1.0});
  CHECK(out[0] == doctest::Approx(4.0 / 3.0));

  // rows in different leaves, ar1
  DesignAssembly d2;
  d2.M = 2;
  d2.leaf_rows = {{0, 1}};
  d2.y = {{0.0, 0.0}};
  d2.counts = {1, 1};
  d2.total_rows = 2;
  d2.max_cluster_size = 2;
  auto ar1 = WeightSpec::make(WeightClass::kAr1, 0.5);
  auto out2 = normal_matvec(d2, ar1, std::vector<double>{1.0, 0.0});
  CHECK(out2[0] == doctest::Approx(1.0));
  CHECK(out2[1] == doctest::Approx(-0.5));

  // identity reduces to counts
  auto ident = WeightSpec::make(WeightClass::kIdentity);
  auto out3 = normal_matvec(d, ident, std::vector<double>{3.0});
  CHECK(out3[0] == doctest::Approx(6.0));
}

TEST_CASE("cg basics") {
  auto identity_op = [](std::span<const double> b, std::span<double> out) {
    std::copy(b.begin(), b.end(), out.begin());
  };
  std::vector<double> rhs{1.0, -2.0};
  auto rep = cg_solve(identity_op, rhs, 1e-12, 10);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 1);
  CHECK(rep.x[0] == doctest::Approx(1.0));
  CHECK(rep.x[1] == doctest::Approx(-2.0));

  auto diag_op = [](std::span<const double> b, std::span<double> out) {
    out[0] = 2.0 * b[0];
    out[1] = 4.0 * b[1];
  };
  std::vector<double> rhs2{2.0, 4.0};
  auto rep2 = cg_solve(diag_op, rhs2, 1e-12, 10);
  CHECK(rep2.x[0] == doctest::Approx(1.0));
  CHECK(rep2.x[1] == doctest::Approx(1.0));

  // an operator that cannot contract the residual trips the cap
  auto bad_op = [](std::span<const double> b, std::span<double> out) {
    out[0] = -b[0];
    out[1] = -b[1];  // negative definite
  };
  std::vector<double> rhs3{1.0, 1e-3};
  CHECK_THROWS_AS(cg_solve(bad_op, rhs3, 1e-14, 3), ConvergenceError);
}

TEST_CASE("fitted values: identity gives exact leaf means") {
  RngStream rng(21, 0, 0, RngStage::kMonteCarlo);
  auto d = random_design(rng, 6, 15, false);
  ForestConfig cfg;
  cfg.beta = 0.8;
  auto fit =
      fitted_leaf_values(d, WeightSpec::make(WeightClass::kIdentity), cfg);
  std::vector<double> sums(d.M, 0.0);
  for (std::size_t i = 0; i < d.leaf_rows.size(); ++i)
    for (std::size_t j = 0; j < d.leaf_rows[i].size(); ++j)
      sums[d.leaf_rows[i][j]] += d.y[i][j];
  for (std::size_t m = 0; m < d.M; ++m)
    CHECK(fit.gamma[m] == sums[m] / double(d.counts[m]));  // bitwise
}

TEST_CASE("full-cluster single leaf keeps the mean under equicorrelation") {
  DesignAssembly d;
  d.M = 1;
  d.leaf_rows = {{0, 0}};
  d.y = {{3.0, 7.0}};
  d.counts = {2};
  d.total_rows = 2;
  d.max_cluster_size = 2;
  ForestConfig cfg;
  cfg.beta = 0.8;
  for (double rho : {0.2, 0.5, 0.9}) {
    auto fit = fitted_leaf_values(
        d, WeightSpec::make(WeightClass::kEquicorrelated, rho), cfg);
    CHECK(fit.gamma[0] == doctest::Approx(5.0).epsilon(1e-10));
  }
}

TEST_CASE("cg matches dense solves on random designs") {
  RngStream rng(22, 0, 0, RngStage::kMonteCarlo);
  ForestConfig cfg;
  cfg.beta = 0.8;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t M = 2 + rng.below(29);
    auto d = random_design(rng, M, 10 + rng.below(41), false);
    auto spec = random_spec(rng);
    Eigen::MatrixXd A = dense_normal(d, spec);
    Eigen::VectorXd rhs = dense_rhs(d, spec);
    Eigen::VectorXd gamma = A.ldlt().solve(rhs);
    auto fit = fitted_leaf_values(d, spec, cfg);
    for (std::size_t m = 0; m < M; ++m)
      CHECK(std::abs(fit.gamma[m] - gamma(m)) < 1e-8);
    const std::size_t col = rng.below(M);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(M);
    e(col) = 1.0;
    Eigen::VectorXd a = A.ldlt().solve(e);
    auto sol = basis_solve(d, spec, col, cfg);
    for (std::size_t m = 0; m < M; ++m)
      CHECK(std::abs(sol.x[m] - a(m)) < 1e-8);
  }
}

TEST_CASE("empty leaf is imputed and flagged") {
  RngStream rng(23, 0, 0, RngStage::kMonteCarlo);
  auto d = random_design(rng, 5, 8, true);
  // force leaf 4 empty
  for (std::size_t i = 0; i < d.leaf_rows.size(); ++i)
    for (std::size_t j = 0; j < d.leaf_rows[i].size(); ++j)
      if (d.leaf_rows[i][j] == 4) d.leaf_rows[i][j] = 0;
  d.counts.assign(5, 0);
  for (const auto& rows : d.leaf_rows)
    for (auto r : rows) d.counts[r]++;
  REQUIRE(d.has_empty_leaf());
  ForestConfig cfg;
  cfg.beta = 0.8;
  for (auto spec : {WeightSpec::make(WeightClass::kIdentity),
                    WeightSpec::make(WeightClass::kEquicorrelated, 0.4)}) {
    auto fit = fitted_leaf_values(d, spec, cfg);
    CHECK(fit.imputed[4] == 1);
    CHECK(std::isfinite(fit.gamma[4]));
    double lo = 1e300, hi = -1e300;
    for (std::size_t m = 0; m < 4; ++m) {
      lo = std::min(lo, fit.gamma[m]);
      hi = std::max(hi, fit.gamma[m]);
    }
    CHECK(fit.gamma[4] >= lo);
    CHECK(fit.gamma[4] <= hi);
  }
  CHECK_THROWS(basis_solve(d, WeightSpec::make(WeightClass::kIdentity), 4,
                           cfg));
}

TEST_CASE("weight sum identity and absolute bound") {
  // implied observation weights of a tree prediction: omega = W chi a_m
  // with a_m the basis column of the queried leaf
  RngStream rng(24, 0, 0, RngStage::kMonteCarlo);
  ForestConfig cfg;
  cfg.beta = 0.8;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t M = 2 + rng.below(19);
    auto d = random_design(rng, M, 8 + rng.below(20), false);
    auto spec = random_spec(rng);
    const std::size_t m = rng.below(M);
    auto a = basis_solve(d, spec, m, cfg).x;
    double total = 0.0, absolute = 0.0;
    for (std::size_t i = 0; i < d.leaf_rows.size(); ++i) {
      const std::size_t n = d.leaf_rows[i].size();
      std::vector<double> ai(n), wai(n);
      for (std::size_t j = 0; j < n; ++j) ai[j] = a[d.leaf_rows[i][j]];
      weight_matvec(spec, ai, wai);
      for (double w : wai) {
        total += w;
        absolute += std::abs(w);
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    // C_W, c_W over Gamma endpoints for this class and max cluster size
    double cw = 1e300, CW = 0.0;
    for (double rho : {spec.gamma_lo, spec.gamma_hi})
      for (std::size_t n = 1; n <= d.max_cluster_size; ++n) {
        cw = std::min(cw, dominance_margin(spec.with_rho(rho), n));
        CW = std::max(CW, weight_one_norm(spec.with_rho(rho), n));
      }
    CHECK(absolute <= 5.0 * CW / cw + 1e-9);
  }
}

TEST_CASE("default iteration cap grows with the condition bound") {
  auto ident = WeightSpec::make(WeightClass::kIdentity);
  auto ar1 = WeightSpec::make(WeightClass::kAr1, 0.9);
  CHECK(default_cg_max_iter(ar1, 8, 1e-10) >=
        default_cg_max_iter(ident, 8, 1e-10));
}

}  // TEST_SUITE
