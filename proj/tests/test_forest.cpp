#include <cmath>
#include <set>

#include "crf/forest.hpp"
#include "crf/simulation.hpp"
#include "doctest.h"

using namespace crf;

namespace {

ForestConfig small_config() {
  ForestConfig cfg;
  cfg.B = 8;
  cfg.R = 2;
  cfg.beta = 0.7;
  cfg.k = 5;
  cfg.threads = 1;
  return cfg;
}

ClusteredDataset tiny_data(std::size_t I, unsigned seed,
                           double response_scale = 1.0) {
  DgpSpec spec = DgpSpec::preset(DgpId::kShiftEquicorr, I, seed);
  auto data = generate(spec);
  if (response_scale != 1.0)
    for (auto& c : data.ds.clusters)
      for (double& y : c.y) y *= response_scale;
  return data.ds;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("constant response gives a constant forest") {
  auto ds = tiny_data(80, 1, 0.0);
  for (auto& c : ds.clusters)
    for (double& y : c.y) y = 7.0;
  auto cfg = small_config();
  auto forest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  for (double x : {-1.5, 0.0, 0.4, 2.0}) {
    double q[1] = {x};
    CHECK(predict(forest, q) == doctest::Approx(7.0).epsilon(1e-12));
  }
}

TEST_CASE("same seed is bit-identical, threads do not change results") {
  auto ds = tiny_data(60, 2);
  auto cfg = small_config();
  auto shift = CovariateShiftSpec::point_mass({0.5});
  cfg.rho_strategy = RhoStrategy::kQShift;
  auto f1 = fit_forest(ds, cfg, shift);
  auto f2 = fit_forest(ds, cfg, shift);
  cfg.threads = 2;
  auto f3 = fit_forest(ds, cfg, shift);
  for (double x : {-1.0, 0.0, 0.5, 1.0}) {
    double q[1] = {x};
    const double p1 = predict(f1, q);
    CHECK(p1 == predict(f2, q));
    CHECK(p1 == predict(f3, q));
    CHECK(variance_little_bags(f1, q) == variance_little_bags(f3, q));
  }
}

TEST_CASE("honest subsets are disjoint and sized per config") {
  auto ds = tiny_data(101, 3);
  auto cfg = small_config();
  auto forest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  ForestConfig resolved = cfg;
  resolved.resolve(ds.num_clusters());
  for (const auto& bag : forest.bags)
    for (const auto& tree : bag) {
      CHECK(tree.split_ids.size() == resolved.s_I);
      CHECK(tree.eval_ids.size() == resolved.s_I);
      CHECK(tree.corr_ids.size() == resolved.s_corr);
      std::set<std::size_t> seen;
      for (auto v : {&tree.split_ids, &tree.eval_ids, &tree.corr_ids})
        for (std::size_t id : *v) {
          CHECK(id < ds.num_clusters());
          CHECK(seen.insert(id).second);
        }
    }
}

TEST_CASE("rho = 0 matches the identity-weighted forest bitwise") {
  auto ds = tiny_data(70, 4);
  auto cfg = small_config();
  ForestMethod rho_zero{RhoStrategy::kFixed, 0.0,
                        CovariateShiftSpec::training()};
  cfg.weight_class = WeightClass::kEquicorrelated;
  std::vector<ForestMethod> methods{rho_zero};
  auto with_weights = fit_forests(ds, cfg, methods);
  cfg.weight_class = WeightClass::kAr1;
  auto ar1_zero = fit_forests(ds, cfg, methods);
  for (double x : {-1.2, -0.3, 0.1, 0.9}) {
    double q[1] = {x};
    CHECK(predict(with_weights[0], q) == predict(ar1_zero[0], q));
  }
}

TEST_CASE("shared-partition methods differ only in leaf values") {
  auto ds = tiny_data(70, 5);
  auto cfg = small_config();
  std::vector<ForestMethod> methods{
      {RhoStrategy::kFixed, 0.0, CovariateShiftSpec::training()},
      {RhoStrategy::kQShift, 0.0, CovariateShiftSpec::point_mass({0.5})}};
  auto forests = fit_forests(ds, cfg, methods);
  REQUIRE(forests.size() == 2);
  for (std::size_t r = 0; r < forests[0].bags.size(); ++r)
    for (std::size_t b = 0; b < forests[0].bags[r].size(); ++b) {
      const auto& t0 = forests[0].bags[r][b];
      const auto& t1 = forests[1].bags[r][b];
      CHECK(t0.split_ids == t1.split_ids);
      CHECK(t0.eval_ids == t1.eval_ids);
      CHECK(t0.partition.num_leaves() == t1.partition.num_leaves());
      for (std::size_t m = 0; m < t0.partition.num_leaves(); ++m) {
        CHECK(t0.partition.leaves[m].lo == t1.partition.leaves[m].lo);
        CHECK(t0.partition.leaves[m].hi == t1.partition.leaves[m].hi);
      }
    }
}

TEST_CASE("little-bags variance and CI from hand-built bag means") {
  // build a forest whose trees are single leaves with known values
  ClusteredForest forest;
  forest.config = small_config();
  forest.config.R = 2;
  forest.d = 1;
  forest.box_lo = {0.0};
  forest.box_hi = {1.0};
  auto leaf_tree = [](double value) {
    ClusteredTree t;
    t.partition.d = 1;
    t.partition.nodes.resize(1);
    t.partition.nodes[0].feature = -1;
    t.partition.nodes[0].leaf = 0;
    t.partition.leaves.resize(1);
    t.partition.leaves[0].lo = {-1e300};
    t.partition.leaves[0].hi = {1e300};
    t.leaf_values = {value};
    t.imputed = {0};
    t.split_ids = {0};
    t.eval_ids = {1};
    t.corr_ids = {2};
    return t;
  };
  forest.bags = {{leaf_tree(1.0)}, {leaf_tree(3.0)}};
  double q[1] = {0.5};
  CHECK(predict(forest, q) == doctest::Approx(2.0));
  CHECK(variance_little_bags(forest, q) == doctest::Approx(1.0));
  auto ci = confidence_interval(forest, q, 0.05);
  CHECK(ci.point == doctest::Approx(2.0));
  CHECK(ci.variance == doctest::Approx(1.0));
  CHECK(ci.hi - ci.point == doctest::Approx(1.959964).epsilon(1e-5));
  auto wide = confidence_interval(forest, q, 0.5);
  CHECK(wide.hi - wide.point == doctest::Approx(0.674490).epsilon(1e-5));

  forest.bags = {{leaf_tree(0.0)}, {leaf_tree(0.0)}, {leaf_tree(3.0)},
                 {leaf_tree(3.0)}};
  forest.config.R = 4;
  CHECK(variance_little_bags(forest, q) == doctest::Approx(2.25));
}

TEST_CASE("variance requires at least two bags and honesty") {
  auto ds = tiny_data(60, 6);
  auto cfg = small_config();
  cfg.R = 1;
  auto forest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  double q[1] = {0.0};
  CHECK_THROWS_AS(variance_little_bags(forest, q), ForestError);
  cfg.R = 2;
  cfg.honesty = false;
  auto dishonest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  CHECK_THROWS_AS(variance_little_bags(dishonest, q), ForestError);
}

TEST_CASE("predict flags extrapolation outside the training box") {
  auto ds = tiny_data(60, 7);
  auto cfg = small_config();
  auto forest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  bool flag = false;
  double inside[1] = {0.5 * (forest.box_lo[0] + forest.box_hi[0])};
  predict(forest, inside, &flag);
  CHECK_FALSE(flag);
  double outside[1] = {forest.box_hi[0] + 1.0};
  predict(forest, outside, &flag);
  CHECK(flag);
}

TEST_CASE("normal quantile values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-7));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(normal_quantile(0.025) ==
        doctest::Approx(-1.959964).epsilon(1e-7));
  CHECK(normal_quantile(0.841344746) ==
        doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("integrated mean handles point, empirical and box targets") {
  auto ds = tiny_data(60, 8);
  auto cfg = small_config();
  auto forest = fit_forest(ds, cfg, CovariateShiftSpec::training());
  RngStream rng(9, 0, 0, RngStage::kMonteCarlo);
  double q[1] = {0.3};
  const double at_point = predict(forest, q);
  auto point = CovariateShiftSpec::point_mass({0.3});
  CHECK(integrated_mean(forest, point, 0, rng) == doctest::Approx(at_point));
  auto emp = CovariateShiftSpec::empirical({{0.3}, {0.3}});
  CHECK(integrated_mean(forest, emp, 0, rng) == doctest::Approx(at_point));
  auto box = CovariateShiftSpec::uniform_box({-0.5}, {0.5});
  const double mc = integrated_mean(forest, box, 2000, rng);
  CHECK(std::isfinite(mc));
  CHECK_THROWS_AS(
      integrated_mean(forest, CovariateShiftSpec::training(), 0, rng),
      std::invalid_argument);
}

TEST_CASE("recommended ratio example and scaling") {
  // alpha = 0.5, pi = 1, d = 1 -> phi = 1; ratio = 2 C^2 I / (n_c^2 v)
  // at C = 1, I = 1000, n_c = 10, v = 1 the exponent d/(2phi+d) = 1/3
  CHECK(recommend_ratio(1000, 1, 1, 0.5, 1.0, 1.0, 1.0) ==
        doctest::Approx(20.0).epsilon(1e-9));
  const double r = recommend_ratio(1000, 10, 1, 0.5, 1.0, 1.0, 1.0);
  CHECK(r == doctest::Approx(2.0 * std::cbrt(10.0)).epsilon(1e-9));
  const double r_bigger_v = recommend_ratio(1000, 10, 1, 0.5, 1.0, 1.0, 8.0);
  CHECK(r_bigger_v < r);
  const double r_bigger_I = recommend_ratio(8000, 10, 1, 0.5, 1.0, 1.0, 1.0);
  CHECK(r_bigger_I == doctest::Approx(2.0 * r).epsilon(1e-9));
}

}  // TEST_SUITE
