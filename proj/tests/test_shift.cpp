#include <limits>

#include "crf/shift.hpp"
#include "doctest.h"

using namespace crf;

namespace {

// One split at x <= 1.5: leaf 0 left, leaf 1 right.
TreePartition two_leaf_partition() {
  const double inf = std::numeric_limits<double>::infinity();
  TreePartition p;
  p.d = 1;
  p.nodes.resize(3);
  p.nodes[0].feature = 0;
  p.nodes[0].threshold = 1.5;
  p.nodes[0].left = 1;
  p.nodes[0].right = 2;
  p.nodes[1].feature = -1;
  p.nodes[1].leaf = 0;
  p.nodes[2].feature = -1;
  p.nodes[2].leaf = 1;
  p.leaves.resize(2);
  p.leaves[0].lo = {-inf};
  p.leaves[0].hi = {1.5};
  p.leaves[1].lo = {1.5};
  p.leaves[1].hi = {inf};
  return p;
}

}  // namespace

TEST_SUITE("shift") {

TEST_CASE("point mass indicator") {
  auto p = two_leaf_partition();
  auto m = leaf_mass(CovariateShiftSpec::point_mass({1.0}), p);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(0.0));
  auto m2 = leaf_mass(CovariateShiftSpec::point_mass({2.0}), p);
  CHECK(m2[1] == doctest::Approx(1.0));
}

TEST_CASE("uniform box overlap") {
  auto p = two_leaf_partition();
  auto m = leaf_mass(CovariateShiftSpec::uniform_box({1.0}, {2.0}), p);
  CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-12));
  auto right = leaf_mass(CovariateShiftSpec::uniform_box({2.0}, {3.0}), p);
  CHECK(right[0] == doctest::Approx(0.0));
  CHECK(right[1] == doctest::Approx(1.0));
}

TEST_CASE("empirical fractions") {
  auto p = two_leaf_partition();
  auto m = leaf_mass(
      CovariateShiftSpec::empirical({{0.1}, {0.2}, {2.0}}), p);
  CHECK(m[0] == doctest::Approx(2.0 / 3.0));
  CHECK(m[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("training masses from counts") {
  auto p = two_leaf_partition();
  std::vector<std::size_t> counts{3, 1};
  auto m = leaf_mass(CovariateShiftSpec::training(), p, counts);
  CHECK(m[0] == doctest::Approx(0.75));
  CHECK(m[1] == doctest::Approx(0.25));
}

TEST_CASE("masses sum to one") {
  auto p = two_leaf_partition();
  for (auto spec :
       {CovariateShiftSpec::point_mass({-3.0}),
        CovariateShiftSpec::uniform_box({-2.0}, {5.0}),
        CovariateShiftSpec::empirical({{0.0}, {9.0}})}) {
    auto m = leaf_mass(spec, p);
    double total = 0.0;
    for (double v : m) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("parse syntax") {
  auto pt = CovariateShiftSpec::parse("point:1.5,2", 2);
  CHECK(pt.kind == CovariateShiftSpec::Kind::kPointMass);
  CHECK(pt.point == std::vector<double>{1.5, 2.0});
  auto box = CovariateShiftSpec::parse("box:0:1,2:4", 2);
  CHECK(box.kind == CovariateShiftSpec::Kind::kUniformBox);
  CHECK(box.lo == std::vector<double>{0.0, 2.0});
  CHECK(box.hi == std::vector<double>{1.0, 4.0});
  auto tr = CovariateShiftSpec::parse("training", 3);
  CHECK(tr.kind == CovariateShiftSpec::Kind::kTraining);
  CHECK_THROWS_AS(CovariateShiftSpec::parse("point:1", 2), ShiftError);
  CHECK_THROWS_AS(CovariateShiftSpec::parse("box:5:4", 1), ShiftError);
  CHECK_THROWS_AS(CovariateShiftSpec::parse("wat:1", 1), ShiftError);
}

TEST_CASE("validate dimensions") {
  CHECK_THROWS_AS(CovariateShiftSpec::point_mass({1.0}).validate(2),
                  ShiftError);
  CHECK_NOTHROW(CovariateShiftSpec::point_mass({1.0, 2.0}).validate(2));
  CHECK_THROWS_AS(CovariateShiftSpec::empirical({}).validate(1), ShiftError);
}

}  // TEST_SUITE
