#include <cstdio>
#include <fstream>

#include "crf/dataset.hpp"
#include "doctest.h"

using namespace crf;

namespace {
std::string write_tmp(const std::string& name, const std::string& body) {
  std::string path = std::string("/tmp/crf_test_") + name;
  std::ofstream out(path);
  out << body;
  return path;
}
}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("grouping by first appearance") {
  auto path = write_tmp("ds1.csv",
                        "cluster_id,y,x1\n"
                        "a,1,0.1\n"
                        "a,2,0.2\n"
                        "b,3,0.3\n"
                        "b,4,0.4\n");
  auto ds = load_dataset(path);
  CHECK(ds.num_clusters() == 2);
  CHECK(ds.num_observations() == 4);
  CHECK(ds.d == 1);
  CHECK(ds.clusters[0].size() == 2);
  CHECK(ds.clusters[1].size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("interleaved ids keep file order within cluster") {
  auto path = write_tmp("ds2.csv",
                        "cluster_id,y,x1\n"
                        "a,1,0\n"
                        "b,2,0\n"
                        "a,3,0\n");
  auto ds = load_dataset(path);
  CHECK(ds.num_clusters() == 2);
  CHECK(ds.clusters[0].id == "a");
  CHECK(ds.clusters[0].y == std::vector<double>{1.0, 3.0});
  CHECK(ds.clusters[1].y == std::vector<double>{2.0});
  std::remove(path.c_str());
}

TEST_CASE("NaN cell names the row") {
  auto path = write_tmp("ds3.csv",
                        "cluster_id,y,x1\n"
                        "a,1,0\n"
                        "a,NaN,0\n");
  CHECK_THROWS_WITH_AS(load_dataset(path),
                       doctest::Contains("row 3"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("schema and empty-file errors") {
  auto bad = write_tmp("ds4.csv",
                       "cluster_id,y,x1\n"
                       "a,1,0,9\n");
  CHECK_THROWS_AS(load_dataset(bad), ParseError);
  auto empty = write_tmp("ds5.csv", "");
  CHECK_THROWS_AS(load_dataset(empty), ParseError);
  std::remove(bad.c_str());
  std::remove(empty.c_str());
}

TEST_CASE("save then load round-trips") {
  auto path = write_tmp("ds6.csv",
                        "cluster_id,y,x1,x2\n"
                        "g1,1.25,0.5,-0.125\n"
                        "g1,2.5,0.75,3\n"
                        "g2,-1,0,0\n");
  auto ds = load_dataset(path);
  auto out = write_tmp("ds6b.csv", "");
  save_dataset(ds, out);
  auto ds2 = load_dataset(out);
  REQUIRE(ds2.num_clusters() == ds.num_clusters());
  for (std::size_t i = 0; i < ds.clusters.size(); ++i) {
    CHECK(ds2.clusters[i].id == ds.clusters[i].id);
    CHECK(ds2.clusters[i].y == ds.clusters[i].y);
    CHECK(ds2.clusters[i].x == ds.clusters[i].x);
  }
  std::remove(path.c_str());
  std::remove(out.c_str());
}

TEST_CASE("covariate rows with or without header") {
  auto headered = write_tmp("q1.csv", "x1,x2\n1,2\n3,4\n");
  auto plain = write_tmp("q2.csv", "1,2\n3,4\n");
  auto a = load_covariate_rows(headered, 2);
  auto b = load_covariate_rows(plain, 2);
  REQUIRE(a.size() == 2);
  CHECK(a == b);
  CHECK(a[1] == std::vector<double>{3.0, 4.0});
  std::remove(headered.c_str());
  std::remove(plain.c_str());
}

}  // TEST_SUITE
