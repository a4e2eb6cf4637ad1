#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace crf {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One cluster of correlated observations. Row order is preserved from the
// input; it carries meaning for serial (AR-type) structures.
struct Cluster {
  std::string id;
  std::vector<double> y;  // length n
  std::vector<double> x;  // n x d, row-major

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t j, std::size_t d) const {
    return x.data() + j * d;
  }
};

struct ClusteredDataset {
  std::vector<Cluster> clusters;
  std::size_t d = 0;

  std::size_t num_clusters() const { return clusters.size(); }
  std::size_t num_observations() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.size();
    return n;
  }

  // Componentwise bounding box over all covariates; pair of (lo, hi).
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const;

  void validate() const;
};

// CSV schema: header `cluster_id,y,x1,...,xd`. Rows are grouped by first
// appearance of cluster_id; within-cluster order follows the file.
// expected_d == 0 means infer from the header.
ClusteredDataset load_dataset(const std::string& path,
                              std::size_t expected_d = 0);

void save_dataset(const ClusteredDataset& ds, const std::string& path);

// Headered or headerless CSV of covariate rows with d columns.
std::vector<std::vector<double>> load_covariate_rows(const std::string& path,
                                                     std::size_t d);

}  // namespace crf
