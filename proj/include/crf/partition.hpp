#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crf/config.hpp"
#include "crf/dataset.hpp"
#include "crf/rng.hpp"

namespace crf {

// Flattened observation rows (split subsample of clusters).
struct FlatRows {
  std::vector<double> x;  // n x d row-major
  std::vector<double> y;
  std::size_t d = 0;

  std::size_t size() const { return y.size(); }
  const double* row(std::size_t j) const { return x.data() + j * d; }

  static FlatRows from_clusters(const ClusteredDataset& ds,
                                std::span<const std::size_t> cluster_ids);
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;  // CART sum-of-squares decrease
};

struct PartitionNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t leaf = 0;  // valid when feature == -1
};

// Axis-aligned leaf box. Outer faces extend to +-infinity so the leaves
// tile all of R^d and routing never falls off the partition.
struct Leaf {
  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t count = 0;  // split-sample observations
  bool saturated = false;
  std::uint32_t depth = 0;
  std::vector<std::uint32_t> path_feature_splits;  // per-feature, root path
};

struct TreePartition {
  std::vector<PartitionNode> nodes;
  std::vector<Leaf> leaves;
  std::size_t d = 0;

  std::size_t num_leaves() const { return leaves.size(); }
  std::size_t leaf_index(std::span<const double> x) const;
};

// Best admissible CART cut on one feature: both child fractions >=
// alpha_split and both child counts >= k. Thresholds are midpoints of
// consecutive distinct sorted values; gain ties resolve to the smaller
// threshold.
std::optional<SplitCandidate> best_split(const FlatRows& rows,
                                         std::span<const std::size_t> idx,
                                         std::size_t feature,
                                         const ForestConfig& cfg);

TreePartition fit_partition(const FlatRows& rows, const ForestConfig& cfg,
                            RngStream& rng);

}  // namespace crf
