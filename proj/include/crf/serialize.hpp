#pragma once

#include <string>

#include "crf/forest.hpp"

namespace crf {

// Model JSON: config snapshot, bounding box, and every tree's partition,
// rho_hat and leaf values. Doubles are written with 17 significant digits
// so a reload reproduces predictions bit for bit.
std::string model_to_json(const ClusteredForest& forest);
ClusteredForest model_from_json(const std::string& text);

void save_model(const ClusteredForest& forest, const std::string& path);
ClusteredForest load_model(const std::string& path);

// Partition-only JSON for `train --dump-trees`.
std::string partition_to_json(const TreePartition& partition);

}  // namespace crf
