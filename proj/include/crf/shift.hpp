#pragma once

#include <span>
#include <string>
#include <vector>

#include "crf/partition.hpp"

namespace crf {

struct ShiftError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Target covariate distribution Q for covariate-shift-optimised weighting.
struct CovariateShiftSpec {
  enum class Kind { kPointMass, kUniformBox, kEmpirical, kTraining };
  Kind kind = Kind::kTraining;
  std::vector<double> point;             // point mass x*
  std::vector<double> lo, hi;            // uniform box
  std::vector<std::vector<double>> rows; // empirical covariate set

  static CovariateShiftSpec training();
  static CovariateShiftSpec point_mass(std::vector<double> x);
  static CovariateShiftSpec uniform_box(std::vector<double> lo,
                                        std::vector<double> hi);
  static CovariateShiftSpec empirical(std::vector<std::vector<double>> rows);

  // CLI syntax: "training", "point:x1,..,xd", "box:lo1:hi1,...", "file:path".
  static CovariateShiftSpec parse(const std::string& text, std::size_t d);

  void validate(std::size_t d) const;
};

// Leaf masses (Q(L_m))_m. Nonnegative, sums to 1. The kTraining kind takes
// its masses from `training_counts` (corr-sample observations per leaf).
std::vector<double> leaf_mass(const CovariateShiftSpec& q,
                              const TreePartition& partition,
                              std::span<const std::size_t> training_counts = {});

}  // namespace crf
