#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crf/forest.hpp"

namespace crf {

enum class DgpId { kIntro2d, kShiftEquicorr, kAr2Inference, kTheorem2 };

std::string to_string(DgpId id);
DgpId dgp_from_string(const std::string& s);

// Synthetic grouped-data generators at configurable scale.
//  intro_2d:       n_i=2, d=2, additive tanh mean, equicorrelated noise.
//  shift_equicorr: n_i=4, d=1, tanh mean, heteroscedastic sigma(x) with
//                  equicorrelated cross-sectional noise.
//  ar2_inference:  n_i=5, mu = 4 sin x_1, AR(2) errors with stationary
//                  initialisation and unit Gaussian innovations.
//  theorem2:       n_i=2, d=1, X ~ Unif[0,1], zero mean, ramp sigma(x)
//                  (1 up to a2, linear to eta by b1) with equicorrelated
//                  noise; two uniform target windows pull the optimal rho
//                  in opposite directions.
struct DgpSpec {
  DgpId id = DgpId::kShiftEquicorr;
  std::size_t I = 0;
  std::size_t n_i = 0;  // 0 = preset default
  std::size_t d = 0;    // 0 = preset default
  double corr = 0.8;    // equicorrelation of the noise (intro/shift)
  double phi1 = 0.6, phi2 = 0.3;  // AR(2) coefficients
  double eta = 4.0;               // theorem2 ramp height
  double theorem2_corr = 0.5;     // theorem2 equicorrelation
  double a2 = 0.25, b1 = 0.75;    // theorem2 ramp knots
  std::uint64_t seed = 0;

  static DgpSpec preset(DgpId id, std::size_t I, std::uint64_t seed);
  void validate() const;
};

struct GeneratedData {
  ClusteredDataset ds;
  std::function<double(std::span<const double>)> truth;  // mu(x)
};

// Deterministic in (spec.seed, rep).
GeneratedData generate(const DgpSpec& spec, std::uint64_t rep = 0);

// Q-integrated squared prediction error against the truth: exact at a
// point mass, averaged over empirical rows, Monte-Carlo over a box.
double evaluate_mspe(const ClusteredForest& forest,
                     const std::function<double(std::span<const double>)>&
                         truth,
                     const CovariateShiftSpec& shift, std::size_t n_eval,
                     RngStream& rng);

struct MethodStats {
  std::string name;
  double coverage = 0.0;
  double mean_ci_width = 0.0;
  double mse_at_target = 0.0;
};

struct RepRecord {
  std::size_t rep = 0;
  std::string method;
  double point = 0.0, lo = 0.0, hi = 0.0;
  bool hit = false;
};

struct ExperimentReport {
  std::size_t reps = 0;
  double truth_at_target = 0.0;
  std::vector<MethodStats> methods;
  std::vector<RepRecord> records;
  double runtime_seconds = 0.0;
};

// reps independent dataset draws; per draw fit every method on shared
// partitions, form the CI at `target`, and aggregate coverage, width and
// squared error.
ExperimentReport coverage_experiment(const DgpSpec& spec,
                                     const ForestConfig& cfg,
                                     std::span<const double> target,
                                     std::size_t reps,
                                     std::span<const ForestMethod> methods,
                                     std::span<const std::string> names);

}  // namespace crf
