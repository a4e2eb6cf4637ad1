#include "crf/shift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crf/dataset.hpp"

namespace crf {

CovariateShiftSpec CovariateShiftSpec::training() {
  CovariateShiftSpec q;
  q.kind = Kind::kTraining;
  return q;
}

CovariateShiftSpec CovariateShiftSpec::point_mass(std::vector<double> x) {
  CovariateShiftSpec q;
  q.kind = Kind::kPointMass;
  q.point = std::move(x);
  return q;
}

CovariateShiftSpec CovariateShiftSpec::uniform_box(std::vector<double> lo,
                                                   std::vector<double> hi) {
  CovariateShiftSpec q;
  q.kind = Kind::kUniformBox;
  q.lo = std::move(lo);
  q.hi = std::move(hi);
  return q;
}

CovariateShiftSpec CovariateShiftSpec::empirical(
    std::vector<std::vector<double>> rows) {
  CovariateShiftSpec q;
  q.kind = Kind::kEmpirical;
  q.rows = std::move(rows);
  return q;
}

void CovariateShiftSpec::validate(std::size_t d) const {
  switch (kind) {
    case Kind::kTraining:
      return;
    case Kind::kPointMass:
      if (point.size() != d)
        throw ShiftError("point mass needs exactly d=" + std::to_string(d) +
                         " entries");
      return;
    case Kind::kUniformBox: {
      if (lo.size() != d || hi.size() != d)
        throw ShiftError("box bounds need exactly d=" + std::to_string(d) +
                         " entries");
      double vol = 1.0;
      for (std::size_t f = 0; f < d; ++f) {
        if (lo[f] > hi[f])
          throw ShiftError("box requires lo <= hi componentwise");
        vol *= hi[f] - lo[f];
      }
      if (vol <= 0.0) throw ShiftError("box has zero volume");
      return;
    }
    case Kind::kEmpirical:
      if (rows.empty()) throw ShiftError("empirical covariate set is empty");
      for (const auto& r : rows)
        if (r.size() != d)
          throw ShiftError("empirical rows need exactly d entries");
      return;
  }
}

namespace {

std::vector<double> parse_numbers(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(std::stod(field));
  return out;
}

}  // namespace

CovariateShiftSpec CovariateShiftSpec::parse(const std::string& text,
                                             std::size_t d) {
  if (text.empty() || text == "training") return training();
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ShiftError("cannot parse shift spec: " + text);
  const std::string kind = text.substr(0, colon);
  const std::string payload = text.substr(colon + 1);
  try {
    if (kind == "point") {
      auto q = point_mass(parse_numbers(payload));
      q.validate(d);
      return q;
    }
    if (kind == "box") {
      std::vector<double> lo, hi;
      std::stringstream ss(payload);
      std::string pair;
      while (std::getline(ss, pair, ',')) {
        const auto sep = pair.find(':');
        if (sep == std::string::npos)
          throw ShiftError("box spec needs lo:hi pairs");
        lo.push_back(std::stod(pair.substr(0, sep)));
        hi.push_back(std::stod(pair.substr(sep + 1)));
      }
      auto q = uniform_box(std::move(lo), std::move(hi));
      q.validate(d);
      return q;
    }
    if (kind == "file") {
      auto q = empirical(load_covariate_rows(payload, d));
      q.validate(d);
      return q;
    }
  } catch (const std::invalid_argument&) {
    throw ShiftError("cannot parse shift spec numbers in: " + text);
  }
  throw ShiftError("unknown shift kind: " + kind);
}

std::vector<double> leaf_mass(const CovariateShiftSpec& q,
                              const TreePartition& partition,
                              std::span<const std::size_t> training_counts) {
  const std::size_t m = partition.num_leaves();
  std::vector<double> mass(m, 0.0);

  switch (q.kind) {
    case CovariateShiftSpec::Kind::kPointMass: {
      mass[partition.leaf_index(q.point)] = 1.0;
      return mass;
    }
    case CovariateShiftSpec::Kind::kUniformBox: {
      // Leaves tile R^d, so the overlap volumes sum to the box volume.
      double box_vol = 1.0;
      for (std::size_t f = 0; f < partition.d; ++f)
        box_vol *= q.hi[f] - q.lo[f];
      for (std::size_t l = 0; l < m; ++l) {
        const Leaf& leaf = partition.leaves[l];
        double overlap = 1.0;
        for (std::size_t f = 0; f < partition.d && overlap > 0.0; ++f) {
          const double lo = std::max(leaf.lo[f], q.lo[f]);
          const double hi = std::min(leaf.hi[f], q.hi[f]);
          overlap *= std::max(hi - lo, 0.0);
        }
        mass[l] = overlap / box_vol;
      }
      break;
    }
    case CovariateShiftSpec::Kind::kEmpirical: {
      for (const auto& row : q.rows) mass[partition.leaf_index(row)] += 1.0;
      for (double& v : mass) v /= static_cast<double>(q.rows.size());
      break;
    }
    case CovariateShiftSpec::Kind::kTraining: {
      if (training_counts.size() != m)
        throw ShiftError(
            "training shift needs per-leaf correlation-sample counts");
      double total = 0.0;
      for (std::size_t c : training_counts) total += static_cast<double>(c);
      if (total == 0.0)
        throw ShiftError("training shift has no correlation-sample rows");
      for (std::size_t l = 0; l < m; ++l)
        mass[l] = static_cast<double>(training_counts[l]) / total;
      break;
    }
  }

  double total = 0.0;
  for (double v : mass) total += v;
  if (!(total > 0.0))
    throw ShiftError("shift distribution does not meet the partition");
  for (double& v : mass) v /= total;
  return mass;
}

}  // namespace crf
