#include "crf/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crf {

FlatRows FlatRows::from_clusters(const ClusteredDataset& ds,
                                 std::span<const std::size_t> cluster_ids) {
  FlatRows rows;
  rows.d = ds.d;
  std::size_t n = 0;
  for (std::size_t ci : cluster_ids) n += ds.clusters[ci].size();
  rows.x.reserve(n * ds.d);
  rows.y.reserve(n);
  for (std::size_t ci : cluster_ids) {
    const Cluster& c = ds.clusters[ci];
    rows.x.insert(rows.x.end(), c.x.begin(), c.x.end());
    rows.y.insert(rows.y.end(), c.y.begin(), c.y.end());
  }
  return rows;
}

std::size_t TreePartition::leaf_index(std::span<const double> x) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto& nd = nodes[node];
    node = (x[static_cast<std::size_t>(nd.feature)] <= nd.threshold)
               ? nd.left
               : nd.right;
  }
  return nodes[node].leaf;
}

std::optional<SplitCandidate> best_split(const FlatRows& rows,
                                         std::span<const std::size_t> idx,
                                         std::size_t feature,
                                         const ForestConfig& cfg) {
  const std::size_t n = idx.size();
  if (n < 2 * cfg.k) return std::nullopt;

  std::vector<std::size_t> order(idx.begin(), idx.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows.row(a)[feature] < rows.row(b)[feature];
  });

  double total = 0.0;
  for (std::size_t j : order) total += rows.y[j];

  const double nd = static_cast<double>(n);
  // regularity: each child keeps >= alpha_split of the full split sample
  std::size_t min_child = static_cast<std::size_t>(
      std::ceil(cfg.alpha_split * static_cast<double>(rows.size()) - 1e-9));
  min_child = std::max(min_child, cfg.k);

  std::optional<SplitCandidate> best;
  double left_sum = 0.0;
  for (std::size_t p = 1; p < n; ++p) {
    left_sum += rows.y[order[p - 1]];
    if (p < min_child || n - p < min_child) continue;
    const double xl = rows.row(order[p - 1])[feature];
    const double xr = rows.row(order[p])[feature];
    if (!(xl < xr)) continue;
    const double pl = static_cast<double>(p);
    const double right_sum = total - left_sum;
    const double gain = left_sum * left_sum / pl +
                        right_sum * right_sum / (nd - pl) -
                        total * total / nd;
    if (!best || gain > best->gain + 1e-12 * std::abs(best->gain)) {
      best = SplitCandidate{feature, 0.5 * (xl + xr), std::max(gain, 0.0)};
    }
  }
  return best;
}

namespace {

struct BuildFrame {
  std::vector<std::size_t> idx;
  std::vector<double> lo, hi;
  std::vector<std::uint32_t> path_splits;
  std::uint32_t depth = 0;
  std::uint32_t node = 0;
};

}  // namespace

TreePartition fit_partition(const FlatRows& rows, const ForestConfig& cfg,
                            RngStream& rng) {
  const std::size_t d = rows.d;
  TreePartition part;
  part.d = d;

  const double inf = std::numeric_limits<double>::infinity();

  std::vector<BuildFrame> stack;
  {
    BuildFrame root;
    root.idx = iota_indices(rows.size());
    root.lo.assign(d, -inf);
    root.hi.assign(d, inf);
    root.path_splits.assign(d, 0);
    part.nodes.emplace_back();
    root.node = 0;
    stack.push_back(std::move(root));
  }

  while (!stack.empty()) {
    BuildFrame frame = std::move(stack.back());
    stack.pop_back();
    const std::size_t n = frame.idx.size();

    std::optional<SplitCandidate> chosen;
    if (n >= 2 * cfg.k) {
      // Guided round-robin for the feature-proportion constraint: if any
      // feature's split count along this path falls short of its share of
      // the next path length, force the most deficient feature.
      const double share = cfg.pi_frac / static_cast<double>(d);
      std::size_t forced = d;
      double worst_deficit = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double required =
            std::floor((frame.depth + 1) * share + 1e-12);
        const double deficit =
            required - static_cast<double>(frame.path_splits[f]);
        if (deficit > worst_deficit) {
          worst_deficit = deficit;
          forced = f;
        }
      }
      if (forced < d) chosen = best_split(rows, frame.idx, forced, cfg);
      if (!chosen) {
        std::size_t tied = 0;
        for (std::size_t f = 0; f < d; ++f) {
          auto cand = best_split(rows, frame.idx, f, cfg);
          if (!cand) continue;
          if (!chosen || cand->gain > chosen->gain) {
            chosen = cand;
            tied = 1;
          } else if (cand->gain == chosen->gain) {
            // Uniform pick among exactly tied features.
            ++tied;
            if (rng.below(tied) == 0) chosen = cand;
          }
        }
      }
    }

    if (!chosen) {
      Leaf leaf;
      leaf.lo = frame.lo;
      leaf.hi = frame.hi;
      leaf.count = n;
      leaf.saturated = n < cfg.k || n > 2 * cfg.k - 1;
      leaf.depth = frame.depth;
      leaf.path_feature_splits = frame.path_splits;
      part.nodes[frame.node].feature = -1;
      part.nodes[frame.node].leaf =
          static_cast<std::uint32_t>(part.leaves.size());
      part.leaves.push_back(std::move(leaf));
      continue;
    }

    const std::size_t f = chosen->feature;
    const double thr = chosen->threshold;

    BuildFrame left, right;
    for (std::size_t j : frame.idx)
      (rows.row(j)[f] <= thr ? left.idx : right.idx).push_back(j);
    left.lo = frame.lo;
    left.hi = frame.hi;
    left.hi[f] = thr;
    right.lo = std::move(frame.lo);
    right.hi = std::move(frame.hi);
    right.lo[f] = thr;
    left.path_splits = frame.path_splits;
    left.path_splits[f] += 1;
    right.path_splits = std::move(frame.path_splits);
    right.path_splits[f] += 1;
    left.depth = right.depth = frame.depth + 1;

    part.nodes[frame.node].feature = static_cast<std::int32_t>(f);
    part.nodes[frame.node].threshold = thr;
    left.node = static_cast<std::uint32_t>(part.nodes.size());
    part.nodes.emplace_back();
    right.node = static_cast<std::uint32_t>(part.nodes.size());
    part.nodes.emplace_back();
    part.nodes[frame.node].left = left.node;
    part.nodes[frame.node].right = right.node;

    // LIFO order: push right first so the left child is processed first and
    // leaf numbering follows left-to-right tree order.
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }

  return part;
}

}  // namespace crf
