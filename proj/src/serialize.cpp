#include "crf/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace crf {
namespace {

using nlohmann::json;

// Leaf boxes extend to +-infinity on outer faces; JSON has no infinity, so
// non-finite bounds are written as the strings "inf" / "-inf".
json box_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) {
    if (std::isinf(x))
      out.push_back(x > 0 ? "inf" : "-inf");
    else
      out.push_back(x);
  }
  return out;
}

std::vector<double> box_from(const json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (e.is_string())
      out.push_back(e.get<std::string>() == "inf"
                        ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity());
    else
      out.push_back(e.get<double>());
  }
  return out;
}

json partition_json(const TreePartition& p) {
  json nodes = json::array();
  for (const auto& n : p.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"leaf", n.leaf}});
  json leaves = json::array();
  for (const auto& l : p.leaves)
    leaves.push_back({{"lo", box_json(l.lo)},
                      {"hi", box_json(l.hi)},
                      {"count", l.count},
                      {"saturated", l.saturated},
                      {"depth", l.depth},
                      {"path_feature_splits", l.path_feature_splits}});
  return {{"d", p.d}, {"nodes", nodes}, {"leaves", leaves}};
}

TreePartition partition_from(const json& j) {
  TreePartition p;
  p.d = j.at("d").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    PartitionNode node;
    node.feature = n.at("feature").get<std::int32_t>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<std::uint32_t>();
    node.right = n.at("right").get<std::uint32_t>();
    node.leaf = n.at("leaf").get<std::uint32_t>();
    p.nodes.push_back(node);
  }
  for (const auto& l : j.at("leaves")) {
    Leaf leaf;
    leaf.lo = box_from(l.at("lo"));
    leaf.hi = box_from(l.at("hi"));
    leaf.count = l.at("count").get<std::size_t>();
    leaf.saturated = l.at("saturated").get<bool>();
    leaf.depth = l.at("depth").get<std::uint32_t>();
    leaf.path_feature_splits =
        l.at("path_feature_splits").get<std::vector<std::uint32_t>>();
    p.leaves.push_back(std::move(leaf));
  }
  return p;
}

json tree_json(const ClusteredTree& t) {
  return {{"partition", partition_json(t.partition)},
          {"rho_hat", t.rho_hat},
          {"leaf_values", t.leaf_values},
          {"imputed", t.imputed},
          {"split_ids", t.split_ids},
          {"eval_ids", t.eval_ids},
          {"corr_ids", t.corr_ids},
          {"degenerate", t.degenerate}};
}

ClusteredTree tree_from(const json& j) {
  ClusteredTree t;
  t.partition = partition_from(j.at("partition"));
  t.rho_hat = j.at("rho_hat").get<double>();
  t.leaf_values = j.at("leaf_values").get<std::vector<double>>();
  t.imputed = j.at("imputed").get<std::vector<std::uint8_t>>();
  t.split_ids = j.at("split_ids").get<std::vector<std::size_t>>();
  t.eval_ids = j.at("eval_ids").get<std::vector<std::size_t>>();
  t.corr_ids = j.at("corr_ids").get<std::vector<std::size_t>>();
  t.degenerate = j.at("degenerate").get<bool>();
  return t;
}

}  // namespace

std::string model_to_json(const ClusteredForest& forest) {
  json j;
  j["format"] = "crf-model-v1";
  j["config"] = json::parse(config_to_json(forest.config));
  j["d"] = forest.d;
  j["box_lo"] = forest.box_lo;
  j["box_hi"] = forest.box_hi;
  json bags = json::array();
  for (const auto& bag : forest.bags) {
    json trees = json::array();
    for (const auto& t : bag) trees.push_back(tree_json(t));
    bags.push_back(std::move(trees));
  }
  j["bags"] = std::move(bags);
  return j.dump(2);
}

ClusteredForest model_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "crf-model-v1")
    throw std::runtime_error("unrecognised model format");
  ClusteredForest forest;
  forest.config = config_from_json(j.at("config").dump());
  forest.d = j.at("d").get<std::size_t>();
  forest.box_lo = j.at("box_lo").get<std::vector<double>>();
  forest.box_hi = j.at("box_hi").get<std::vector<double>>();
  for (const auto& bag : j.at("bags")) {
    forest.bags.emplace_back();
    for (const auto& t : bag) forest.bags.back().push_back(tree_from(t));
  }
  return forest;
}

void save_model(const ClusteredForest& forest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(forest) << '\n';
}

ClusteredForest load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::string partition_to_json(const TreePartition& partition) {
  return partition_json(partition).dump(2);
}

}  // namespace crf
