#include "crf/dataset.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace crf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no,
                    const std::string& what) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
    throw ParseError("row " + std::to_string(line_no) + ": " + what +
                     " is not a finite number: '" + s + "'");
  return value;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>>
ClusteredDataset::bounding_box() const {
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& c : clusters)
    for (std::size_t j = 0; j < c.size(); ++j)
      for (std::size_t f = 0; f < d; ++f) {
        const double v = c.row(j, d)[f];
        lo[f] = std::min(lo[f], v);
        hi[f] = std::max(hi[f], v);
      }
  return {lo, hi};
}

void ClusteredDataset::validate() const {
  if (clusters.empty()) throw ParseError("dataset has no clusters");
  for (const auto& c : clusters) {
    if (c.size() == 0)
      throw ParseError("cluster '" + c.id + "' has no observations");
    if (c.x.size() != c.size() * d)
      throw ParseError("cluster '" + c.id + "': covariate row count " +
                       "does not match response count");
    for (double v : c.y)
      if (!std::isfinite(v))
        throw ParseError("cluster '" + c.id + "': non-finite response");
    for (double v : c.x)
      if (!std::isfinite(v))
        throw ParseError("cluster '" + c.id + "': non-finite covariate");
  }
}

ClusteredDataset load_dataset(const std::string& path,
                              std::size_t expected_d) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 3 || strip(header[0]) != "cluster_id" ||
      strip(header[1]) != "y")
    throw ParseError("schema error: expected header cluster_id,y,x1,...,xd");
  const std::size_t d = header.size() - 2;
  if (expected_d != 0 && d != expected_d)
    throw ParseError("schema error: expected " + std::to_string(expected_d) +
                     " covariate columns, file has " + std::to_string(d));

  ClusteredDataset ds;
  ds.d = d;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(line_no) +
                       ": schema error: expected " +
                       std::to_string(header.size()) + " columns, got " +
                       std::to_string(fields.size()));
    const std::string id = strip(fields[0]);
    if (id.empty())
      throw ParseError("row " + std::to_string(line_no) +
                       ": missing cluster_id");
    auto [it, inserted] = index.emplace(id, ds.clusters.size());
    if (inserted) {
      ds.clusters.emplace_back();
      ds.clusters.back().id = id;
    }
    Cluster& c = ds.clusters[it->second];
    c.y.push_back(parse_number(fields[1], line_no, "y"));
    for (std::size_t f = 0; f < d; ++f)
      c.x.push_back(parse_number(fields[2 + f], line_no,
                                 "x" + std::to_string(f + 1)));
  }
  if (ds.clusters.empty())
    throw ParseError("empty dataset file (header only): " + path);
  ds.validate();
  return ds;
}

void save_dataset(const ClusteredDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write dataset file: " + path);
  out << "cluster_id,y";
  for (std::size_t f = 1; f <= ds.d; ++f) out << ",x" << f;
  out << "\n";
  out.precision(17);
  for (const auto& c : ds.clusters)
    for (std::size_t j = 0; j < c.size(); ++j) {
      out << c.id << "," << c.y[j];
      for (std::size_t f = 0; f < ds.d; ++f) out << "," << c.row(j, ds.d)[f];
      out << "\n";
    }
}

std::vector<std::vector<double>> load_covariate_rows(const std::string& path,
                                                     std::size_t d) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open covariate file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      // Allow a header row of non-numeric labels.
      double probe;
      const std::string f0 = strip(fields[0]);
      auto [ptr, ec] =
          std::from_chars(f0.data(), f0.data() + f0.size(), probe);
      if (ec != std::errc{} || ptr != f0.data() + f0.size()) continue;
    }
    if (fields.size() != d)
      throw ParseError("row " + std::to_string(line_no) +
                       ": schema error: expected " + std::to_string(d) +
                       " covariate columns, got " +
                       std::to_string(fields.size()));
    std::vector<double> row(d);
    for (std::size_t f = 0; f < d; ++f)
      row[f] = parse_number(fields[f], line_no, "x" + std::to_string(f + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty covariate file: " + path);
  return rows;
}

}  // namespace crf
