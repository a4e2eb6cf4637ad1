#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crf/serialize.hpp"
#include "crf/simulation.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string weight_class, rho_strategy;
  double rho_fixed = 0.0;
  std::size_t k = 0, B = 0, R = 0, s_corr = 0;
  double beta = 0.0, alpha_ci = 0.0;

  CLI::Option *o_weight = nullptr, *o_strategy = nullptr,
              *o_rho = nullptr, *o_k = nullptr, *o_B = nullptr,
              *o_R = nullptr, *o_beta = nullptr, *o_s_corr = nullptr,
              *o_alpha = nullptr, *o_threads = nullptr;

  void attach(CLI::App* cmd, bool need_seed) {
    cmd->add_option("--config", config_path, "JSON config file");
    auto* seed_opt = cmd->add_option("--seed", seed, "RNG seed");
    if (need_seed) seed_opt->required();
    o_threads = cmd->add_option("--threads", threads, "worker thread cap");
    o_weight = cmd->add_option("--weight-class", weight_class,
                               "identity|equicorrelated|ar1");
    o_strategy = cmd->add_option("--rho-strategy", rho_strategy,
                                 "fixed|q_shift|train|moment");
    o_rho = cmd->add_option("--rho-fixed", rho_fixed,
                            "correlation for the fixed strategy");
    o_k = cmd->add_option("--k", k, "minimum node size");
    o_B = cmd->add_option("--B", B, "trees per bag");
    o_R = cmd->add_option("--R", R, "little bags");
    o_beta = cmd->add_option("--beta", beta,
                             "subsampling exponent; s_I = floor(I^beta/3)");
    o_s_corr = cmd->add_option("--s-corr", s_corr,
                               "correlation subsample size");
    o_alpha = cmd->add_option("--alpha-ci", alpha_ci, "CI level");
  }

  crf::ForestConfig build() const {
    crf::ForestConfig cfg;
    if (!config_path.empty()) cfg = crf::load_config(config_path);
    cfg.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    if (o_weight->count())
      cfg.weight_class = crf::weight_class_from_string(weight_class);
    if (o_strategy->count())
      cfg.rho_strategy = crf::rho_strategy_from_string(rho_strategy);
    if (o_rho->count()) {
      if (cfg.rho_strategy != crf::RhoStrategy::kFixed)
        throw CLI::ValidationError(
            "--rho-fixed only applies to --rho-strategy fixed");
      cfg.rho_fixed = rho_fixed;
    }
    if (o_k->count()) cfg.k = k;
    if (o_B->count()) cfg.B = B;
    if (o_R->count()) cfg.R = R;
    if (o_beta->count()) {
      cfg.beta = beta;
      cfg.s_I = 0;
    }
    if (o_s_corr->count()) cfg.s_corr = s_corr;
    if (o_alpha->count()) cfg.alpha_ci = alpha_ci;
    return cfg;
  }
};

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw CLI::ValidationError("empty coordinate list");
  return out;
}

void write_predictions(const std::string& path,
                       const crf::ClusteredForest& forest,
                       const std::vector<std::vector<double>>& rows,
                       bool with_ci, double alpha_ci) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out.precision(17);
  for (std::size_t j = 0; j < forest.d; ++j) out << "x" << (j + 1) << ",";
  out << (with_ci ? "mu_hat,v_hat,lo,hi" : "mu_hat") << "\n";
  for (const auto& row : rows) {
    for (double v : row) out << v << ",";
    if (with_ci) {
      const auto est = crf::confidence_interval(forest, row, alpha_ci);
      out << est.point << "," << est.variance << "," << est.lo << ","
          << est.hi << "\n";
    } else {
      out << crf::predict(forest, row) << "\n";
    }
  }
}

int run_train(const CommonOpts& common, const std::string& data_path,
              const std::string& out_path, const std::string& shift_text,
              bool dump_trees) {
  crf::ForestConfig cfg = common.build();
  crf::ClusteredDataset ds = crf::load_dataset(data_path);
  crf::CovariateShiftSpec shift =
      crf::CovariateShiftSpec::parse(shift_text, ds.d);
  crf::ClusteredForest forest = crf::fit_forest(ds, cfg, shift);
  crf::save_model(forest, out_path);
  if (dump_trees) {
    json trees = json::array();
    for (const auto& bag : forest.bags)
      for (const auto& t : bag)
        trees.push_back(json::parse(crf::partition_to_json(t.partition)));
    std::ofstream out(out_path + ".trees.json");
    out << trees.dump(2) << '\n';
  }
  return 0;
}

int run_simulate(const CommonOpts& common, const std::string& dgp_text,
                 std::size_t reps, const std::string& target_text,
                 const std::string& out_path) {
  // --dgp name[:I] picks the process and training scale
  std::string name = dgp_text;
  std::size_t I = 500;
  if (auto pos = dgp_text.find(':'); pos != std::string::npos) {
    name = dgp_text.substr(0, pos);
    I = std::stoul(dgp_text.substr(pos + 1));
  }
  crf::DgpSpec spec =
      crf::DgpSpec::preset(crf::dgp_from_string(name), I, common.seed);
  crf::ForestConfig cfg = common.build();
  std::vector<double> target(spec.d, 1.0);
  if (!target_text.empty()) target = parse_point(target_text);
  if (target.size() != spec.d)
    throw CLI::ValidationError("--target dimension mismatch");

  std::vector<crf::ForestMethod> methods(2);
  methods[0].strategy = crf::RhoStrategy::kFixed;
  methods[0].rho_fixed = 0.0;
  methods[1].strategy = cfg.rho_strategy == crf::RhoStrategy::kFixed
                            ? crf::RhoStrategy::kQShift
                            : cfg.rho_strategy;
  methods[1].shift = crf::CovariateShiftSpec::point_mass(target);
  const std::string names_arr[2] = {"rf", "crf"};

  crf::ExperimentReport report = crf::coverage_experiment(
      spec, cfg, target, reps, methods, std::span(names_arr, 2));

  json j;
  j["dgp"] = name;
  j["I"] = I;
  j["reps"] = report.reps;
  j["truth_at_target"] = report.truth_at_target;
  j["runtime_seconds"] = report.runtime_seconds;
  j["methods"] = json::array();
  for (const auto& m : report.methods)
    j["methods"].push_back({{"name", m.name},
                            {"coverage", m.coverage},
                            {"mean_ci_width", m.mean_ci_width},
                            {"mse_at_target", m.mse_at_target}});
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  out << j.dump(2) << '\n';
  std::ofstream csv(out_path + ".reps.csv");
  csv.precision(17);
  csv << "rep,method,point,lo,hi,hit\n";
  for (const auto& r : report.records)
    csv << r.rep << "," << r.method << "," << r.point << "," << r.lo << ","
        << r.hi << "," << (r.hit ? 1 : 0) << "\n";
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int run_bench(const CommonOpts& common, const std::string& out_path) {
  crf::ForestConfig cfg = common.build();
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  out << "n_observations,tree_seconds\n";
  for (std::size_t N : {std::size_t{10000}, std::size_t{20000},
                        std::size_t{40000}}) {
    crf::DgpSpec spec = crf::DgpSpec::preset(crf::DgpId::kShiftEquicorr,
                                             N / 4, common.seed);
    crf::GeneratedData data = crf::generate(spec);
    crf::ForestConfig bench_cfg = cfg;
    bench_cfg.B = 1;
    bench_cfg.R = 1;
    const auto t0 = std::chrono::steady_clock::now();
    crf::fit_forest(data.ds, bench_cfg,
                    crf::CovariateShiftSpec::training());
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    out << N << "," << secs << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered random forest engine"};
  app.require_subcommand(1);

  std::string data_path, out_path, model_path, query_path;
  std::string shift_text = "training", dgp_text, target_text;
  std::size_t reps = 100;
  bool dump_trees = false;
  double ci_alpha = 0.05;

  auto* train = app.add_subcommand("train", "fit a forest on a CSV dataset");
  CommonOpts train_opts;
  train->add_option("--data", data_path, "training CSV")->required();
  train->add_option("--out", out_path, "model JSON output")->required();
  train->add_option("--shift", shift_text,
                    "target Q: training|point:..|box:..|file:..");
  train->add_flag("--dump-trees", dump_trees, "also write partitions JSON");
  train_opts.attach(train, true);

  auto* predict = app.add_subcommand("predict", "predict at query rows");
  CommonOpts predict_opts;
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--query", query_path, "query covariate CSV")
      ->required();
  predict->add_option("--out", out_path, "predictions CSV")->required();
  predict_opts.attach(predict, false);

  auto* ci = app.add_subcommand("ci", "predictions with variance and CIs");
  CommonOpts ci_opts;
  ci->add_option("--model", model_path, "model JSON")->required();
  ci->add_option("--query", query_path, "query covariate CSV")->required();
  ci->add_option("--out", out_path, "output CSV")->required();
  ci_opts.attach(ci, false);

  auto* simulate = app.add_subcommand("simulate", "run a synthetic study");
  CommonOpts sim_opts;
  simulate->add_option("--dgp", dgp_text, "process name, optionally name:I")
      ->required();
  simulate->add_option("--reps", reps, "replications");
  simulate->add_option("--target", target_text, "target point x1,..,xd");
  simulate->add_option("--out", out_path, "report JSON output")->required();
  sim_opts.attach(simulate, true);

  auto* bench = app.add_subcommand("bench", "timing ladder for tree fits");
  CommonOpts bench_opts;
  bench->add_option("--out", out_path, "timing CSV output")->required();
  bench_opts.attach(bench, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (train->parsed())
      return run_train(train_opts, data_path, out_path, shift_text,
                       dump_trees);
    if (predict->parsed() || ci->parsed()) {
      if (ci->parsed() && ci_opts.o_alpha->count())
        ci_alpha = ci_opts.alpha_ci;
      crf::ClusteredForest forest = crf::load_model(model_path);
      auto rows = crf::load_covariate_rows(query_path, forest.d);
      write_predictions(out_path, forest, rows, ci->parsed(), ci_alpha);
      return 0;
    }
    if (simulate->parsed())
      return run_simulate(sim_opts, dgp_text, reps, target_text, out_path);
    if (bench->parsed()) return run_bench(bench_opts, out_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
