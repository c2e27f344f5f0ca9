/*
 * Copyright 2026 The PBM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbm/data.hpp"
#include "pbm/partition.hpp"
#include "pbm/predict.hpp"
#include "pbm/train.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIters = 2;
constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitIo = 74;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flag values shared by train and bench, as typed on the command line.
struct TrainFlags {
  std::string data;
  std::string test;
  std::string loss = "hinge";
  double C = 1.0;
  double gamma = 1.0;
  std::string kernel = "gaussian";
  std::size_t workers = 4;
  std::string partition = "kmeans";
  std::size_t subsample = 20000;
  std::size_t kmeans_iters = 20;
  double sigma = 0.01;
  std::string line_search;
  std::string inner_strategy = "greedy";
  std::string inner_budget = "5epochs";
  double inner_tol = -1.0;
  double tol = 1e-3;
  std::size_t max_iters = 1000;
  std::size_t cache_mb = 1024;
  std::uint64_t seed = 1;
  std::size_t verify_every = 0;
  double max_imbalance = 4.0;
  std::string clock = "wall";
};

void add_train_flags(CLI::App& cmd, TrainFlags& f) {
  cmd.add_option("--data", f.data, "Training data (LIBSVM text, optionally .gz)");
  cmd.add_option("--test", f.test, "Test data for an accuracy report");
  cmd.add_option("--loss", f.loss, "hinge | logistic")->check(CLI::IsMember({"hinge", "logistic"}));
  cmd.add_option("--C", f.C, "Regularization constant")->check(CLI::PositiveNumber);
  cmd.add_option("--gamma", f.gamma, "Gaussian kernel width")->check(CLI::PositiveNumber);
  cmd.add_option("--kernel", f.kernel, "gaussian | linear")->check(CLI::IsMember({"gaussian", "linear"}));
  cmd.add_option("--workers", f.workers, "Number of blocks / logical workers")->check(CLI::PositiveNumber);
  cmd.add_option("--partition", f.partition, "random | kmeans")->check(CLI::IsMember({"random", "kmeans"}));
  cmd.add_option("--subsample", f.subsample, "kmeans subsample size")->check(CLI::PositiveNumber);
  cmd.add_option("--kmeans-iters", f.kmeans_iters, "Lloyd iterations")->check(CLI::PositiveNumber);
  cmd.add_option("--sigma", f.sigma, "Armijo constant in (0,1)");
  cmd.add_option("--line-search", f.line_search, "armijo | optimal (default: optimal for hinge)")
      ->check(CLI::IsMember({"armijo", "optimal"}));
  cmd.add_option("--inner-strategy", f.inner_strategy, "greedy | random | cyclic")
      ->check(CLI::IsMember({"greedy", "random", "cyclic"}));
  cmd.add_option("--inner-budget", f.inner_budget, "N updates, Nepochs, or unlimited");
  cmd.add_option("--inner-tol", f.inner_tol, "Inner stopping tolerance (default 0.1 * tol)");
  cmd.add_option("--tol", f.tol, "Outer tolerance on ||T(alpha) - alpha||_inf")->check(CLI::PositiveNumber);
  cmd.add_option("--max-iters", f.max_iters, "Outer iteration cap");
  cmd.add_option("--cache-mb", f.cache_mb, "Kernel cache size in MiB");
  cmd.add_option("--seed", f.seed, "Seed for partitioning and randomized inner solves");
  cmd.add_option("--verify-every", f.verify_every, "Recompute Q alpha every N iterations (0 = off)");
  cmd.add_option("--max-imbalance", f.max_imbalance, "Warn when a block exceeds this many times n/k");
  cmd.add_option("--clock", f.clock, "wall | none (none writes time_s = 0)")
      ->check(CLI::IsMember({"wall", "none"}));
}

pbm::TrainConfig make_config(const TrainFlags& f) {
  pbm::TrainConfig c;
  c.loss = {pbm::loss_kind_from_string(f.loss), f.C};
  c.kernel = {pbm::kernel_kind_from_string(f.kernel), f.kernel == "gaussian" ? f.gamma : 0.0};
  c.workers = f.workers;
  c.partition_mode = pbm::partition_mode_from_string(f.partition);
  c.kmeans = {f.subsample, f.kmeans_iters, f.seed};
  c.sigma = f.sigma;
  if (!f.line_search.empty()) c.line_search = pbm::line_search_from_string(f.line_search);
  c.inner_strategy = pbm::inner_strategy_from_string(f.inner_strategy);
  c.outer_tol = f.tol;
  if (f.inner_tol >= 0.0) c.inner_tol = f.inner_tol;
  c.inner_budget = pbm::inner_budget_from_string(f.inner_budget, c.resolved_inner_tol());
  c.max_outer_iters = f.max_iters;
  c.cache_bytes = f.cache_mb << 20;
  c.seed = f.seed;
  c.verify_every = f.verify_every;
  c.max_imbalance = f.max_imbalance;
  c.record_time = f.clock == "wall";
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

/// Every resolved setting, so a manifest alone reproduces the run.
json flags_to_json(const TrainFlags& f, const pbm::TrainConfig& c) {
  return {{"data", f.data},
          {"test", f.test},
          {"loss", f.loss},
          {"C", f.C},
          {"kernel", f.kernel},
          {"gamma", f.gamma},
          {"workers", f.workers},
          {"partition", f.partition},
          {"subsample", f.subsample},
          {"kmeans_iters", f.kmeans_iters},
          {"sigma", f.sigma},
          {"line_search", pbm::to_string(c.resolved_line_search())},
          {"inner_strategy", f.inner_strategy},
          {"inner_budget", f.inner_budget},
          {"inner_tol", c.resolved_inner_tol()},
          {"tol", f.tol},
          {"max_iters", f.max_iters},
          {"cache_mb", f.cache_mb},
          {"seed", f.seed},
          {"verify_every", f.verify_every},
          {"max_imbalance", f.max_imbalance},
          {"clock", f.clock},
          {"threads_env", std::getenv("PBM_THREADS") ? std::getenv("PBM_THREADS") : ""}};
}

TrainFlags flags_from_json(const json& j) {
  TrainFlags f;
  f.data = j.at("data").get<std::string>();
  f.test = j.value("test", "");
  f.loss = j.at("loss").get<std::string>();
  f.C = j.at("C").get<double>();
  f.kernel = j.at("kernel").get<std::string>();
  f.gamma = j.at("gamma").get<double>();
  f.workers = j.at("workers").get<std::size_t>();
  f.partition = j.at("partition").get<std::string>();
  f.subsample = j.at("subsample").get<std::size_t>();
  f.kmeans_iters = j.at("kmeans_iters").get<std::size_t>();
  f.sigma = j.at("sigma").get<double>();
  f.line_search = j.at("line_search").get<std::string>();
  f.inner_strategy = j.at("inner_strategy").get<std::string>();
  f.inner_budget = j.at("inner_budget").get<std::string>();
  f.inner_tol = j.at("inner_tol").get<double>();
  f.tol = j.at("tol").get<double>();
  f.max_iters = j.at("max_iters").get<std::size_t>();
  f.cache_mb = j.at("cache_mb").get<std::size_t>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.verify_every = j.at("verify_every").get<std::size_t>();
  f.max_imbalance = j.value("max_imbalance", 4.0);
  f.clock = j.at("clock").get<std::string>();
  return f;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return json::parse(in);
}

template <typename Fn>
void write_file(const std::string& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  body(out);
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

void report_accuracy(const pbm::Model& model, const std::string& test_path) {
  const auto test = pbm::load_libsvm(test_path, model.label_map);
  std::cout << "test accuracy (global): " << pbm::accuracy(model, test, pbm::PredictMode::global) << '\n';
  if (model.local) {
    std::cout << "test accuracy (local):  " << pbm::accuracy(model, test, pbm::PredictMode::local) << '\n';
  }
}

struct TrainArgs {
  TrainFlags flags;
  std::string manifest;
  std::string model_out = "model.json";
  std::string trace_out = "trace.csv";
  std::string manifest_out;
};

int cmd_train(TrainArgs& a, const CLI::App& cmd) {
  TrainFlags flags = a.flags;
  std::string model_out = a.model_out;
  std::string trace_out = a.trace_out;
  std::string manifest_out = a.manifest_out;
  if (!a.manifest.empty()) {
    const auto m = read_json(a.manifest);
    if (m.value("format", "") != "pbm-manifest") throw UsageError(a.manifest + " is not a pbm manifest");
    flags = flags_from_json(m.at("config"));
    if (cmd.count("--model-out") == 0) model_out = m.at("outputs").at("model").get<std::string>();
    if (cmd.count("--trace-out") == 0) trace_out = m.at("outputs").at("trace").get<std::string>();
  } else if (flags.data.empty()) {
    throw UsageError("--data is required (or --manifest)");
  } else if (manifest_out.empty()) {
    manifest_out = "manifest.json";
  }

  const auto config = make_config(flags);
  const auto data = pbm::load_libsvm(flags.data);
  if (config.workers > data.size()) throw UsageError("--workers exceeds the number of samples");

  if (!manifest_out.empty()) {
    const json manifest = {{"format", "pbm-manifest"},
                           {"version", PBM_VERSION},
                           {"start_time", utc_now()},
                           {"config", flags_to_json(flags, config)},
                           {"outputs", {{"model", model_out}, {"trace", trace_out}}}};
    write_file(manifest_out, [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
  }

  const auto result = pbm::train(config, data);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  pbm::save_model(result.model, model_out);
  write_file(trace_out, [&](std::ostream& out) { result.trace.write_csv(out); });

  const auto& last = result.trace.rows.back();
  std::cout << "n=" << data.size() << " workers=" << config.workers << " stop=" << pbm::to_string(result.stop)
            << " iterations=" << result.iterations << '\n'
            << std::setprecision(12) << "objective=" << last.objective << " residual=" << last.residual_inf
            << " support_vectors=" << result.model.support.size() << " bytes_comm=" << result.bytes_comm << '\n';
  if (config.verify_every > 0) std::cout << "max Q alpha drift=" << result.max_q_alpha_drift << '\n';
  if (!flags.test.empty()) report_accuracy(result.model, flags.test);
  return result.stop == pbm::StopReason::converged ? kExitOk : kExitMaxIters;
}

struct PredictArgs {
  std::string model;
  std::string test;
  std::string mode = "global";
  std::string output;
};

int cmd_predict(const PredictArgs& a) {
  const auto model = pbm::load_model(a.model);
  const auto mode = pbm::predict_mode_from_string(a.mode);
  if (mode == pbm::PredictMode::local && !model.local) {
    std::cerr << "error: model has no kmeans centers; --mode local needs a kmeans-partitioned model\n";
    return kExitDataErr;
  }
  const auto test = pbm::load_libsvm(a.test, model.label_map);
  const auto labels = pbm::predict_all(model, test, mode);

  const auto emit = [&](std::ostream& out) {
    for (const double y : labels) out << model.label_map.to_raw(y) << '\n';
  };
  if (a.output.empty()) {
    emit(std::cout);
  } else {
    write_file(a.output, emit);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += labels[i] == test.labels[i] ? 1 : 0;
  std::cerr << "accuracy = " << static_cast<double>(correct) / static_cast<double>(labels.size()) << " ("
            << correct << "/" << labels.size() << ")\n";
  return kExitOk;
}

struct BenchArgs {
  TrainFlags flags;
  std::vector<std::size_t> workers{2, 4, 8};
  std::vector<std::string> partitions{"random", "kmeans"};
  double reference = 0.0;
  std::string out = "bench.csv";
};

int cmd_bench(BenchArgs& a, const CLI::App& cmd) {
  if (a.flags.data.empty()) throw UsageError("--data is required");
  const auto data = pbm::load_libsvm(a.flags.data);

  double f_star = a.reference;
  if (cmd.count("--reference") == 0) {
    TrainFlags ref = a.flags;
    ref.workers = 1;
    ref.partition = "random";
    ref.inner_budget = "unlimited";
    ref.tol = std::min(a.flags.tol, 1e-6);
    ref.inner_tol = 0.1 * ref.tol;
    ref.max_iters = 100000;
    const auto result = pbm::train(make_config(ref), data);
    f_star = result.trace.rows.back().objective;
    std::cerr << "reference objective f* = " << std::setprecision(17) << f_star << " ("
              << pbm::to_string(result.stop) << ")\n";
  }
  if (f_star == 0.0) throw UsageError("reference objective is 0; relative error undefined");

  std::ofstream out(a.out);
  if (!out) throw std::ios_base::failure("cannot write " + a.out);
  out << "partition,workers,iter,time_s,objective,rel_error,residual_inf,beta,bytes_comm\n"
      << std::setprecision(17);
  for (const auto& partition : a.partitions) {
    for (const auto k : a.workers) {
      TrainFlags f = a.flags;
      f.partition = partition;
      f.workers = k;
      const auto result = pbm::train(make_config(f), data);
      for (const auto& r : result.trace.rows) {
        out << partition << ',' << k << ',' << r.iter << ',' << r.time_s << ',' << r.objective << ','
            << (r.objective - f_star) / std::abs(f_star) << ',' << r.residual_inf << ',' << r.beta << ','
            << r.bytes_comm << '\n';
      }
      std::cerr << partition << " k=" << k << ": " << result.iterations << " iterations, "
                << pbm::to_string(result.stop) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel block minimization for kernel SVM and logistic regression"};
  app.set_version_flag("--version", PBM_VERSION);
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  add_train_flags(*train, train_args.flags);
  train->add_option("--manifest", train_args.manifest, "Rerun the configuration recorded in a manifest")
      ->check(CLI::ExistingFile);
  train->add_option("--model-out", train_args.model_out, "Model JSON output");
  train->add_option("--trace-out", train_args.trace_out, "Trace CSV output");
  train->add_option("--manifest-out", train_args.manifest_out, "Manifest JSON output (default manifest.json)");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Predict labels with a trained model");
  predict->add_option("--model", predict_args.model, "Model JSON")->required();
  predict->add_option("--test,--data", predict_args.test, "LIBSVM file to label")->required();
  predict->add_option("--mode", predict_args.mode, "global | local")->check(CLI::IsMember({"global", "local"}));
  predict->add_option("--output", predict_args.output, "Label output file (default stdout)");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Relative-error curves for random vs kmeans partitions");
  add_train_flags(*bench, bench_args.flags);
  bench->add_option("--workers-list", bench_args.workers, "Worker counts to compare")->delimiter(',');
  bench->add_option("--partitions", bench_args.partitions, "Partition modes to compare")->delimiter(',');
  bench->add_option("--reference", bench_args.reference, "Reference optimum f* (default: long k=1 run)");
  bench->add_option("--out", bench_args.out, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args, *train);
    if (*predict) return cmd_predict(predict_args);
    if (*bench) return cmd_bench(bench_args, *bench);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
