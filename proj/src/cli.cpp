#include "dqaem/cli.hpp"

#include "dqaem/config.hpp"
#include "dqaem/errors.hpp"
#include "dqaem/estimator.hpp"
#include "dqaem/experiments.hpp"
#include "dqaem/io.hpp"
#include "dqaem/quantum.hpp"
#include "dqaem/seeds.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace dqaem {

namespace {

using nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
void override_if(const CLI::Option* opt, const T& value, T& target) {
  if (opt->count() > 0) target = value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_tau(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw UsageError("bad --tau value '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("bad --tau value '" + text + "'");
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Flags shared by every subcommand.
struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 1;
  int jobs = 0;
  bool no_timestamp = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration; flags override it")
        ->check(CLI::ExistingFile);
    seed_opt = app->add_option("--seed", seed, "Top-level seed");
    jobs_opt = app->add_option("--jobs", jobs, "Worker threads (default: $DQAEM_JOBS or 1)");
    app->add_flag("--no-timestamp", no_timestamp, "Omit the generated_at field");
  }

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    override_if(seed_opt, seed, c.seed);
    override_if(jobs_opt, jobs, c.jobs);
    if (no_timestamp) c.timestamp = false;
    return c;
  }
};

/// Estimator flags shared by `fit` and `benchmark`.
struct EstimatorFlags {
  std::string mode;
  double beta0 = 1.0;
  double gamma0 = 0.0;
  std::string tau;
  bool beta_fixed = false;
  int max_iters = 1000;
  double tol = 1e-8;
  std::string policy;
  int k = 0;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* beta0_opt = nullptr;
  CLI::Option* gamma0_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* beta_fixed_opt = nullptr;
  CLI::Option* max_iters_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* policy_opt = nullptr;
  CLI::Option* k_opt = nullptr;

  void attach(CLI::App* app, bool with_mode) {
    if (with_mode) {
      mode_opt = app->add_option("--mode", mode, "Estimator")
                     ->check(CLI::IsMember({"em", "dsaem", "dqaem"}));
    }
    beta0_opt = app->add_option("--beta0", beta0, "Initial inverse temperature");
    gamma0_opt = app->add_option("--gamma0", gamma0, "Initial quantum-fluctuation strength");
    tau_opt = app->add_option("--tau", tau, "Decay constant of the schedule ('inf' = constant)");
    beta_fixed_opt = app->add_flag("--beta-fixed", beta_fixed, "Hold beta at 1");
    max_iters_opt = app->add_option("--max-iters", max_iters, "Iteration cap");
    tol_opt = app->add_option("--tol", tol, "Relative objective change for convergence");
    policy_opt = app->add_option("--empty-policy", policy, "Empty-component policy")
                     ->check(CLI::IsMember({"abort", "reseed"}));
    k_opt = app->add_option("--k", k, "Mixture components (default: distinct labels)");
  }

  void apply(RunConfig& c) const {
    auto& e = c.estimator;
    if (mode_opt && mode_opt->count()) e.mode = parse_mode(mode);
    override_if(beta0_opt, beta0, e.schedule.beta0);
    override_if(gamma0_opt, gamma0, e.schedule.gamma0);
    if (tau_opt->count()) e.schedule.tau = parse_tau(tau);
    if (beta_fixed) e.schedule.beta_fixed = true;
    override_if(max_iters_opt, max_iters, e.max_iterations);
    override_if(tol_opt, tol, e.tolerance);
    if (policy_opt->count()) e.empty_component_policy = parse_policy(policy);
    override_if(k_opt, k, e.k);
  }
};

int component_count(const RunConfig& c, const Dataset& data) {
  if (c.estimator.k > 0) return c.estimator.k;
  if (data.labels.empty()) throw UsageError("--k is required when the CSV has no label column");
  return static_cast<int>(std::set<int>(data.labels.begin(), data.labels.end()).size());
}

std::filesystem::path default_truth_path(const std::filesystem::path& out) {
  auto p = out;
  p.replace_extension(".truth.json");
  return p;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const RunConfig& c, const std::string& output, const std::string& truth,
                 std::ostream& out) {
  const Dataset data = generate_dataset(make_generator_spec(c));
  write_dataset_csv(output, data);
  json meta = {{"schema_version", kSchemaVersion},
               {"generator", run_config_to_json(c).at("generator")},
               {"seed", c.seed},
               {"n", data.size()},
               {"ground_truth", mixture_to_json(*data.ground_truth)}};
  if (c.timestamp) meta["generated_at"] = utc_timestamp();
  const auto truth_path = truth.empty() ? default_truth_path(output) : std::filesystem::path(truth);
  write_json(truth_path, meta);
  out << "wrote " << data.size() << " points to " << output << " and ground truth to "
      << truth_path.string() << '\n';
  return kExitOk;
}

int cmd_fit(const RunConfig& c, const std::string& input, const std::string& output,
            const std::string& init_path, bool means_only, bool no_trajectory, std::ostream& out) {
  const Dataset data = read_dataset_csv(input);
  const EstimatorConfig config = make_estimator_config(c);
  const MixtureParams init =
      init_path.empty()
          ? random_init(data, component_count(c, data), derive_seed(c.seed, SeedStream::kInit, 0),
                        config.covariance_floor)
          : mixture_from_json(read_json_file(init_path).contains("ground_truth")
                                  ? read_json_file(init_path).at("ground_truth")
                                  : read_json_file(init_path));
  const FitResult result =
      means_only ? means_only_fit(data, init, config) : run_fit(data, init, config);
  json j = fit_result_to_json(result, config, {.include_trajectory = !no_trajectory});
  j["means_only"] = means_only;
  if (c.timestamp) j["generated_at"] = utc_timestamp();
  write_json(output, j);
  out << to_string(config.mode) << ": " << result.iterations << " iterations, final log-likelihood "
      << format_double(result.final_log_likelihood)
      << (result.converged ? " (converged)" : " (not converged)") << '\n';
  if (result.failed()) {
    out << "fit failed: " << to_string(*result.failure_reason) << ": " << result.failure_detail
        << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_benchmark(const RunConfig& c, const std::string& input, const std::string& output,
                  std::ostream& out) {
  const Dataset data = read_dataset_csv(input);
  const auto configs = make_benchmark_configs(c);
  BenchmarkOptions options;
  options.trials = c.benchmark.trials;
  options.success_threshold = c.benchmark.success_threshold;
  options.seed = c.seed;
  options.jobs = resolve_jobs(c.jobs);
  const BenchmarkReport report =
      run_benchmark(data, configs, options, default_init_sampler(component_count(c, data)));
  json j = benchmark_to_json(report);
  json ests = json::array();
  for (const auto& nc : configs) ests.push_back(config_to_json(nc.config));
  j["configs"] = ests;
  if (c.timestamp) j["generated_at"] = utc_timestamp();
  write_json(output, j);
  out << format_benchmark_table(report);
  return kExitOk;
}

int cmd_landscape(const RunConfig& c, const std::string& input, const std::string& params_path,
                  const std::string& output, std::ostream& out) {
  Dataset data;
  std::optional<MixtureParams> base;
  if (input.empty()) {
    data = generate_dataset(barrier_instance_spec(c.seed));
    base = barrier_instance_params(0.0, 0.0);
  } else {
    if (params_path.empty()) throw UsageError("--params is required with --input");
    data = read_dataset_csv(input);
    const json pj = read_json_file(params_path);
    base = mixture_from_json(pj.contains("ground_truth") ? pj.at("ground_truth") : pj);
  }
  const auto& l = c.landscape;
  const GridAxis axis = make_axis(l.min, l.max, l.points);
  const LandscapeGrid grid = landscape(data, *base, {0, 0}, {1, 0}, axis, axis, l.beta, l.gamma);
  std::ofstream os(output, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + output + "' for writing");
  write_landscape_csv(os, grid);
  const auto peaks = strict_local_maxima(grid);
  out << "grid " << l.points << "x" << l.points << " at beta=" << format_double(l.beta)
      << " gamma=" << format_double(l.gamma) << ": " << peaks.size() << " strict local maxima\n";
  for (const auto& p : peaks) {
    out << "  (" << format_double(axis.at(p.i)) << ", " << format_double(axis.at(p.j))
        << ") -> " << format_double(p.value) << '\n';
  }
  return kExitOk;
}

int cmd_trotter(const RunConfig& c, const std::string& output, std::ostream& out) {
  const auto& t = c.trotter;
  const Vector h = Eigen::Map<const Vector>(t.energies.data(),
                                            static_cast<Eigen::Index>(t.energies.size()));
  const Vector exact = quantum_weight(h, t.beta, t.gamma).matrix.diagonal() *
                       std::exp(-t.beta * h.minCoeff());
  std::ostringstream csv;
  csv << "slices,max_abs_error,ratio_to_previous\n";
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int m : t.slices) {
    const double err = (trotter_diagonal(h, t.beta, t.gamma, m) - exact).cwiseAbs().maxCoeff();
    csv << m << ',' << format_double(err) << ','
        << (std::isnan(previous) ? std::string() : format_double(previous / err)) << '\n';
    out << "M=" << m << " max|error|=" << format_double(err) << '\n';
    previous = err;
  }
  write_text_file(output, csv.str());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-mixture estimation with EM, DSAEM and DQAEM"};
  app.name("dqaem");
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Sample a synthetic data set");
  CommonFlags gen_common;
  gen_common.attach(gen);
  GeneratorSettings gen_flags;
  std::string gen_out;
  std::string gen_truth;
  auto* preset_opt = gen->add_option("--preset", gen_flags.preset, "ring or barrier")
                         ->check(CLI::IsMember({"ring", "barrier"}));
  auto* k_opt = gen->add_option("--k", gen_flags.k, "Components");
  auto* d_opt = gen->add_option("--d", gen_flags.d, "Dimension");
  auto* n_opt = gen->add_option("--n", gen_flags.n, "Points");
  auto* radius_opt = gen->add_option("--radius", gen_flags.radius, "Ring radius");
  auto* stddev_opt = gen->add_option("--stddev", gen_flags.stddev, "Component standard deviation");
  gen->add_option("-o,--output", gen_out, "Dataset CSV")->required();
  gen->add_option("--truth", gen_truth, "Ground-truth JSON (default: <output>.truth.json)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a mixture to a CSV data set");
  CommonFlags fit_common;
  fit_common.attach(fit);
  EstimatorFlags fit_flags;
  fit_flags.attach(fit, true);
  std::string fit_in, fit_out, fit_init;
  bool means_only = false;
  bool no_trajectory = false;
  fit->add_option("-i,--input", fit_in, "Dataset CSV")->required();
  fit->add_option("-o,--output", fit_out, "FitResult JSON")->required();
  fit->add_option("--init", fit_init, "Initial mixture JSON (default: random init)");
  fit->add_flag("--means-only", means_only, "Estimate means only");
  fit->add_flag("--no-trajectory", no_trajectory, "Omit the parameter trajectory");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Success-ratio comparison over shared inits");
  CommonFlags bench_common;
  bench_common.attach(bench);
  EstimatorFlags bench_flags;
  bench_flags.attach(bench, false);
  std::string bench_in, bench_out, modes;
  int trials = 300;
  double threshold = 1.0;
  bench->add_option("-i,--input", bench_in, "Dataset CSV")->required();
  bench->add_option("-o,--output", bench_out, "BenchmarkReport JSON")->required();
  auto* trials_opt = bench->add_option("--trials", trials, "Trials per estimator");
  auto* modes_opt = bench->add_option("--modes", modes, "Comma-separated estimators");
  auto* threshold_opt = bench->add_option("--threshold", threshold, "Success threshold (nats)");

  // landscape
  auto* land = app.add_subcommand("landscape", "Negative free energy over a (mu1, mu2) grid");
  CommonFlags land_common;
  land_common.attach(land);
  LandscapeSettings land_flags;
  std::string land_in, land_params, land_out;
  land->add_option("-i,--input", land_in, "Dataset CSV (default: bundled barrier instance)");
  land->add_option("--params", land_params, "Base mixture JSON");
  land->add_option("-o,--output", land_out, "Grid CSV")->required();
  auto* lbeta = land->add_option("--beta", land_flags.beta, "Inverse temperature");
  auto* lgamma = land->add_option("--gamma", land_flags.gamma, "Quantum-fluctuation strength");
  auto* lmin = land->add_option("--min", land_flags.min, "Axis lower bound");
  auto* lmax = land->add_option("--max", land_flags.max, "Axis upper bound");
  auto* lpoints = land->add_option("--points", land_flags.points, "Nodes per axis");

  // trotter-check
  auto* trot = app.add_subcommand("trotter-check", "Product-formula error versus slice count");
  CommonFlags trot_common;
  trot_common.attach(trot);
  std::string energies, slices, trot_out;
  double tbeta = 1.0, tgamma = 0.8;
  auto* energies_opt = trot->add_option("--energies", energies, "Comma-separated energies");
  auto* slices_opt = trot->add_option("--slices", slices, "Comma-separated slice counts");
  auto* tbeta_opt = trot->add_option("--beta", tbeta, "Inverse temperature");
  auto* tgamma_opt = trot->add_option("--gamma", tgamma, "Quantum-fluctuation strength");
  trot->add_option("-o,--output", trot_out, "Table CSV")->required();

  std::vector<std::string> reversed(args.size() > 0 ? args.begin() + 1 : args.begin(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      RunConfig c = gen_common.load();
      auto& g = c.generator;
      override_if(preset_opt, gen_flags.preset, g.preset);
      override_if(k_opt, gen_flags.k, g.k);
      override_if(d_opt, gen_flags.d, g.d);
      override_if(n_opt, gen_flags.n, g.n);
      override_if(radius_opt, gen_flags.radius, g.radius);
      override_if(stddev_opt, gen_flags.stddev, g.stddev);
      return cmd_gen_data(c, gen_out, gen_truth, out);
    }
    if (fit->parsed()) {
      RunConfig c = fit_common.load();
      fit_flags.apply(c);
      return cmd_fit(c, fit_in, fit_out, fit_init, means_only, no_trajectory, out);
    }
    if (bench->parsed()) {
      RunConfig c = bench_common.load();
      bench_flags.apply(c);
      auto& b = c.benchmark;
      override_if(trials_opt, trials, b.trials);
      override_if(threshold_opt, threshold, b.success_threshold);
      if (modes_opt->count()) {
        b.modes.clear();
        for (const auto& m : split_list(modes)) b.modes.push_back(parse_mode(m));
      }
      // Schedule flags map onto the estimator they affect.
      if (bench_flags.beta0_opt->count()) b.dsaem_beta0 = bench_flags.beta0;
      if (bench_flags.gamma0_opt->count()) b.dqaem_gamma0 = bench_flags.gamma0;
      if (bench_flags.tau_opt->count()) b.tau = parse_tau(bench_flags.tau);
      return cmd_benchmark(c, bench_in, bench_out, out);
    }
    if (land->parsed()) {
      RunConfig c = land_common.load();
      auto& l = c.landscape;
      override_if(lbeta, land_flags.beta, l.beta);
      override_if(lgamma, land_flags.gamma, l.gamma);
      override_if(lmin, land_flags.min, l.min);
      override_if(lmax, land_flags.max, l.max);
      override_if(lpoints, land_flags.points, l.points);
      return cmd_landscape(c, land_in, land_params, land_out, out);
    }
    if (trot->parsed()) {
      RunConfig c = trot_common.load();
      auto& t = c.trotter;
      if (energies_opt->count()) {
        t.energies.clear();
        for (const auto& s : split_list(energies)) t.energies.push_back(std::stod(s));
      }
      if (slices_opt->count()) {
        t.slices.clear();
        for (const auto& s : split_list(slices)) t.slices.push_back(std::stoi(s));
      }
      override_if(tbeta_opt, tbeta, t.beta);
      override_if(tgamma_opt, tgamma, t.gamma);
      return cmd_trotter(c, trot_out, out);
    }
  } catch (const NumericalRangeError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EmptyReportError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EmptyComponentError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::logic_error& e) {
    // std::stod / std::stoi on malformed list items
    err << "error: invalid argument: " << e.what() << '\n';
    return kExitUsage;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace dqaem
