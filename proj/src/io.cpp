#include "dqaem/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

namespace dqaem {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) throw FormatError("could not format number");
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw FormatError("line " + std::to_string(line) + ": '" + t + "' is not a number");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  validate_dataset(data);
  const bool labelled = !data.labels.empty();
  for (int j = 0; j < data.dim(); ++j) os << (j ? "," : "") << 'f' << j;
  if (labelled) os << ",label";
  os << '\n';
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) {
      os << (j ? "," : "") << format_double(data.points(i, j));
    }
    if (labelled) os << ',' << data.labels[i];
    os << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("dataset CSV is empty");
  const auto header = split(trim(line), ',');
  int dim = 0;
  bool labelled = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = trim(header[c]);
    if (h == "f" + std::to_string(c)) {
      if (labelled) throw FormatError("feature column after label column");
      ++dim;
    } else if (h == "label" && c + 1 == header.size()) {
      labelled = true;
    } else {
      throw FormatError("unexpected header column '" + h + "'");
    }
  }
  if (dim == 0) throw FormatError("dataset CSV has no feature columns");

  std::vector<double> values;
  Dataset data;
  int row = 0;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns, got " +
                        std::to_string(cells.size()));
    }
    for (int j = 0; j < dim; ++j) values.push_back(parse_number(cells[j], line_no));
    if (labelled) {
      const double v = parse_number(cells[dim], line_no);
      if (v < 0 || v != std::floor(v)) {
        throw FormatError("line " + std::to_string(line_no) + ": bad label");
      }
      data.labels.push_back(static_cast<int>(v));
    }
    ++row;
  }
  if (row == 0) throw FormatError("dataset CSV has no rows");
  data.points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), row, dim);
  validate_dataset(data);
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  return read_dataset_csv(is);
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  auto os = open_out(path);
  write_dataset_csv(os, data);
}

json mixture_to_json(const MixtureParams& params) {
  json comps = json::array();
  for (const auto& c : params.components()) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
      cov.push_back(std::vector<double>(c.covariance.row(r).begin(), c.covariance.row(r).end()));
    }
    comps.push_back({{"weight", c.weight},
                     {"mean", std::vector<double>(c.mean.begin(), c.mean.end())},
                     {"covariance", cov}});
  }
  return {{"components", comps}};
}

MixtureParams mixture_from_json(const json& j) {
  try {
    std::vector<GaussianComponent> comps;
    for (const auto& c : j.at("components")) {
      const auto mean = c.at("mean").get<std::vector<double>>();
      const auto rows = c.at("covariance").get<std::vector<std::vector<double>>>();
      GaussianComponent g;
      g.weight = c.at("weight").get<double>();
      g.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      g.covariance.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw FormatError("covariance is not square");
        for (std::size_t s = 0; s < rows.size(); ++s) {
          g.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = rows[r][s];
        }
      }
      comps.push_back(std::move(g));
    }
    return MixtureParams(std::move(comps));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed mixture JSON: ") + e.what());
  }
}

json config_to_json(const EstimatorConfig& config) {
  const auto& s = config.schedule;
  return {{"mode", to_string(config.mode)},
          {"beta0", s.beta0},
          {"gamma0", s.gamma0},
          {"tau", std::isfinite(s.tau) ? json(s.tau) : json("inf")},
          {"beta_fixed", s.beta_fixed},
          {"max_iterations", config.max_iterations},
          {"tolerance", config.tolerance},
          {"empty_component_policy", to_string(config.empty_component_policy)},
          {"covariance_floor", config.covariance_floor},
          {"seed", config.seed}};
}

json fit_result_to_json(const FitResult& result, const EstimatorConfig& config,
                        const FitJsonOptions& options) {
  json schedule = json::array();
  for (const auto& v : result.schedule_history) {
    schedule.push_back({{"beta", v.beta}, {"gamma", v.gamma}});
  }
  json out = {
      {"schema_version", kSchemaVersion},
      {"config", config_to_json(config)},
      {"iterations", result.iterations},
      {"converged", result.converged},
      {"failure_reason",
       result.failure_reason ? json(to_string(*result.failure_reason)) : json(nullptr)},
      {"failure_detail", result.failure_detail},
      {"reseeds", result.reseeds},
      {"final_log_likelihood", result.final_log_likelihood},
      {"final_params", mixture_to_json(result.final_params)},
      {"objective_history", result.objective_history},
      {"schedule_history", schedule},
      {"monotonicity_violations", monotonicity_violations(result)},
  };
  if (options.include_trajectory) {
    json traj = json::array();
    for (const auto& p : result.param_trajectory) traj.push_back(mixture_to_json(p));
    out["param_trajectory"] = std::move(traj);
  }
  return out;
}

json benchmark_to_json(const BenchmarkReport& report) {
  json ests = json::array();
  for (const auto& e : report.estimators) {
    json finals = json::array();
    for (const auto& o : e.outcomes) {
      finals.push_back(o.failure ? json(nullptr) : json(o.final_log_likelihood));
    }
    ests.push_back({{"name", e.name},
                    {"mode", to_string(e.mode)},
                    {"trials", e.trials},
                    {"successes", e.successes},
                    {"failures", e.failures},
                    {"success_ratio", e.success_ratio},
                    {"mean_final_objective", e.mean_final_objective},
                    {"mean_iterations", e.mean_iterations},
                    {"final_log_likelihoods", finals}});
  }
  return {{"schema_version", kSchemaVersion},
          {"trials", report.trials},
          {"seed", report.seed},
          {"success_threshold", report.success_threshold},
          {"best_objective", report.best_objective},
          {"estimators", ests}};
}

std::string format_benchmark_table(const BenchmarkReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "estimator" << std::right << std::setw(8) << "trials"
     << std::setw(11) << "successes" << std::setw(10) << "ratio" << std::setw(10) << "failed"
     << std::setw(16) << "mean final" << std::setw(12) << "mean iters" << '\n';
  os << std::fixed;
  for (const auto& e : report.estimators) {
    os << std::left << std::setw(10) << e.name << std::right << std::setw(8) << e.trials
       << std::setw(11) << e.successes << std::setw(9) << std::setprecision(1)
       << 100.0 * e.success_ratio << '%' << std::setw(10) << e.failures << std::setw(16)
       << std::setprecision(3) << e.mean_final_objective << std::setw(12)
       << std::setprecision(1) << e.mean_iterations << '\n';
  }
  os << "best final log-likelihood " << std::setprecision(3) << report.best_objective
     << ", success threshold " << report.success_threshold << " nats\n";
  return os.str();
}

void write_landscape_csv(std::ostream& os, const LandscapeGrid& grid) {
  os << "axis1,axis2,value\n";
  for (int i = 0; i < grid.axis1.count; ++i) {
    for (int j = 0; j < grid.axis2.count; ++j) {
      os << format_double(grid.axis1.at(i)) << ',' << format_double(grid.axis2.at(j)) << ','
         << format_double(grid.values(i, j)) << '\n';
    }
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  if (!os) throw FormatError("failed writing '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace dqaem
