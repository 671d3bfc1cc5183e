#pragma once

#include "dqaem/errors.hpp"
#include "dqaem/estimator.hpp"
#include "dqaem/experiments.hpp"
#include "dqaem/gmm.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace dqaem {

/// Malformed input file or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Header `f0,...,f{d-1}[,label]`, one row per point.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

nlohmann::json mixture_to_json(const MixtureParams& params);
MixtureParams mixture_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const EstimatorConfig& config);

struct FitJsonOptions {
  bool include_trajectory = true;
};
nlohmann::json fit_result_to_json(const FitResult& result, const EstimatorConfig& config,
                                  const FitJsonOptions& options = {});

nlohmann::json benchmark_to_json(const BenchmarkReport& report);
/// Fixed-width table, one line per estimator.
std::string format_benchmark_table(const BenchmarkReport& report);

/// Long format: `axis1,axis2,value` per node, axis1 outer.
void write_landscape_csv(std::ostream& os, const LandscapeGrid& grid);

void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace dqaem
