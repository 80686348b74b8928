#pragma once

#include <cstdint>
#include <string>

#include "gm/baselines.hpp"
#include "gm/core.hpp"
#include "gm/data.hpp"

namespace gm {

// Fraction of genuine (unmasked) nodes with pred[i] == truth[i]. A null mask
// treats truth[i] >= 0 as genuine. No genuine nodes yields 0.
double matching_accuracy(const PermutationMatching& pred, const std::vector<int>& truth,
                         const std::vector<bool>* mask = nullptr);

enum class SweepVar { Sigma, NOut, InlierRatio };

const char* sweep_var_name(SweepVar v);
SweepVar sweep_var_from_name(const std::string& name);

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
  SweepVar sweep_var = SweepVar::Sigma;
  std::vector<double> sweep_values;
  std::vector<Method> methods;
  int trials = 20;
  std::uint64_t seed = 0;
  SyntheticSpec base;       // sigma / n_out sweeps; the swept field is overridden
  PointCloudSpec pc_base;   // inlier-ratio sweep
  double scale = 2900.0;    // kernel scale (house-style data typically 2500)
  SolverParams solver;
  BaselineConfig baseline;
  std::string out_path;     // empty: records only, no file
  OutputFormat format = OutputFormat::Csv;
  int threads = 0;          // 0 = hardware concurrency
  bool zero_wall_time = false;  // report wall_ms = 0 (byte-stable output)
  void validate() const;
};

struct ResultRecord {
  std::string method;
  std::string sweep_var;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;      // instance seed
  double accuracy = 0.0;
  double objective = 0.0;
  double oracle_ratio = 0.0;   // objective / brute-force optimum, n <= 10 only
  bool has_oracle = false;
  double wall_ms = 0.0;
  int iters = 0;
  bool failed = false;
};

// One record per sweep value x method x trial, ordered by (value, method,
// trial). Deterministic given cfg.seed; solver failures become failed rows.
// When out_path is set, rows are appended to it as each cell completes.
std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg);

std::string results_to_csv(const std::vector<ResultRecord>& records);
std::string results_to_json(const std::vector<ResultRecord>& records);
void emit_results(const std::vector<ResultRecord>& records, const std::string& path,
                  OutputFormat format);

}  // namespace gm
