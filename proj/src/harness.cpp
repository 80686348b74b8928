#include "gm/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <thread>

#include "gm/dpgm.hpp"

namespace gm {

double matching_accuracy(const PermutationMatching& pred, const std::vector<int>& truth,
                         const std::vector<bool>* mask) {
  if (pred.n() < static_cast<int>(truth.size()))
    throw std::invalid_argument("accuracy: prediction shorter than truth");
  if (mask && mask->size() != truth.size())
    throw std::invalid_argument("accuracy: mask size mismatch");
  int genuine = 0, correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool g = mask ? (*mask)[i] : truth[i] >= 0;
    if (!g) continue;
    ++genuine;
    if (pred.assignment[i] == truth[i]) ++correct;
  }
  return genuine == 0 ? 0.0 : static_cast<double>(correct) / genuine;
}

const char* sweep_var_name(SweepVar v) {
  switch (v) {
    case SweepVar::Sigma: return "sigma";
    case SweepVar::NOut: return "n_out";
    case SweepVar::InlierRatio: return "inlier_ratio";
  }
  return "?";
}

SweepVar sweep_var_from_name(const std::string& name) {
  if (name == "sigma") return SweepVar::Sigma;
  if (name == "n_out") return SweepVar::NOut;
  if (name == "inlier_ratio") return SweepVar::InlierRatio;
  throw std::invalid_argument("unknown sweep variable: " + name);
}

void ExperimentConfig::validate() const {
  if (sweep_values.empty()) throw std::invalid_argument("experiment: empty sweep values");
  if (methods.empty()) throw std::invalid_argument("experiment: empty method list");
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  base.validate();
  if (sweep_var == SweepVar::InlierRatio) {
    // The sweep overwrites inlier_count per value, so only the other
    // point-cloud fields constrain the base config here.
    PointCloudSpec probe = pc_base;
    probe.inlier_count = probe.n_points;
    probe.validate();
  } else {
    pc_base.validate();
  }
  solver.validate();
  baseline.validate();
  for (double v : sweep_values) {
    switch (sweep_var) {
      case SweepVar::Sigma:
        if (!(v >= 0.0)) throw std::invalid_argument("experiment: sigma values must be >= 0");
        break;
      case SweepVar::NOut:
        if (v < 0.0 || v != std::floor(v))
          throw std::invalid_argument("experiment: n_out values must be whole and >= 0");
        break;
      case SweepVar::InlierRatio:
        if (!(v > 0.0 && v <= 1.0))
          throw std::invalid_argument("experiment: inlier ratios in (0, 1]");
        break;
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Instance {
  KeypointPairSample sample;
  AffinityDecomposition aff;
};

Instance make_instance(const ExperimentConfig& cfg, double value, std::uint64_t seed) {
  Instance inst;
  switch (cfg.sweep_var) {
    case SweepVar::Sigma: {
      SyntheticSpec s = cfg.base;
      s.sigma = value;
      s.rng_seed = seed;
      inst.sample = gen_er_pair(s);
      inst.aff = synthetic_affinity(inst.sample, cfg.scale);
      break;
    }
    case SweepVar::NOut: {
      SyntheticSpec s = cfg.base;
      s.n_out = static_cast<int>(value);
      s.rng_seed = seed;
      inst.sample = gen_er_pair(s);
      inst.aff = synthetic_affinity(inst.sample, cfg.scale);
      break;
    }
    case SweepVar::InlierRatio: {
      PointCloudSpec s = cfg.pc_base;
      s.inlier_count = std::max(3, static_cast<int>(std::lround(value * s.n_points)));
      s.rng_seed = seed;
      inst.sample = gen_point_pair(s);
      inst.aff = house_affinity(inst.sample, cfg.scale);
      break;
    }
  }
  return inst;
}

ResultRecord solve_one(const ExperimentConfig& cfg, const Instance& inst, Method method,
                       double value, std::uint64_t seed, double bf_value, bool has_bf) {
  ResultRecord rec;
  rec.method = method_name(method);
  rec.sweep_var = sweep_var_name(cfg.sweep_var);
  rec.sweep_value = value;
  rec.seed = seed;
  try {
    PermutationMatching matching;
    int iters = 0;
    const auto t0 = std::chrono::steady_clock::now();
    switch (method) {
      case Method::Dpgm: {
        DpgmResult r = dpgm_solve(inst.aff, cfg.solver);
        matching = std::move(r.matching);
        iters = r.trace.iters_run;
        break;
      }
      case Method::Sm: {
        BaselineResult r = spectral_match(inst.aff, cfg.baseline);
        matching = std::move(r.matching);
        iters = r.iters;
        break;
      }
      case Method::Rrwm: {
        BaselineResult r = rrwm(inst.aff, cfg.baseline);
        matching = std::move(r.matching);
        iters = r.iters;
        break;
      }
      case Method::Gagm: {
        BaselineResult r = gagm(inst.aff, cfg.baseline);
        matching = std::move(r.matching);
        iters = r.iters;
        break;
      }
      case Method::Ipfp: {
        BaselineResult r = ipfp(inst.aff, cfg.baseline, MatchingState::uniform(inst.aff.n));
        matching = std::move(r.matching);
        iters = r.iters;
        break;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = cfg.zero_wall_time
                      ? 0.0
                      : std::chrono::duration<double, std::milli>(t1 - t0).count();
    rec.iters = iters;
    rec.objective = qap_objective(inst.aff, matching);
    const std::vector<bool> mask = inst.sample.truth_mask();
    rec.accuracy = matching_accuracy(matching, inst.sample.truth, &mask);
    if (has_bf) {
      rec.has_oracle = true;
      rec.oracle_ratio = bf_value > 0.0 ? rec.objective / bf_value
                                        : (rec.objective == 0.0 ? 1.0 : 0.0);
    }
  } catch (const std::exception&) {
    rec.failed = true;
  }
  return rec;
}

std::vector<ResultRecord> run_trial(const ExperimentConfig& cfg, double value,
                                    std::size_t value_idx, int trial) {
  const std::uint64_t seed =
      splitmix64(cfg.seed ^ splitmix64(value_idx * 1000003ULL + static_cast<std::uint64_t>(trial)));
  std::vector<ResultRecord> rows;
  rows.reserve(cfg.methods.size());
  Instance inst;
  try {
    inst = make_instance(cfg, value, seed);
  } catch (const std::exception&) {
    for (Method m : cfg.methods) {
      ResultRecord rec;
      rec.method = method_name(m);
      rec.sweep_var = sweep_var_name(cfg.sweep_var);
      rec.sweep_value = value;
      rec.seed = seed;
      rec.failed = true;
      rows.push_back(std::move(rec));
    }
    return rows;
  }
  double bf_value = 0.0;
  bool has_bf = false;
  if (inst.aff.n <= 10) {
    bf_value = brute_force_qap(inst.aff).value;
    has_bf = true;
  }
  for (Method m : cfg.methods)
    rows.push_back(solve_one(cfg, inst, m, value, seed, bf_value, has_bf));
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int workers = cfg.threads > 0
                          ? cfg.threads
                          : std::max(1u, std::thread::hardware_concurrency());
  std::vector<ResultRecord> records;

  for (std::size_t vi = 0; vi < cfg.sweep_values.size(); ++vi) {
    const double value = cfg.sweep_values[vi];
    std::vector<std::vector<ResultRecord>> per_trial(cfg.trials);
    for (int start = 0; start < cfg.trials; start += workers) {
      const int stop = std::min(cfg.trials, start + workers);
      std::vector<std::future<std::vector<ResultRecord>>> futs;
      futs.reserve(stop - start);
      for (int t = start; t < stop; ++t)
        futs.push_back(std::async(std::launch::async,
                                  [&cfg, value, vi, t] { return run_trial(cfg, value, vi, t); }));
      for (int t = start; t < stop; ++t) per_trial[t] = futs[t - start].get();
    }
    // Flush in deterministic (method, trial) order regardless of completion.
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
      for (int t = 0; t < cfg.trials; ++t) records.push_back(per_trial[t][m]);
    if (!cfg.out_path.empty()) emit_results(records, cfg.out_path, cfg.format);
  }
  return records;
}

std::string results_to_csv(const std::vector<ResultRecord>& records) {
  std::string out = "method,sweep_var,sweep_value,seed,accuracy,objective,oracle_ratio,wall_ms,iters\n";
  for (const ResultRecord& r : records) {
    out += r.method;
    out += ',';
    out += r.sweep_var;
    out += ',';
    out += format_double(r.sweep_value);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    if (!r.failed) {
      out += format_double(r.accuracy);
      out += ',';
      out += format_double(r.objective);
      out += ',';
      if (r.has_oracle) out += format_double(r.oracle_ratio);
      out += ',';
      out += format_double(r.wall_ms);
      out += ',';
      out += std::to_string(r.iters);
    } else {
      out += ",,,,";  // failed row: empty metric cells
    }
    out += '\n';
  }
  return out;
}

std::string results_to_json(const std::vector<ResultRecord>& records) {
  std::string out = "[\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    const ResultRecord& r = records[k];
    out += "  {\"method\": \"" + r.method + "\", \"sweep_var\": \"" + r.sweep_var +
           "\", \"sweep_value\": " + format_double(r.sweep_value) +
           ", \"seed\": " + std::to_string(r.seed);
    if (!r.failed) {
      out += ", \"accuracy\": " + format_double(r.accuracy) +
             ", \"objective\": " + format_double(r.objective) + ", \"oracle_ratio\": " +
             (r.has_oracle ? format_double(r.oracle_ratio) : std::string("null")) +
             ", \"wall_ms\": " + format_double(r.wall_ms) +
             ", \"iters\": " + std::to_string(r.iters);
    } else {
      out += ", \"accuracy\": null, \"objective\": null, \"oracle_ratio\": null"
             ", \"wall_ms\": null, \"iters\": null";
    }
    out += ", \"failed\": ";
    out += r.failed ? "true" : "false";
    out += '}';
    if (k + 1 < records.size()) out += ',';
    out += '\n';
  }
  out += "]\n";
  return out;
}

void emit_results(const std::vector<ResultRecord>& records, const std::string& path,
                  OutputFormat format) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("emit_results: cannot open " + path);
  f << (format == OutputFormat::Csv ? results_to_csv(records) : results_to_json(records));
  if (!f) throw IoError("emit_results: write failed for " + path);
}

}  // namespace gm
