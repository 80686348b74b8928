#include "gm/io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace gm {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

GraphInstance graph_from_json(const json& j, const char* which) {
  if (!j.is_object() || !j.contains("features") || !j.contains("edges"))
    throw std::invalid_argument(std::string(which) + ": expected {features, edges}");
  GraphInstance g;
  for (const auto& row : j.at("features")) {
    Vec f;
    for (const auto& v : row) f.push_back(v.get<double>());
    g.node_features.push_back(std::move(f));
  }
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument(std::string(which) + ": edge must be [i, j]");
    g.edges.push_back(make_edge(e[0].get<int>(), e[1].get<int>()));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.validate();
  return g;
}

json graph_to_json(const GraphInstance& g) {
  json j;
  j["features"] = json::array();
  for (const Vec& f : g.node_features) j["features"].push_back(f);
  j["edges"] = json::array();
  for (const Edge& e : g.edges) j["edges"].push_back(json::array({e.a, e.b}));
  return j;
}

KeypointPairSample sample_from_json(const json& j) {
  if (!j.is_object() || !j.contains("g1") || !j.contains("g2"))
    throw std::invalid_argument("instance: expected {g1, g2[, truth]}");
  KeypointPairSample s;
  s.g1 = graph_from_json(j.at("g1"), "g1");
  s.g2 = graph_from_json(j.at("g2"), "g2");
  if (j.contains("truth")) {
    for (const auto& v : j.at("truth")) s.truth.push_back(v.get<int>());
    if (static_cast<int>(s.truth.size()) != s.g1.n())
      throw std::invalid_argument("instance: truth length != |g1|");
    for (int t : s.truth)
      if (t >= s.g2.n() || t < -1)
        throw std::invalid_argument("instance: truth target out of range");
  } else {
    s.truth.assign(s.g1.n(), -1);
  }
  return s;
}

json sample_to_json(const KeypointPairSample& s) {
  json j;
  j["g1"] = graph_to_json(s.g1);
  j["g2"] = graph_to_json(s.g2);
  j["truth"] = s.truth;
  return j;
}

}  // namespace

KeypointPairSample instance_from_json_text(const std::string& text) {
  try {
    return sample_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw IoError(std::string("invalid instance JSON: ") + e.what());
  }
}

std::string instance_to_json_text(const KeypointPairSample& s) {
  return sample_to_json(s).dump(2) + "\n";
}

KeypointPairSample read_instance_json(const std::string& path) {
  return sample_from_json(parse_file(path));
}

void write_instance_json(const KeypointPairSample& s, const std::string& path) {
  write_file(path, instance_to_json_text(s));
}

std::vector<KeypointPairSample> read_dataset_json(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_array()) throw std::invalid_argument("dataset: expected a JSON array");
  std::vector<KeypointPairSample> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(sample_from_json(item));
  return out;
}

void write_dataset_json(const std::vector<KeypointPairSample>& samples,
                        const std::string& path) {
  json j = json::array();
  for (const auto& s : samples) j.push_back(sample_to_json(s));
  write_file(path, j.dump(2) + "\n");
}

WeightMatrix read_weights_json(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object() || !j.contains("W"))
    throw std::invalid_argument("weights: expected { \"W\": [[...]] }");
  WeightMatrix W;
  const auto& rows = j.at("W");
  W.d = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != W.d)
      throw std::invalid_argument("weights: W must be square");
    for (const auto& v : row) W.w.push_back(v.get<double>());
  }
  W.validate();
  return W;
}

void write_weights_json(const WeightMatrix& W, const std::string& path) {
  json rows = json::array();
  for (int r = 0; r < W.d; ++r) {
    json row = json::array();
    for (int c = 0; c < W.d; ++c) row.push_back(W.at(r, c));
    rows.push_back(std::move(row));
  }
  json j;
  j["W"] = std::move(rows);
  write_file(path, j.dump(2) + "\n");
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& slot) {
  if (j.contains(key)) slot = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig experiment_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");

  static const char* known[] = {
      "sweep_var", "sweep_values", "methods", "trials",   "seed",    "n_in",
      "n_out",     "p_edge",       "sigma",   "D",        "scale",   "n_points",
      "frame_gap", "out",          "format",  "threads",  "solver",  "baseline",
      "zero_wall_time"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("config: unknown field '" + key + "'");
  }

  ExperimentConfig cfg;
  if (j.contains("sweep_var")) cfg.sweep_var = sweep_var_from_name(j.at("sweep_var").get<std::string>());
  if (j.contains("sweep_values"))
    cfg.sweep_values = j.at("sweep_values").get<std::vector<double>>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods"))
      cfg.methods.push_back(method_from_name(m.get<std::string>()));
  }
  maybe(j, "trials", cfg.trials);
  maybe(j, "seed", cfg.seed);
  maybe(j, "n_in", cfg.base.n_in);
  maybe(j, "n_out", cfg.base.n_out);
  maybe(j, "p_edge", cfg.base.p_edge);
  maybe(j, "sigma", cfg.base.sigma);
  maybe(j, "D", cfg.base.d);
  maybe(j, "scale", cfg.scale);
  maybe(j, "n_points", cfg.pc_base.n_points);
  maybe(j, "frame_gap", cfg.pc_base.frame_gap);
  maybe(j, "out", cfg.out_path);
  maybe(j, "threads", cfg.threads);
  maybe(j, "zero_wall_time", cfg.zero_wall_time);
  if (j.contains("format")) {
    const std::string f = j.at("format").get<std::string>();
    if (f == "csv") cfg.format = OutputFormat::Csv;
    else if (f == "json") cfg.format = OutputFormat::Json;
    else throw std::invalid_argument("config: format must be csv or json");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    maybe(s, "lambda", cfg.solver.lambda);
    maybe(s, "beta", cfg.solver.beta);
    maybe(s, "beta_schedule", cfg.solver.beta_schedule);
    maybe(s, "max_iters", cfg.solver.max_iters);
    maybe(s, "tol", cfg.solver.tol);
    maybe(s, "sinkhorn_iters", cfg.solver.sinkhorn_iters);
    maybe(s, "sinkhorn_tol", cfg.solver.sinkhorn_tol);
  }
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    maybe(b, "max_iters", cfg.baseline.max_iters);
    maybe(b, "tol", cfg.baseline.tol);
    maybe(b, "rrwm_alpha", cfg.baseline.rrwm_alpha);
    maybe(b, "rrwm_beta", cfg.baseline.rrwm_beta);
    maybe(b, "gagm_beta0", cfg.baseline.gagm_beta0);
    maybe(b, "gagm_growth", cfg.baseline.gagm_growth);
    maybe(b, "gagm_beta_max", cfg.baseline.gagm_beta_max);
    maybe(b, "sinkhorn_iters", cfg.baseline.sinkhorn_iters);
  }
  return cfg;
}

ExperimentConfig read_experiment_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return experiment_from_json_text(text);
}

}  // namespace gm
