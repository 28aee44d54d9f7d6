#include "ihmp/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef IHMP_VERSION_STRING
#define IHMP_VERSION_STRING "0.0.0"
#endif

namespace ihmp {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Mat json_mat(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::kParse, what + " must be an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c)
      fail(ErrorKind::kParse, what + " has ragged rows");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Vec json_vec(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::kParse, what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json params_json(const ModelParams& p) {
  json j;
  j["state_counts"] = p.state_counts;
  j["obs_dim"] = p.obs_dim;
  j["switch_init"] = vec_json(p.switch_init);
  j["switch_trans"] = mat_json(p.switch_trans);
  json ci = json::array(), ct = json::array(), mu = json::array();
  for (int m = 0; m < p.num_chains(); ++m) {
    ci.push_back(vec_json(p.chain_init[m]));
    ct.push_back(mat_json(p.chain_trans[m]));
    mu.push_back(mat_json(p.means[m]));
  }
  j["chain_init"] = ci;
  j["chain_trans"] = ct;
  j["means"] = mu;
  j["shared_cov"] = mat_json(p.shared_cov);
  return j;
}

ModelParams params_from(const json& j) {
  try {
    ModelParams p;
    p.state_counts = j.at("state_counts").get<std::vector<int>>();
    p.obs_dim = j.at("obs_dim").get<int>();
    p.switch_init = json_vec(j.at("switch_init"), "switch_init");
    p.switch_trans = json_mat(j.at("switch_trans"), "switch_trans");
    const json& ci = j.at("chain_init");
    const json& ct = j.at("chain_trans");
    const json& mu = j.at("means");
    for (std::size_t m = 0; m < ci.size(); ++m) p.chain_init.push_back(json_vec(ci[m], "chain_init"));
    for (std::size_t m = 0; m < ct.size(); ++m) p.chain_trans.push_back(json_mat(ct[m], "chain_trans"));
    for (std::size_t m = 0; m < mu.size(); ++m) p.means.push_back(json_mat(mu[m], "means"));
    p.shared_cov = json_mat(j.at("shared_cov"), "shared_cov");
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("bad parameter document: ") + e.what());
  }
}

json scenario_json(const ScenarioConfig& c) {
  return json{{"kind", to_string(c.kind)},
              {"T", c.length},
              {"sd", c.sd},
              {"missing_ratio", c.missing_ratio},
              {"seed", c.seed},
              {"error_scenario", c.error_scenario},
              {"alpha", c.radar_alpha},
              {"jitter_var", c.radar_jitter_var},
              {"qn", c.qn},
              {"stay", c.switch_stay}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path + "'");
  return out;
}

}  // namespace

const char* version() { return IHMP_VERSION_STRING; }

Config parse_config(const std::string& text, const std::string& source) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(n);
    if (eq == std::string::npos)
      fail(ErrorKind::kParse, where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::kParse, where + ": empty key");
    if (value.empty()) fail(ErrorKind::kParse, where + ": empty value for '" + key + "'");
    if (cfg.count(key))
      fail(ErrorKind::kParse, where + ": duplicate key '" + key + "' (first set on line " +
                                  std::to_string(cfg[key].line) + ")");
    cfg[key] = {value, n};
  }
  return cfg;
}

Config read_config(const std::string& path) { return parse_config(read_text(path), path); }

ScenarioConfig scenario_from_config(const Config& cfg, const std::string& source,
                                    ScenarioConfig c) {
  for (const auto& [key, entry] : cfg) {
    const std::string where =
        entry.line > 0 ? source + ":" + std::to_string(entry.line) + ": " : source + ": ";
    const std::string& v = entry.value;
    double d = 0.0;
    long long i = 0;
    auto need_double = [&] {
      if (!parse_double(v, d)) fail(ErrorKind::kParse, where + "'" + key + "' needs a number, got '" + v + "'");
      return d;
    };
    auto need_int = [&] {
      if (!parse_int(v, i)) fail(ErrorKind::kParse, where + "'" + key + "' needs an integer, got '" + v + "'");
      return i;
    };
    if (key == "kind") {
      std::string name = v;
      // error_scenario1 / error_scenario(1) select the scenario as well.
      if (name.rfind("error_scenario", 0) == 0 && name.size() > 14) {
        std::string rest = name.substr(14);
        rest.erase(std::remove_if(rest.begin(), rest.end(),
                                  [](char ch) { return ch == '(' || ch == ')'; }),
                   rest.end());
        if (!parse_int(rest, i)) fail(ErrorKind::kParse, where + "unknown kind '" + v + "'");
        c.error_scenario = static_cast<int>(i);
        name = "error_scenario";
      }
      try {
        c.kind = scenario_kind_from_string(name);
      } catch (const Error& e) {
        fail(ErrorKind::kParse, where + e.what());
      }
    } else if (key == "T") {
      c.length = static_cast<int>(need_int());
    } else if (key == "sd") {
      c.sd = need_double();
    } else if (key == "missing_ratio") {
      c.missing_ratio = need_double();
    } else if (key == "seed") {
      if (!parse_int(v, i) || i < 0) fail(ErrorKind::kParse, where + "'seed' needs a non-negative integer");
      c.seed = static_cast<std::uint64_t>(i);
    } else if (key == "error_scenario") {
      c.error_scenario = static_cast<int>(need_int());
    } else if (key == "alpha") {
      c.radar_alpha = need_double();
    } else if (key == "jitter_var") {
      c.radar_jitter_var = need_double();
    } else if (key == "qn") {
      c.qn = static_cast<int>(need_int());
    } else if (key == "stay") {
      c.switch_stay = need_double();
    } else {
      fail(ErrorKind::kParse, where + "unknown key '" + key + "'");
    }
  }
  try {
    c.check();
  } catch (const Error& e) {
    fail(ErrorKind::kParse, source + ": " + e.what());
  }
  return c;
}

std::string params_to_json(const ModelParams& p) { return params_json(p).dump(2); }

ModelParams params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("invalid JSON: ") + e.what());
  }
  if (j.contains("params")) j = j["params"];
  ModelParams p = params_from(j);
  const auto problems = validate(p);
  if (!problems.empty()) fail(ErrorKind::kInvalidArgument, "invalid parameters: " + problems.front());
  return p;
}

std::string scenario_to_json(const ScenarioConfig& c) { return scenario_json(c).dump(2); }

std::string result_to_json(const InferenceResult& r) {
  json j;
  j["algorithm"] = to_string(r.algorithm);
  j["seed"] = r.seed;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["objective_trace"] = r.objective_trace;
  j["final_objective"] = r.objective_trace.empty() ? 0.0 : r.objective_trace.back();
  j["params"] = params_json(r.params);
  j["decoded_source"] = r.decoded_source;
  j["decoded_states"] = r.decoded_states;
  j["version"] = version();
  return j.dump(2);
}

std::string dataset_meta_json(const ScenarioConfig& config, const Dataset& data) {
  json j;
  j["config"] = scenario_json(config);
  j["seed"] = config.seed;
  j["version"] = version();
  j["T"] = data.obs.length();
  j["D"] = data.obs.dim();
  if (data.has_params) j["params"] = params_json(data.params);
  return j.dump(2);
}

void write_dataset(const std::string& path, const Dataset& d, const std::string& meta) {
  const int T = d.obs.length();
  const int D = d.obs.dim();
  const bool labelled = d.truth.length() == T && T > 0;
  const int M = labelled ? static_cast<int>(d.truth.states.size()) : 0;
  std::ofstream out = open_out(path);
  out << "t";
  for (int k = 0; k < D; ++k) out << ",p" << k + 1;
  if (labelled) {
    out << ",z";
    for (int m = 0; m < M; ++m) out << ",s" << m + 1;
  }
  out << "\n";
  for (int t = 0; t < T; ++t) {
    out << t;
    for (int k = 0; k < D; ++k) out << "," << fmt(d.obs.values(t, k));
    if (labelled) {
      out << "," << d.truth.switch_labels[t];
      for (int m = 0; m < M; ++m) out << "," << d.truth.states[m][t];
    }
    out << "\n";
  }
  if (!out) fail(ErrorKind::kIo, "write failed for '" + path + "'");
  if (!meta.empty()) write_text(path + ".meta.json", meta);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kParse, path + ": empty file");
  const std::vector<std::string> header = split(trim(line), ',');
  std::vector<int> pcol, scol;
  int zcol = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const std::string& h = header[i];
    if (h == "z") zcol = i;
    else if (h.size() > 1 && h[0] == 'p') pcol.push_back(i);
    else if (h.size() > 1 && h[0] == 's') scol.push_back(i);
    else if (h != "t") fail(ErrorKind::kParse, path + ":1: unknown column '" + h + "'");
  }
  if (pcol.empty()) fail(ErrorKind::kParse, path + ":1: no observation columns (p1..pD)");
  if (!scol.empty() && zcol < 0)
    fail(ErrorKind::kParse, path + ":1: state columns need a 'z' column");

  std::vector<std::vector<double>> rows;
  Dataset d;
  d.truth.states.resize(scol.size());
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != header.size())
      fail(ErrorKind::kParse, path + ":" + std::to_string(n) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
    std::vector<double> row;
    for (int c : pcol) {
      double v = 0.0;
      if (!parse_double(f[c], v))
        fail(ErrorKind::kParse, path + ":" + std::to_string(n) + ": bad number '" + f[c] + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
    auto label = [&](int c) {
      long long v = 0;
      if (!parse_int(f[c], v) || v < 0)
        fail(ErrorKind::kParse, path + ":" + std::to_string(n) + ": bad label '" + f[c] + "'");
      return static_cast<int>(v);
    };
    if (zcol >= 0) d.truth.switch_labels.push_back(label(zcol));
    for (std::size_t m = 0; m < scol.size(); ++m) d.truth.states[m].push_back(label(scol[m]));
  }
  if (rows.empty()) fail(ErrorKind::kParse, path + ": no observations");
  d.obs.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pcol.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t k = 0; k < pcol.size(); ++k)
      d.obs.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = rows[t][k];

  std::ifstream meta(path + ".meta.json");
  if (meta) {
    std::stringstream ss;
    ss << meta.rdbuf();
    try {
      const json j = json::parse(ss.str());
      if (j.contains("params")) {
        d.params = params_from(j["params"]);
        d.has_params = validate(d.params).empty();
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::kParse, path + ".meta.json: " + e.what());
    }
  }
  return d;
}

Mat read_motion_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read '" + path + "'");
  std::vector<std::array<double, 3>> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 3)
      fail(ErrorKind::kParse, path + ": row " + std::to_string(n) + " has " +
                                  std::to_string(f.size()) + " columns, expected 3");
    std::array<double, 3> r{};
    bool numeric = true;
    for (int k = 0; k < 3; ++k) numeric = numeric && parse_double(f[k], r[k]);
    if (!numeric) {
      if (n == 1 && rows.empty()) continue;  // header
      fail(ErrorKind::kParse, path + ": row " + std::to_string(n) + " is not numeric");
    }
    rows.push_back(r);
  }
  if (rows.empty()) fail(ErrorKind::kParse, path + ": no samples");
  Mat m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < 3; ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][k];
  return m;
}

void write_labels_csv(const std::string& path, const std::vector<int>& source,
                      const std::vector<std::vector<int>>& states) {
  std::ofstream out = open_out(path);
  out << "t,z";
  for (std::size_t m = 0; m < states.size(); ++m) out << ",s" << m + 1;
  out << "\n";
  for (std::size_t t = 0; t < source.size(); ++t) {
    out << t << "," << source[t];
    for (const auto& s : states) out << "," << s.at(t);
    out << "\n";
  }
  if (!out) fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

void write_trace_csv(const std::string& path, const std::vector<double>& trace,
                     const std::string& column) {
  std::ofstream out = open_out(path);
  out << "iteration," << column << "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << "," << fmt(trace[i]) << "\n";
  if (!out) fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
  if (!out) fail(ErrorKind::kIo, "write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ihmp
