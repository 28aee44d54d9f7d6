#pragma once

#include <map>
#include <string>
#include <vector>

#include "ihmp/inference.hpp"
#include "ihmp/simulate.hpp"

namespace ihmp {

/// Library version string.
const char* version();

// ---- key = value configuration -----------------------------------------------
//
// One `key = value` pair per line; `#` starts a comment; blank lines are
// ignored. Keys are case-sensitive and may appear once.

struct ConfigEntry {
  std::string value;
  int line = 0;
};
using Config = std::map<std::string, ConfigEntry>;

Config parse_config(const std::string& text, const std::string& source = "<config>");
Config read_config(const std::string& path);

/// Applies recognized scenario keys (kind, T, sd, missing_ratio, seed,
/// error_scenario, alpha, jitter_var, qn, stay) to `base`. Unknown keys and
/// malformed values raise kParse with the line number.
ScenarioConfig scenario_from_config(const Config& cfg, const std::string& source,
                                    ScenarioConfig base = {});

// ---- JSON documents ----------------------------------------------------------

std::string params_to_json(const ModelParams& params);
ModelParams params_from_json(const std::string& text);

std::string scenario_to_json(const ScenarioConfig& config);

/// Parameters, marginals summary, decoded labels and trace of a fit.
std::string result_to_json(const InferenceResult& result);

// ---- dataset files -------------------------------------------------------------
//
// CSV header: t,p1..pD[,z,s1..sM]. `t` is 0-based, `z` the source label and
// `s<m>` the state of chain m (all 0-based). The sidecar `<path>.meta.json`
// holds the generating config, seed, library version and, when known, the
// generating parameters.

void write_dataset(const std::string& path, const Dataset& data,
                   const std::string& meta_json);
Dataset read_dataset(const std::string& path);

/// Builds the sidecar document for a simulated dataset.
std::string dataset_meta_json(const ScenarioConfig& config, const Dataset& data);

/// Reads a 3-axis motion recording: three numeric columns per row, an
/// optional non-numeric header line.
Mat read_motion_csv(const std::string& path);

// ---- fit outputs -----------------------------------------------------------------

/// t,z[,s1..sM] labels CSV.
void write_labels_csv(const std::string& path, const std::vector<int>& source,
                      const std::vector<std::vector<int>>& states = {});
/// iteration,objective CSV.
void write_trace_csv(const std::string& path, const std::vector<double>& trace,
                     const std::string& column = "objective");

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace ihmp
