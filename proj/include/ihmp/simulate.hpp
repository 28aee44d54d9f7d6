#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ihmp/model.hpp"
#include "ihmp/rng.hpp"

namespace ihmp {

enum class ScenarioKind {
  kGeneric,
  kTable1Disjoint,
  kTable1NonDisjoint,
  kErrorScenario,
  kRadar,
  kQuantizedStreams,
};

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

/// Burn-in steps discarded before the retained samples of a preset scenario.
inline constexpr int kBurnIn = 1000;

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kTable1Disjoint;
  int length = 900;             // T
  double sd = 0.1;              // emission standard deviation
  double missing_ratio = 0.0;   // in [0, 1)
  std::uint64_t seed = 1;
  int error_scenario = 1;       // 1..3 for kErrorScenario
  double radar_alpha = 15.0;    // us
  double radar_jitter_var = 0.8;  // us^2
  int qn = 2;                   // quantization levels for kQuantizedStreams
  double switch_stay = 0.1;     // beta, diagonal of the preset transitions

  /// Throws kInvalidArgument when a field is out of range.
  void check() const;
};

struct Dataset {
  ObservationSequence obs;
  LatentTrajectory truth;
  ModelParams params;  // generating parameters (approximate for radar/motion)
  bool has_params = false;
};

/// Draws T steps of the generative model after discarding `burn_in` steps.
/// The covariance may be positive semi-definite (zero noise is allowed).
Dataset sample_ihmp(const ModelParams& params, int length, std::uint64_t seed,
                    int burn_in = 0);

/// Generating parameters of the preset scenarios (D = 1).
ModelParams table1_params(bool disjoint, double sd, double stay = 0.1);
ModelParams error_scenario_params(int scenario, double sd);

Dataset make_scenario(const ScenarioConfig& config);

/// Removes floor(ratio * T) positions chosen uniformly without replacement.
Dataset apply_missing(const Dataset& data, double ratio, std::uint64_t seed);

/// Two identical radars alternating RF symbols, merged by time of arrival.
Dataset make_radar_scenario(double alpha, double jitter_var, int length,
                            std::uint64_t seed);

/// Result of quantizing two 3-axis streams and interleaving them.
struct QuantizedInterleave {
  Dataset data;
  std::vector<Vec> codebooks;  // per stream, ascending level centers
};

/// 1-D Lloyd k-means with quantile initialization. Returns ascending centers.
Vec kmeans_1d(const std::vector<double>& values, int levels, int max_iter = 100);

/// Maps each 3-axis sample to its Euclidean norm, quantizes each stream to
/// `qn` levels and interleaves them with a fair coin per step.
QuantizedInterleave quantize_and_interleave(const Mat& stream_a,
                                            const Mat& stream_b, int qn,
                                            std::uint64_t seed);

/// Synthetic accelerometer-like 3-axis streams (walking / skipping cadence),
/// used when no recorded motion data is supplied.
Mat synthetic_motion_stream(int length, bool skipping, std::uint64_t seed);

}  // namespace ihmp
