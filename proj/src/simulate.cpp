#include "ihmp/simulate.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

namespace ihmp {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kGeneric: return "generic";
    case ScenarioKind::kTable1Disjoint: return "table1_disjoint";
    case ScenarioKind::kTable1NonDisjoint: return "table1_nondisjoint";
    case ScenarioKind::kErrorScenario: return "error_scenario";
    case ScenarioKind::kRadar: return "radar";
    case ScenarioKind::kQuantizedStreams: return "quantized_streams";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (auto k : {ScenarioKind::kGeneric, ScenarioKind::kTable1Disjoint,
                 ScenarioKind::kTable1NonDisjoint, ScenarioKind::kErrorScenario,
                 ScenarioKind::kRadar, ScenarioKind::kQuantizedStreams})
    if (to_string(k) == name) return k;
  fail(ErrorKind::kInvalidArgument, "unknown scenario kind '" + name + "'");
}

void ScenarioConfig::check() const {
  require(length >= 1, "T must be >= 1");
  require(sd >= 0.0, "sd must be >= 0");
  require(missing_ratio >= 0.0 && missing_ratio < 1.0,
          "missing_ratio must be in [0, 1)");
  if (kind == ScenarioKind::kErrorScenario)
    require(error_scenario >= 1 && error_scenario <= 3,
            "error scenario must be 1, 2 or 3");
  if (kind == ScenarioKind::kRadar) {
    require(radar_alpha >= 0.0, "alpha must be >= 0");
    require(radar_jitter_var >= 0.0, "jitter variance must be >= 0");
  }
  if (kind == ScenarioKind::kQuantizedStreams) require(qn >= 2, "QN must be >= 2");
  require(switch_stay > 0.0 && switch_stay < 1.0, "beta must be in (0, 1)");
}

namespace {

// Square root of a PSD matrix (zero eigenvalues allowed).
Mat psd_sqrt(const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cov + cov.transpose()));
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

void check_samplable(const ModelParams& p) {
  // Everything validate() checks except strict positive-definiteness.
  ModelParams probe = p;
  probe.shared_cov = Mat::Identity(p.obs_dim, p.obs_dim);
  ensure_valid(probe);
  require(p.shared_cov.rows() == p.obs_dim && p.shared_cov.cols() == p.obs_dim,
          "Sigma must be DxD");
  Eigen::SelfAdjointEigenSolver<Mat> es(p.shared_cov, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-12,
          "Sigma must be positive semi-definite");
}

Mat symmetric_two_state(double stay) {
  Mat a(2, 2);
  a << stay, 1.0 - stay, 1.0 - stay, stay;
  return a;
}

}  // namespace

Dataset sample_ihmp(const ModelParams& p, int length, std::uint64_t seed,
                    int burn_in) {
  check_samplable(p);
  require(length >= 1, "T must be >= 1");
  require(burn_in >= 0, "burn-in must be >= 0");
  const int M = p.num_chains();
  Rng rng(seed);
  const Mat noise = psd_sqrt(p.shared_cov);

  int z = rng.categorical(p.switch_init);
  std::vector<int> s(M);
  for (int m = 0; m < M; ++m) s[m] = rng.categorical(p.chain_init[m]);

  auto step = [&]() {
    z = rng.categorical(p.switch_trans.row(z).transpose());
    s[z] = rng.categorical(p.chain_trans[z].row(s[z]).transpose());
  };
  for (int i = 0; i < burn_in; ++i) step();

  Dataset d;
  d.params = p;
  d.has_params = true;
  d.obs.values.resize(length, p.obs_dim);
  d.truth.switch_labels.resize(length);
  d.truth.states.assign(M, std::vector<int>(length));
  Vec eps(p.obs_dim);
  for (int t = 0; t < length; ++t) {
    if (t > 0 || burn_in > 0) step();
    d.truth.switch_labels[t] = z;
    for (int m = 0; m < M; ++m) d.truth.states[m][t] = s[m];
    for (int k = 0; k < p.obs_dim; ++k) eps(k) = rng.normal();
    d.obs.values.row(t) =
        (p.means[z].row(s[z]).transpose() + noise * eps).transpose();
  }
  return d;
}

ModelParams table1_params(bool disjoint, double sd, double stay) {
  ModelParams p = ModelParams::uniform({2, 2, 2}, 1);
  const double off = (1.0 - stay) / 2.0;
  p.switch_trans = Mat::Constant(3, 3, off);
  p.switch_trans.diagonal().setConstant(stay);
  const double mu[3][2] = {{disjoint ? 1.0 : 1.0, disjoint ? 2.0 : 4.0},
                           {4.0, 5.0},
                           {7.0, 8.0}};
  for (int m = 0; m < 3; ++m) {
    p.chain_trans[m] = symmetric_two_state(stay);
    p.means[m] << mu[m][0], mu[m][1];
  }
  p.shared_cov(0, 0) = sd * sd;
  return p;
}

ModelParams error_scenario_params(int scenario, double sd) {
  require(scenario >= 1 && scenario <= 3, "error scenario must be 1, 2 or 3");
  // (mu_1^1, mu_2^1 | mu_1^2, mu_2^2): separated, interleaved, nested.
  static const double kMeans[3][4] = {
      {1, 2, 3, 4}, {1, 3, 2, 4}, {1, 4, 2, 3}};
  const double* mu = kMeans[scenario - 1];
  ModelParams p = ModelParams::uniform({2, 2}, 1);
  p.switch_trans = symmetric_two_state(0.1);
  for (int m = 0; m < 2; ++m) {
    p.chain_trans[m] = symmetric_two_state(0.1);
    p.means[m] << mu[2 * m], mu[2 * m + 1];
  }
  p.shared_cov(0, 0) = sd * sd;
  return p;
}

Dataset make_scenario(const ScenarioConfig& c) {
  c.check();
  Dataset d;
  switch (c.kind) {
    case ScenarioKind::kTable1Disjoint:
    case ScenarioKind::kTable1NonDisjoint: {
      const ModelParams p = table1_params(
          c.kind == ScenarioKind::kTable1Disjoint, c.sd, c.switch_stay);
      d = sample_ihmp(p, c.length, c.seed, kBurnIn);
      break;
    }
    case ScenarioKind::kErrorScenario:
      d = sample_ihmp(error_scenario_params(c.error_scenario, c.sd), c.length,
                      c.seed, kBurnIn);
      break;
    case ScenarioKind::kRadar:
      d = make_radar_scenario(c.radar_alpha, c.radar_jitter_var, c.length,
                              c.seed);
      break;
    case ScenarioKind::kQuantizedStreams: {
      const Rng rng(c.seed);
      const int half = (c.length + 1) / 2;
      const Mat a = synthetic_motion_stream(half, false, rng.split(1).seed());
      const Mat b =
          synthetic_motion_stream(c.length - half, true, rng.split(2).seed());
      d = quantize_and_interleave(a, b, c.qn, rng.split(3).seed()).data;
      break;
    }
    case ScenarioKind::kGeneric:
      fail(ErrorKind::kInvalidArgument,
           "generic scenarios need explicit model parameters");
  }
  if (c.missing_ratio > 0.0)
    d = apply_missing(d, c.missing_ratio, Rng(c.seed).split(99).seed());
  return d;
}

Dataset apply_missing(const Dataset& data, double ratio, std::uint64_t seed) {
  require(ratio >= 0.0 && ratio < 1.0, "missing ratio must be in [0, 1)");
  const int T = data.obs.length();
  const int drop = static_cast<int>(std::floor(ratio * T));
  if (drop == 0) return data;

  std::vector<int> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  std::vector<char> keep(T, 1);
  for (int i = 0; i < drop; ++i) keep[idx[i]] = 0;

  Dataset out;
  out.params = data.params;
  out.has_params = data.has_params;
  const int n = T - drop;
  const int M = static_cast<int>(data.truth.states.size());
  out.obs.values.resize(n, data.obs.dim());
  out.truth.switch_labels.reserve(n);
  out.truth.states.assign(M, {});
  int r = 0;
  for (int t = 0; t < T; ++t) {
    if (!keep[t]) continue;
    out.obs.values.row(r++) = data.obs.values.row(t);
    out.truth.switch_labels.push_back(data.truth.switch_labels[t]);
    for (int m = 0; m < M; ++m) out.truth.states[m].push_back(data.truth.states[m][t]);
  }
  return out;
}

Dataset make_radar_scenario(double alpha, double jitter_var, int length,
                            std::uint64_t seed) {
  require(alpha >= 0.0, "alpha must be >= 0");
  require(jitter_var >= 0.0, "jitter variance must be >= 0");
  require(length >= 1, "T must be >= 1");
  constexpr double kRf[2] = {1245.0, 1230.0};  // kHz
  constexpr double kRfSd = 1.0;                // kHz
  constexpr double kPri = 50.0;                // us

  struct Pulse {
    double toa;
    int radar;
    int symbol;
  };
  std::vector<Pulse> pulses;
  pulses.reserve(2 * static_cast<std::size_t>(length));
  const Rng root(seed);
  const double jitter_sd = std::sqrt(jitter_var);
  for (int r = 0; r < 2; ++r) {
    Rng rng = root.split(static_cast<std::uint64_t>(r));
    // Each pulse is jittered about its nominal slot phase + k * PRI, so the
    // jitter does not accumulate into a drift between the radars.
    const double phase = r == 0 ? rng.uniform(0.0, 10.0) : rng.uniform(alpha, alpha + 10.0);
    int sym = rng.uniform_int(0, 1);
    for (int k = 0; k < length; ++k) {
      pulses.push_back({phase + k * kPri + jitter_sd * rng.normal(), r, sym});
      sym = 1 - sym;
    }
  }
  std::stable_sort(pulses.begin(), pulses.end(),
                   [](const Pulse& a, const Pulse& b) { return a.toa < b.toa; });

  Rng noise = root.split(7);
  Dataset d;
  d.obs.values.resize(length, 1);
  d.truth.switch_labels.resize(length);
  d.truth.states.assign(2, std::vector<int>(length, 0));
  int last[2] = {0, 0};
  bool seen[2] = {false, false};
  for (int t = 0; t < length; ++t) {
    const Pulse& p = pulses[t];
    d.obs.values(t, 0) = kRf[p.symbol] + kRfSd * noise.normal();
    d.truth.switch_labels[t] = p.radar;
    last[p.radar] = p.symbol;
    if (!seen[p.radar]) {
      // The idle radar's state before its first pulse is its first symbol.
      for (int u = 0; u < t; ++u) d.truth.states[p.radar][u] = p.symbol;
      seen[p.radar] = true;
    }
    for (int r = 0; r < 2; ++r) d.truth.states[r][t] = last[r];
  }
  return d;
}

Vec kmeans_1d(const std::vector<double>& values, int levels, int max_iter) {
  require(levels >= 1, "need at least one level");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> uniq = sorted;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (static_cast<int>(uniq.size()) < levels)
    fail(ErrorKind::kInvalidArgument,
         "QN=" + std::to_string(levels) + " exceeds the number of distinct values (" +
             std::to_string(uniq.size()) + ")");

  const auto n = sorted.size();
  std::vector<double> centers(levels);
  for (int i = 0; i < levels; ++i) {
    const auto pos = static_cast<std::size_t>((i + 0.5) / levels * static_cast<double>(n));
    centers[i] = sorted[std::min(pos, n - 1)];
  }
  if (std::set<double>(centers.begin(), centers.end()).size() !=
      static_cast<std::size_t>(levels)) {
    const auto u = uniq.size();
    for (int i = 0; i < levels; ++i) {
      const auto pos = static_cast<std::size_t>((i + 0.5) / levels * static_cast<double>(u));
      centers[i] = uniq[std::min(pos, u - 1)];
    }
  }

  std::vector<double> sum(levels);
  std::vector<int> cnt(levels);
  for (int it = 0; it < max_iter; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (double v : sorted) {
      int best = 0;
      for (int c = 1; c < levels; ++c)
        if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
      sum[best] += v;
      ++cnt[best];
    }
    bool moved = false;
    for (int c = 0; c < levels; ++c) {
      if (cnt[c] == 0) continue;
      const double nc = sum[c] / cnt[c];
      if (nc != centers[c]) moved = true;
      centers[c] = nc;
    }
    if (!moved) break;
  }
  std::sort(centers.begin(), centers.end());
  Vec out(levels);
  for (int c = 0; c < levels; ++c) out(c) = centers[c];
  return out;
}

namespace {

int nearest_level(const Vec& centers, double v) {
  Eigen::Index best = 0;
  (centers.array() - v).abs().minCoeff(&best);
  return static_cast<int>(best);
}

std::vector<double> row_norms(const Mat& stream) {
  require(stream.cols() == 3, "motion streams need three axis columns");
  require(stream.rows() >= 1, "motion streams must be non-empty");
  std::vector<double> out(static_cast<std::size_t>(stream.rows()));
  for (Eigen::Index r = 0; r < stream.rows(); ++r)
    out[static_cast<std::size_t>(r)] = stream.row(r).norm();
  return out;
}

}  // namespace

QuantizedInterleave quantize_and_interleave(const Mat& stream_a,
                                            const Mat& stream_b, int qn,
                                            std::uint64_t seed) {
  require(qn >= 2, "QN must be >= 2");
  const std::vector<double> norms[2] = {row_norms(stream_a), row_norms(stream_b)};
  QuantizedInterleave out;
  for (const auto& n : norms) out.codebooks.push_back(kmeans_1d(n, qn));

  const int na = static_cast<int>(norms[0].size());
  const int nb = static_cast<int>(norms[1].size());
  const int T = na + nb;
  Dataset& d = out.data;
  d.obs.values.resize(T, 1);
  d.truth.switch_labels.resize(T);
  d.truth.states.assign(2, std::vector<int>(T, 0));

  Rng rng(seed);
  std::size_t pos[2] = {0, 0};
  int last[2] = {nearest_level(out.codebooks[0], norms[0][0]),
                 nearest_level(out.codebooks[1], norms[1][0])};
  for (int t = 0; t < T; ++t) {
    int src;
    if (pos[0] == norms[0].size()) src = 1;
    else if (pos[1] == norms[1].size()) src = 0;
    else src = rng.uniform() < 0.5 ? 0 : 1;
    const double v = norms[src][pos[src]++];
    const int level = nearest_level(out.codebooks[src], v);
    d.obs.values(t, 0) = out.codebooks[src](level);
    d.truth.switch_labels[t] = src;
    last[src] = level;
    d.truth.states[0][t] = last[0];
    d.truth.states[1][t] = last[1];
  }
  return out;
}

Mat synthetic_motion_stream(int length, bool skipping, std::uint64_t seed) {
  require(length >= 1, "stream length must be >= 1");
  Rng rng(seed);
  constexpr double kRate = 100.0;  // Hz
  const double freq = skipping ? 2.6 : 1.8;
  const double amp = skipping ? 0.9 : 0.35;
  const double base = 1.0;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Vec dir(3);
  for (int k = 0; k < 3; ++k) dir(k) = rng.normal();
  dir.normalize();
  Mat out(length, 3);
  for (int i = 0; i < length; ++i) {
    const double tt = i / kRate;
    double mag = base + amp * std::sin(2.0 * std::numbers::pi * freq * tt + phase);
    if (skipping) mag += 0.4 * std::max(0.0, std::sin(4.0 * std::numbers::pi * freq * tt));
    mag += 0.05 * rng.normal();
    Vec v = mag * dir;
    for (int k = 0; k < 3; ++k) v(k) += 0.02 * rng.normal();
    out.row(i) = v.transpose();
  }
  return out;
}

}  // namespace ihmp
