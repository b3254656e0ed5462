#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nltsa/fft.hpp"
#include "nltsa/histogram.hpp"
#include "nltsa/parallel.hpp"
#include "nltsa/random.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

/// Statistic-per-lag curve with an advisory selection attached.  The full
/// profile is always populated; `selected` is empty when the criterion found
/// nothing, with `criterion` explaining either way.
struct LagProfile {
  IndexVec lags;
  Eigen::VectorXd values;
  std::optional<Index> selected;
  std::string criterion;
};

/// Delay set for x>(t) = (x(t), x(t-tau_1), ..., x(t-tau_{m-1})).
/// Empty lags means m = 1 (the series itself).
struct EmbeddingSpec {
  std::vector<Index> lags;

  Index dimension() const { return static_cast<Index>(lags.size()) + 1; }
  Index max_lag() const { return lags.empty() ? 0 : lags.back(); }
};

/// Uniform delays tau, 2*tau, ..., (m-1)*tau.
inline EmbeddingSpec uniform_spec(Index tau, Index m) {
  if (m < 1) throw std::invalid_argument("uniform_spec: m must be >= 1");
  if (m > 1 && tau < 1) throw std::invalid_argument("uniform_spec: tau must be >= 1");
  EmbeddingSpec spec;
  for (Index j = 1; j < m; ++j) spec.lags.push_back(j * tau);
  return spec;
}

namespace detail {

inline void validate_spec(const EmbeddingSpec& spec) {
  Index prev = 0;
  for (Index lag : spec.lags) {
    if (lag <= prev)
      throw std::invalid_argument("EmbeddingSpec: lags must be positive and strictly increasing");
    prev = lag;
  }
}

/// Brute-force nearest neighbour of each row, skipping |time(i)-time(j)| <= theiler.
/// Search is limited to the first `limit` rows (pass pts.rows() for all).
/// Rows with no eligible candidate get -1.  Ties resolve to the smallest index.
inline std::vector<Index> nearest_neighbors(const Eigen::MatrixXd& pts,
                                            const std::vector<Index>& time_index,
                                            Index theiler, Index limit) {
  const Index n = limit;
  std::vector<Index> nn(static_cast<std::size_t>(n), -1);
  parallel_chunks(n, [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      Index best_j = -1;
      for (Index j = 0; j < n; ++j) {
        if (std::abs(time_index[static_cast<std::size_t>(i)] -
                     time_index[static_cast<std::size_t>(j)]) <= theiler)
          continue;
        double d = (pts.row(i) - pts.row(j)).norm();
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      nn[static_cast<std::size_t>(i)] = best_j;
    }
  });
  return nn;
}

/// P(Bin(n, 1/2) >= k), exact.
inline double binomial_upper_tail_half(Index n, Index k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  long double term = std::pow(0.5L, static_cast<long double>(n));  // C(n,0)/2^n
  long double tail = 0.0L;
  for (Index j = 0; j <= n; ++j) {
    if (j >= k) tail += term;
    term *= static_cast<long double>(n - j) / static_cast<long double>(j + 1);
  }
  return static_cast<double>(tail);
}

}  // namespace detail

/// Delay-coordinate reconstruction.  One point per t in [max lag, N-1];
/// the point at t is (x(t), x(t-tau_1), ..., x(t-tau_{m-1})).
inline PointCloud delay_embed(const TimeSeries& series, const EmbeddingSpec& spec) {
  detail::validate_spec(spec);
  const Index n = series.size();
  const Index lag_max = spec.max_lag();
  if (lag_max >= n) throw std::invalid_argument("delay_embed: lag exceeds series length");
  const Index m = spec.dimension();
  PointCloud cloud;
  cloud.dt = series.dt;
  cloud.points.resize(n - lag_max, m);
  cloud.time_index.resize(static_cast<std::size_t>(n - lag_max));
  for (Index t = lag_max; t < n; ++t) {
    const Index row = t - lag_max;
    cloud.points(row, 0) = series.values[t];
    for (Index j = 0; j < m - 1; ++j)
      cloud.points(row, j + 1) = series.values[t - spec.lags[static_cast<std::size_t>(j)]];
    cloud.time_index[static_cast<std::size_t>(row)] = t;
  }
  return cloud;
}

enum class AcfCriterion { first_zero, first_min, first_below_inv_e };

/// Mean-removed autocorrelation, normalized so R(0) = 1, for tau = 0..tau_max.
/// Selection is advisory: first zero crossing, first strict local minimum, or
/// first drop below 1/e.
inline LagProfile autocorrelation(const TimeSeries& series, Index tau_max,
                                  AcfCriterion criterion = AcfCriterion::first_zero) {
  const Index n = series.size();
  if (n < 2) throw std::invalid_argument("autocorrelation: series too short");
  if (tau_max >= n) throw std::invalid_argument("autocorrelation: tau_max must be < length");
  if (tau_max < 0) throw std::invalid_argument("autocorrelation: tau_max must be >= 0");
  const double mean = series.values.mean();
  Eigen::VectorXd y = series.values.array() - mean;
  const double denom = y.squaredNorm();
  if (denom <= 0.0) throw std::invalid_argument("autocorrelation: constant series");

  LagProfile profile;
  profile.lags.resize(tau_max + 1);
  profile.values.resize(tau_max + 1);
  for (Index tau = 0; tau <= tau_max; ++tau) {
    profile.lags[tau] = tau;
    profile.values[tau] = y.head(n - tau).dot(y.tail(n - tau)) / denom;
  }

  const auto& r = profile.values;
  switch (criterion) {
    case AcfCriterion::first_zero:
      profile.criterion = "first_zero";
      for (Index tau = 1; tau <= tau_max; ++tau)
        if (r[tau] <= 0.0) {
          profile.selected = tau;
          break;
        }
      break;
    case AcfCriterion::first_min:
      profile.criterion = "first_min";
      for (Index tau = 1; tau + 1 <= tau_max; ++tau)
        if (r[tau] < r[tau - 1] && r[tau] < r[tau + 1]) {
          profile.selected = tau;
          break;
        }
      break;
    case AcfCriterion::first_below_inv_e:
      profile.criterion = "first_below_1/e";
      for (Index tau = 1; tau <= tau_max; ++tau)
        if (r[tau] < 1.0 / std::numbers::e) {
          profile.selected = tau;
          break;
        }
      break;
  }
  if (!profile.selected) profile.criterion += ": none found";
  return profile;
}

namespace detail {

/// First strict local minimum over integer abscissa; a plateau of equal values
/// counts with its smallest index.  Returns -1 if there is none.
inline Index first_local_minimum(const Eigen::VectorXd& v) {
  const Index n = v.size();
  Index i = 1;
  while (i < n) {
    if (v[i] < v[i - 1]) {
      Index start = i;
      while (i + 1 < n && v[i + 1] == v[i]) ++i;
      if (i + 1 < n && v[i + 1] > v[i]) return start;
      ++i;
    } else {
      ++i;
    }
  }
  return -1;
}

}  // namespace detail

/// Auto mutual information I(x(t); x(t+tau)) in bits for tau = 0..tau_max,
/// from an n_bins x n_bins joint histogram of the min-max rescaled series.
/// Selected lag = first strict local minimum (plateaus take the smallest lag);
/// absence is reported in `criterion` rather than guessed.
inline LagProfile auto_mutual_information(const TimeSeries& series, Index tau_max,
                                          Index n_bins = 64) {
  const Index n = series.size();
  if (n_bins < 2) throw std::invalid_argument("auto_mutual_information: n_bins must be >= 2");
  if (tau_max >= n) throw std::invalid_argument("auto_mutual_information: tau_max must be < length");
  const double lo = series.values.minCoeff();
  const double hi = series.values.maxCoeff();
  if (!(hi > lo)) throw std::invalid_argument("auto_mutual_information: constant series");
  // Rescale to [0,1] first so the statistic is invariant under affine maps.
  Eigen::VectorXd u = (series.values.array() - lo) / (hi - lo);
  std::vector<Index> bin(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t)
    bin[static_cast<std::size_t>(t)] =
        std::min<Index>(static_cast<Index>(u[t] * static_cast<double>(n_bins)), n_bins - 1);

  LagProfile profile;
  profile.lags.resize(tau_max + 1);
  profile.values.resize(tau_max + 1);
  std::vector<double> joint(static_cast<std::size_t>(n_bins * n_bins));
  std::vector<double> px(static_cast<std::size_t>(n_bins)), py(static_cast<std::size_t>(n_bins));
  for (Index tau = 0; tau <= tau_max; ++tau) {
    std::fill(joint.begin(), joint.end(), 0.0);
    std::fill(px.begin(), px.end(), 0.0);
    std::fill(py.begin(), py.end(), 0.0);
    const Index pairs = n - tau;
    for (Index t = 0; t < pairs; ++t) {
      const Index a = bin[static_cast<std::size_t>(t)];
      const Index b = bin[static_cast<std::size_t>(t + tau)];
      joint[static_cast<std::size_t>(a * n_bins + b)] += 1.0;
      px[static_cast<std::size_t>(a)] += 1.0;
      py[static_cast<std::size_t>(b)] += 1.0;
    }
    double info = 0.0;
    for (Index a = 0; a < n_bins; ++a)
      for (Index b = 0; b < n_bins; ++b) {
        const double pj = joint[static_cast<std::size_t>(a * n_bins + b)];
        if (pj <= 0.0) continue;
        info += pj * std::log2(pj * static_cast<double>(pairs) /
                               (px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b)]));
      }
    profile.lags[tau] = tau;
    profile.values[tau] = info / static_cast<double>(pairs);
  }

  Index sel = detail::first_local_minimum(profile.values);
  if (sel >= 1) {
    profile.selected = sel;
    profile.criterion = "first_local_minimum";
  } else {
    profile.criterion = "first_local_minimum: none found";
  }
  return profile;
}

/// Quarter of the dominant spectral period: tau = round(P/4) with P the period
/// of the largest nonzero-frequency power peak.  Dominance is judged on a
/// block-averaged spectrum (raw periodogram ordinates fluctuate enough that a
/// lone bin of featureless noise would always clear a median test); the period
/// itself is read off the full-resolution peak.
inline Index quarter_period_lag(const TimeSeries& series) {
  const Index n = series.size();
  if (n < 16) throw std::invalid_argument("quarter_period_lag: series too short");

  const Index blocks = std::clamp<Index>(n / 256, 1, 64);
  const Index block_len = n / blocks;
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(block_len / 2 + 1);
  for (Index b = 0; b < blocks; ++b) {
    TimeSeries seg;
    seg.values = series.values.segment(b * block_len, block_len);
    avg += power_spectrum(seg.values);
  }
  const Index avg_half = avg.size() - 1;
  if (avg_half < 2) throw std::invalid_argument("quarter_period_lag: series too short");
  double avg_peak = avg.segment(1, avg_half).maxCoeff();
  std::vector<double> sorted(avg.data() + 1, avg.data() + avg_half + 1);
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(avg_peak > 2.0 * median))
    throw std::runtime_error("quarter_period_lag: no dominant peak");

  Eigen::VectorXd power = power_spectrum(series.values);
  const Index half = power.size() - 1;
  Index peak = 1;
  for (Index k = 2; k <= half; ++k)
    if (power[k] > power[peak]) peak = k;
  const double period = static_cast<double>(n) / static_cast<double>(peak);
  return std::max<Index>(1, static_cast<Index>(std::llround(period / 4.0)));
}

/// False-nearest-neighbour fraction for m = 1..m_max at uniform delay tau.
/// A neighbour pair (found in m dimensions with a Theiler window) is false when
/// the distance-growth ratio exceeds r_tol or the new-coordinate gap exceeds
/// a_tol times the RMS amplitude of the centred data.
inline LagProfile gfnn(const TimeSeries& series, Index tau, Index m_max, double r_tol = 15.0,
                       double a_tol = 2.0, Index theiler = 0) {
  const Index n = series.size();
  if (tau < 1) throw std::invalid_argument("gfnn: tau must be >= 1");
  if (m_max < 1) throw std::invalid_argument("gfnn: m_max must be >= 1");
  if (r_tol <= 0.0 || a_tol <= 0.0) throw std::invalid_argument("gfnn: tolerances must be > 0");
  const double mean = series.values.mean();
  const double r_amp = std::sqrt((series.values.array() - mean).square().mean());

  LagProfile profile;
  profile.lags.resize(m_max);
  profile.values.resize(m_max);
  profile.criterion = "fraction of false neighbours per dimension";
  for (Index m = 1; m <= m_max; ++m) {
    // Points must also exist in m+1 dimensions, so the usable range shrinks.
    const Index lag_top = m * tau;
    const Index n_pts = n - lag_top;
    if (n_pts < 2) throw std::invalid_argument("gfnn: fewer than 2 eligible points");
    Eigen::MatrixXd pts(n_pts, m);
    std::vector<Index> tidx(static_cast<std::size_t>(n_pts));
    for (Index row = 0; row < n_pts; ++row) {
      const Index t = row + lag_top;
      for (Index j = 0; j < m; ++j) pts(row, j) = series.values[t - j * tau];
      tidx[static_cast<std::size_t>(row)] = t;
    }
    auto nn = detail::nearest_neighbors(pts, tidx, theiler, n_pts);
    Index eligible = 0, false_count = 0;
    for (Index i = 0; i < n_pts; ++i) {
      const Index j = nn[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      ++eligible;
      const double dist_m = (pts.row(i) - pts.row(j)).norm();
      const Index ti = tidx[static_cast<std::size_t>(i)];
      const Index tj = tidx[static_cast<std::size_t>(j)];
      const double gap = std::abs(series.values[ti - lag_top] - series.values[tj - lag_top]);
      bool is_false = false;
      // The ratio test only fires when the new-coordinate gap is above numeric
      // dust; bit-level revisits of periodic records would otherwise divide
      // one rounding error by another.
      if (gap > 1e-12 * r_amp) {
        if (dist_m > 0.0) {
          if (gap / dist_m > r_tol) is_false = true;
        } else {
          is_false = true;
        }
      }
      if (gap / r_amp > a_tol) is_false = true;
      if (is_false) ++false_count;
    }
    if (eligible < 2) throw std::invalid_argument("gfnn: fewer than 2 eligible points after Theiler exclusion");
    profile.lags[m - 1] = m;
    profile.values[m - 1] = static_cast<double>(false_count) / static_cast<double>(eligible);
  }
  return profile;
}

/// Mean log distance growth after k steps over sampled close pairs, one value
/// per candidate delay.  Pairs must start within r and be separated by more
/// than the Theiler window.  Lower is better; the advisory selection takes
/// the minimum.
inline LagProfile gao_zheng(const TimeSeries& series, Index m, const std::vector<Index>& tau_grid,
                            Index k, double r, Index theiler, Index n_ref, RandomSource& rng) {
  if (m < 1) throw std::invalid_argument("gao_zheng: m must be >= 1");
  if (k < 0) throw std::invalid_argument("gao_zheng: k must be >= 0");
  if (r <= 0.0) throw std::invalid_argument("gao_zheng: r must be > 0");
  if (n_ref < 1) throw std::invalid_argument("gao_zheng: n_ref must be >= 1");
  if (tau_grid.empty()) throw std::invalid_argument("gao_zheng: empty tau grid");

  LagProfile profile;
  profile.lags.resize(static_cast<Index>(tau_grid.size()));
  profile.values.resize(static_cast<Index>(tau_grid.size()));
  for (std::size_t g = 0; g < tau_grid.size(); ++g) {
    const Index tau = tau_grid[g];
    PointCloud cloud = delay_embed(series, uniform_spec(tau, m));
    const Index n_pts = cloud.points.rows();
    const Index i_max = n_pts - 1 - k;
    if (i_max < 1) throw std::invalid_argument("gao_zheng: series too short for evolution steps");
    RandomSource draw = rng.stream(static_cast<std::uint64_t>(tau));
    double sum = 0.0;
    Index accepted = 0;
    const Index max_attempts = std::max<Index>(n_ref * 500, 10000);
    for (Index attempt = 0; attempt < max_attempts && accepted < n_ref; ++attempt) {
      const Index i = draw.below(static_cast<std::uint64_t>(i_max + 1));
      const Index j = draw.below(static_cast<std::uint64_t>(i_max + 1));
      if (std::abs(i - j) <= theiler) continue;
      const double d0 = (cloud.points.row(i) - cloud.points.row(j)).norm();
      if (d0 > r) continue;
      const double dk = (cloud.points.row(i + k) - cloud.points.row(j + k)).norm();
      // Coincident pairs that stay coincident have zero growth and count;
      // pairs where only one distance vanishes have no defined log ratio.
      if (d0 == 0.0) {
        if (dk == 0.0) ++accepted;
        continue;
      }
      if (dk == 0.0) continue;
      sum += std::log(dk / d0);
      ++accepted;
    }
    if (accepted == 0) throw std::runtime_error("gao_zheng: no eligible pairs at threshold r");
    profile.lags[static_cast<Index>(g)] = tau;
    profile.values[static_cast<Index>(g)] = sum / static_cast<double>(accepted);
  }
  Index best = 0;
  for (Index g = 1; g < profile.values.size(); ++g)
    if (profile.values[g] < profile.values[best]) best = g;
  profile.selected = profile.lags[best];
  profile.criterion = "minimum_growth";
  return profile;
}

/// Average normalized parallelepiped volume of the embedding, per candidate
/// delay: f = log(mean |det M| / range^m) over n_ref random (m+1)-point draws.
/// Degenerate draws (repeated indices or zero volume) are redrawn up to 100
/// times, then counted as zero.  The advisory selection maximizes f.
inline LagProfile fill_factor(const TimeSeries& series, Index m, const std::vector<Index>& tau_grid,
                              Index n_ref, RandomSource& rng) {
  if (m < 1) throw std::invalid_argument("fill_factor: m must be >= 1");
  if (n_ref < 1) throw std::invalid_argument("fill_factor: n_ref must be >= 1");
  if (tau_grid.empty()) throw std::invalid_argument("fill_factor: empty tau grid");
  const double range = series.values.maxCoeff() - series.values.minCoeff();
  if (!(range > 0.0)) throw std::invalid_argument("fill_factor: constant series");

  LagProfile profile;
  profile.lags.resize(static_cast<Index>(tau_grid.size()));
  profile.values.resize(static_cast<Index>(tau_grid.size()));
  for (std::size_t g = 0; g < tau_grid.size(); ++g) {
    const Index tau = tau_grid[g];
    PointCloud cloud = delay_embed(series, uniform_spec(tau, m));
    const Index n_pts = cloud.points.rows();
    if (n_pts < m + 1) throw std::invalid_argument("fill_factor: too few points to sample a parallelepiped");
    RandomSource draw = rng.stream(static_cast<std::uint64_t>(tau));
    double vol_sum = 0.0;
    Eigen::MatrixXd edges(m, m);
    std::vector<Index> idx(static_cast<std::size_t>(m) + 1);
    for (Index s = 0; s < n_ref; ++s) {
      double vol = 0.0;
      for (int attempt = 0; attempt < 100; ++attempt) {
        bool distinct = true;
        for (std::size_t q = 0; q < idx.size(); ++q) {
          idx[q] = draw.index(n_pts);
          for (std::size_t p = 0; p < q; ++p)
            if (idx[p] == idx[q]) distinct = false;
        }
        if (!distinct) continue;
        for (Index c = 0; c < m; ++c)
          edges.col(c) = (cloud.points.row(idx[static_cast<std::size_t>(c) + 1]) -
                          cloud.points.row(idx[0]))
                             .transpose();
        const double det = std::abs(edges.determinant());
        if (det > 0.0) {
          vol = det;
          break;
        }
      }
      vol_sum += vol;
    }
    profile.lags[static_cast<Index>(g)] = tau;
    profile.values[static_cast<Index>(g)] =
        std::log(vol_sum / static_cast<double>(n_ref)) - static_cast<double>(m) * std::log(range);
  }
  Index best = 0;
  for (Index g = 1; g < profile.values.size(); ++g)
    if (profile.values[g] > profile.values[best]) best = g;
  profile.selected = profile.lags[best];
  profile.criterion = "maximum_fill_factor";
  return profile;
}

/// Result of the iterative nearest-neighbour lag search: lags in the order
/// chosen, the statistic profile for each round, and why the loop stopped.
struct IterativeLagResult {
  std::vector<Index> lags;
  std::vector<LagProfile> profiles;
  std::string note;
};

/// Iterative lag construction from the fraction of neighbour pairs whose
/// distance one step ahead grows more than tenfold.  Each round scans the
/// candidate delays not yet chosen, computes that fraction F on the embedding
/// augmented by the candidate, and appends the lag at the first local minimum
/// of F.  Stops at m_target lags or when no local minimum exists.
inline IterativeLagResult garcia_almeida(const TimeSeries& series, Index tau_max, Index theiler,
                                         Index m_target) {
  if (tau_max < 1) throw std::invalid_argument("garcia_almeida: tau_max must be >= 1");
  if (m_target < 1) throw std::invalid_argument("garcia_almeida: m_target must be >= 1");
  const Index n = series.size();
  if (tau_max >= n - 1) throw std::invalid_argument("garcia_almeida: tau_max too large for series");
  constexpr double kRatioThreshold = 10.0;

  IterativeLagResult result;
  std::vector<Index> chosen;
  while (static_cast<Index>(chosen.size()) < m_target) {
    std::vector<Index> candidates;
    for (Index tau = 1; tau <= tau_max; ++tau)
      if (std::find(chosen.begin(), chosen.end(), tau) == chosen.end()) candidates.push_back(tau);
    if (candidates.empty()) {
      result.note = "candidate grid exhausted";
      break;
    }
    LagProfile profile;
    profile.lags.resize(static_cast<Index>(candidates.size()));
    profile.values.resize(static_cast<Index>(candidates.size()));
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      EmbeddingSpec spec;
      spec.lags = chosen;
      spec.lags.push_back(candidates[c]);
      std::sort(spec.lags.begin(), spec.lags.end());
      PointCloud cloud = delay_embed(series, spec);
      // Both the point and its neighbour must have a successor sample.
      const Index usable = cloud.points.rows() - 1;
      if (usable < 2) throw std::invalid_argument("garcia_almeida: too few points");
      auto nn = detail::nearest_neighbors(cloud.points, cloud.time_index, theiler, usable);
      Index counted = 0, grew = 0;
      for (Index i = 0; i < usable; ++i) {
        const Index j = nn[static_cast<std::size_t>(i)];
        if (j < 0) continue;
        ++counted;
        const double d1 = (cloud.points.row(i) - cloud.points.row(j)).norm();
        const double d2 = (cloud.points.row(i + 1) - cloud.points.row(j + 1)).norm();
        if (d1 > 0.0 ? d2 / d1 > kRatioThreshold : d2 > 0.0) ++grew;
      }
      if (counted == 0) throw std::invalid_argument("garcia_almeida: no neighbour pairs after Theiler exclusion");
      profile.lags[static_cast<Index>(c)] = candidates[c];
      profile.values[static_cast<Index>(c)] = static_cast<double>(grew) / static_cast<double>(counted);
    }
    const Index at = detail::first_local_minimum(profile.values);
    if (at < 0) {
      profile.criterion = "first_local_minimum: none found";
      result.profiles.push_back(std::move(profile));
      result.note = "no local minimum in range";
      break;
    }
    profile.selected = profile.lags[at];
    profile.criterion = "first_local_minimum";
    chosen.push_back(profile.lags[at]);
    result.profiles.push_back(std::move(profile));
  }
  if (result.note.empty()) result.note = "reached target lag count";
  result.lags = std::move(chosen);
  return result;
}

/// Continuity profile plus the lags at strict local maxima (the recommended
/// candidates for the next delay).
struct ContinuityResult {
  LagProfile profile;
  std::vector<Index> maxima;
};

/// Continuity statistic <eps*>(tau) for adding the coordinate x(t-tau) to the
/// embedding defined by existing_lags.  For each reference point the
/// delta_neighbors nearest neighbours are checked against a shrinking
/// epsilon ladder; eps* is the smallest epsilon at which the one-sided
/// binomial test (null: mapping within eps with chance 1/2) still rejects.
/// References where even the widest epsilon fails contribute that widest value.
inline ContinuityResult continuity_statistic(const TimeSeries& series,
                                             const std::vector<Index>& existing_lags,
                                             Index tau_max, Index n_ref,
                                             Index delta_neighbors = 13, double alpha = 0.05) {
  if (tau_max < 1) throw std::invalid_argument("continuity_statistic: tau_max must be >= 1");
  if (n_ref < 1) throw std::invalid_argument("continuity_statistic: n_ref must be >= 1");
  if (delta_neighbors < 1) throw std::invalid_argument("continuity_statistic: delta_neighbors must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("continuity_statistic: alpha in (0,1)");
  EmbeddingSpec base;
  base.lags = existing_lags;
  std::sort(base.lags.begin(), base.lags.end());
  detail::validate_spec(base);

  const Index n = series.size();
  const double mean = series.values.mean();
  const double sd = std::sqrt((series.values.array() - mean).square().sum() /
                              static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw std::invalid_argument("continuity_statistic: constant series");
  constexpr Index kLadder = 24;
  Eigen::VectorXd ladder(kLadder);
  for (Index l = 0; l < kLadder; ++l)
    ladder[l] = sd * std::pow(10.0, -3.0 * static_cast<double>(l) / static_cast<double>(kLadder - 1));

  // Validate the worst case (largest tau -> smallest pool) before the parallel
  // loop; a throw from a worker thread would otherwise terminate the process.
  if (n - std::max(base.max_lag(), tau_max) <= delta_neighbors)
    throw std::invalid_argument("continuity_statistic: delta_neighbors exceeds available points");

  ContinuityResult result;
  result.profile.lags.resize(tau_max);
  result.profile.values.resize(tau_max);
  parallel_chunks(tau_max, [&](int, Index begin, Index end) {
    for (Index g = begin; g < end; ++g) {
      const Index tau = g + 1;
      const Index t_lo = std::max(base.max_lag(), tau);
      const Index pool = n - t_lo;
      Eigen::MatrixXd pts(pool, base.dimension());
      for (Index row = 0; row < pool; ++row) {
        const Index t = row + t_lo;
        pts(row, 0) = series.values[t];
        for (std::size_t j = 0; j < base.lags.size(); ++j)
          pts(row, static_cast<Index>(j) + 1) = series.values[t - base.lags[j]];
      }
      double eps_sum = 0.0;
      std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(pool));
      for (Index ref_i = 0; ref_i < n_ref; ++ref_i) {
        const Index i = n_ref == 1 ? 0 : ref_i * (pool - 1) / (n_ref - 1);
        for (Index j = 0; j < pool; ++j)
          dist[static_cast<std::size_t>(j)] = {(pts.row(i) - pts.row(j)).norm(), j};
        dist[static_cast<std::size_t>(i)].first = std::numeric_limits<double>::infinity();
        std::partial_sort(dist.begin(), dist.begin() + delta_neighbors, dist.end());
        const double cand_ref = series.values[i + t_lo - tau];
        Eigen::VectorXd diffs(delta_neighbors);
        for (Index q = 0; q < delta_neighbors; ++q)
          diffs[q] = std::abs(series.values[dist[static_cast<std::size_t>(q)].second + t_lo - tau] -
                              cand_ref);
        double eps_star = ladder[0];
        bool rejected_any = false;
        for (Index l = 0; l < kLadder; ++l) {
          const Index k = (diffs.array() < ladder[l]).count();
          if (detail::binomial_upper_tail_half(delta_neighbors, k) <= alpha) {
            eps_star = ladder[l];
            rejected_any = true;
          } else if (rejected_any) {
            break;
          }
        }
        eps_sum += eps_star;
      }
      result.profile.lags[g] = tau;
      result.profile.values[g] = eps_sum / static_cast<double>(n_ref);
    }
  });

  const auto& v = result.profile.values;
  for (Index g = 1; g + 1 < v.size(); ++g)
    if (v[g] > v[g - 1] && v[g] > v[g + 1]) result.maxima.push_back(result.profile.lags[g]);
  Index best = 0;
  for (Index g = 1; g < v.size(); ++g)
    if (v[g] > v[best]) best = g;
  result.profile.selected = result.profile.lags[best];
  result.profile.criterion = "global_maximum";
  return result;
}

/// Principal-component rotation of a uniform delay embedding.
struct PcaEmbedding {
  PointCloud cloud;            ///< delay vectors projected onto the top-m axes
  Eigen::VectorXd eigenvalues; ///< full ladder, descending
};

/// Builds the (N-M+1) x M unit-delay matrix, forms the covariance of its
/// rows scaled by the row count, and projects the rows onto the top-m
/// eigenvectors.  The full eigenvalue ladder is returned for rank inspection.
inline PcaEmbedding pca_embed(const TimeSeries& series, Index window_M, Index m) {
  const Index n = series.size();
  if (m < 1) throw std::invalid_argument("pca_embed: m must be >= 1");
  if (window_M < m) throw std::invalid_argument("pca_embed: window must be >= m");
  const Index rows = n - window_M + 1;
  if (rows < window_M) throw std::invalid_argument("pca_embed: insufficient data");
  Eigen::MatrixXd delay(rows, window_M);
  for (Index row = 0; row < rows; ++row) {
    const Index t = row + window_M - 1;
    for (Index j = 0; j < window_M; ++j) delay(row, j) = series.values[t - j];
  }
  Eigen::MatrixXd cov = delay.transpose() * delay / static_cast<double>(rows);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_embed: eigendecomposition failed");

  PcaEmbedding out;
  out.eigenvalues.resize(window_M);
  Eigen::MatrixXd axes(window_M, m);
  for (Index j = 0; j < window_M; ++j) out.eigenvalues[j] = eig.eigenvalues()[window_M - 1 - j];
  for (Index j = 0; j < m; ++j) axes.col(j) = eig.eigenvectors().col(window_M - 1 - j);
  out.cloud.dt = series.dt;
  out.cloud.points = delay * axes;
  out.cloud.time_index.resize(static_cast<std::size_t>(rows));
  for (Index row = 0; row < rows; ++row)
    out.cloud.time_index[static_cast<std::size_t>(row)] = row + window_M - 1;
  return out;
}

/// Embedding by successive time derivatives: (x, dx/dt, ..., d^{m-1}x/dt^{m-1})
/// with repeated central differences; each differentiation trims one sample
/// from each edge, so the output has N - 2(m-1) points.
inline PointCloud derivative_embed(const TimeSeries& series, Index m, double dt) {
  const Index n = series.size();
  if (m < 2) throw std::invalid_argument("derivative_embed: m must be >= 2");
  if (dt <= 0.0) throw std::invalid_argument("derivative_embed: dt must be > 0");
  if (n <= 2 * m) throw std::invalid_argument("derivative_embed: m too large for length");
  const Index rows = n - 2 * (m - 1);
  PointCloud cloud;
  cloud.dt = dt;
  cloud.points.resize(rows, m);
  cloud.time_index.resize(static_cast<std::size_t>(rows));
  Eigen::VectorXd level = series.values;
  for (Index k = 0; k < m; ++k) {
    // level[i] holds the k-th derivative at original time i + k.
    for (Index row = 0; row < rows; ++row) cloud.points(row, k) = level[row + (m - 1) - k];
    if (k + 1 < m) {
      Eigen::VectorXd next(level.size() - 2);
      for (Index i = 0; i + 2 < level.size(); ++i) next[i] = (level[i + 2] - level[i]) / (2.0 * dt);
      level.swap(next);
    }
  }
  for (Index row = 0; row < rows; ++row)
    cloud.time_index[static_cast<std::size_t>(row)] = row + (m - 1);
  return cloud;
}

/// Three-component embedding (trapezoid integral of the centred series, the
/// series, its central-difference derivative), defined on t = 1..N-2.
inline PointCloud intdiff_embed(const TimeSeries& series, double dt) {
  const Index n = series.size();
  if (n < 3) throw std::invalid_argument("intdiff_embed: length must be >= 3");
  if (dt <= 0.0) throw std::invalid_argument("intdiff_embed: dt must be > 0");
  const double mean = series.values.mean();
  Eigen::VectorXd integral(n);
  integral[0] = 0.0;
  for (Index t = 1; t < n; ++t)
    integral[t] = integral[t - 1] +
                  0.5 * dt * ((series.values[t - 1] - mean) + (series.values[t] - mean));
  PointCloud cloud;
  cloud.dt = dt;
  cloud.points.resize(n - 2, 3);
  cloud.time_index.resize(static_cast<std::size_t>(n - 2));
  for (Index t = 1; t + 1 < n; ++t) {
    cloud.points(t - 1, 0) = integral[t];
    cloud.points(t - 1, 1) = series.values[t];
    cloud.points(t - 1, 2) = (series.values[t + 1] - series.values[t - 1]) / (2.0 * dt);
    cloud.time_index[static_cast<std::size_t>(t - 1)] = t;
  }
  return cloud;
}

}  // namespace nltsa
