#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nltsa/embedding.hpp"
#include "nltsa/parallel.hpp"
#include "nltsa/scaling.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

/// Geometric sequence of length scales, largest first.
struct EpsilonLadder {
  Eigen::VectorXd values;

  Index size() const { return values.size(); }
};

/// Lyapunov exponents in descending order.
using Spectrum = Eigen::VectorXd;

inline EpsilonLadder geometric_ladder(double eps_max, double eps_min, Index count) {
  if (count < 4) throw std::invalid_argument("geometric_ladder: need at least 4 scales");
  if (!(eps_min > 0.0) || !(eps_max > eps_min))
    throw std::invalid_argument("geometric_ladder: require eps_max > eps_min > 0");
  EpsilonLadder ladder;
  ladder.values.resize(count);
  const double step = std::log(eps_min / eps_max) / static_cast<double>(count - 1);
  for (Index k = 0; k < count; ++k)
    ladder.values[k] = eps_max * std::exp(step * static_cast<double>(k));
  ladder.values[count - 1] = eps_min;  // pin the endpoint against rounding drift
  return ladder;
}

namespace detail {

inline void validate_ladder(const EpsilonLadder& ladder, const char* who) {
  if (ladder.values.size() == 0) throw std::invalid_argument(std::string(who) + ": empty ladder");
  for (Index k = 0; k < ladder.values.size(); ++k) {
    if (!(ladder.values[k] > 0.0))
      throw std::invalid_argument(std::string(who) + ": ladder scales must be positive");
    if (k > 0 && !(ladder.values[k] < ladder.values[k - 1]))
      throw std::invalid_argument(std::string(who) + ": ladder must be strictly decreasing");
  }
}

/// Reversed (ascending) copy of a ladder in log scale, for slope fits.
inline Eigen::VectorXd ascending_log(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Index k = 0; k < v.size(); ++k) out[k] = std::log(v[v.size() - 1 - k]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Correlation sum and dimension

struct CorrelationSum {
  Eigen::VectorXd epsilons;  // descending, as given
  Eigen::VectorXd values;    // C(eps), same order
  long long eligible_pairs = 0;
};

/// Fraction of point pairs closer than each scale, pairs with time-index gap
/// within the Theiler window excluded from both count and normalization.
inline CorrelationSum correlation_sum(const PointCloud& cloud, const EpsilonLadder& ladder,
                                      Index theiler) {
  detail::validate_ladder(ladder, "correlation_sum");
  const Index n = cloud.size();
  if (n < 2) throw std::invalid_argument("correlation_sum: need at least 2 points");
  if (theiler < 0) throw std::invalid_argument("correlation_sum: theiler must be >= 0");
  const Index K = ladder.size();

  Eigen::VectorXd eps2(K);
  for (Index k = 0; k < K; ++k) eps2[k] = ladder.values[k] * ladder.values[k];

  // Each pair bumps the bucket of its prefix length: the number of leading
  // (largest) scales it falls under.  Suffix sums then give the counts.
  const int slots = thread_count();
  std::vector<std::vector<long long>> prefix_hist(static_cast<std::size_t>(slots),
                                                  std::vector<long long>(static_cast<std::size_t>(K) + 1, 0));
  std::vector<long long> eligible(static_cast<std::size_t>(slots), 0);
  parallel_chunks(n, [&](int chunk, Index begin, Index end) {
    auto& hist = prefix_hist[static_cast<std::size_t>(chunk)];
    long long elig = 0;
    for (Index i = begin; i < end; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        if (std::abs(cloud.time_index[static_cast<std::size_t>(i)] -
                     cloud.time_index[static_cast<std::size_t>(j)]) <= theiler)
          continue;
        ++elig;
        const double d2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
        Index lo = 0, hi = K;  // first ladder position with eps^2 <= d2
        while (lo < hi) {
          Index mid = (lo + hi) / 2;
          if (eps2[mid] > d2) lo = mid + 1;
          else hi = mid;
        }
        ++hist[static_cast<std::size_t>(lo)];
      }
    }
    eligible[static_cast<std::size_t>(chunk)] = elig;
  });

  long long total = 0;
  std::vector<long long> counts(static_cast<std::size_t>(K) + 1, 0);
  for (int c = 0; c < slots; ++c) {
    total += eligible[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k <= static_cast<std::size_t>(K); ++k)
      counts[k] += prefix_hist[static_cast<std::size_t>(c)][k];
  }
  if (total == 0) throw std::runtime_error("correlation_sum: all pairs excluded");

  CorrelationSum out;
  out.epsilons = ladder.values;
  out.values.resize(K);
  out.eligible_pairs = total;
  long long within = 0;
  for (Index k = K - 1; k >= 0; --k) {
    within += counts[static_cast<std::size_t>(k) + 1];
    out.values[k] = static_cast<double>(within) / static_cast<double>(total);
  }
  return out;
}

struct DimensionEstimate {
  double value = 0.0;
  ScalingFit fit;
  Eigen::VectorXd log_eps;      // ascending abscissa used for the fit
  Eigen::VectorXd log_profile;  // ordinate used for the fit
};

/// Slope of log C over the best scaling window.  Scales where C = 0 carry no
/// information and are dropped before fitting.  Fits with r^2 <= 0.99 are
/// flagged low-confidence rather than rejected.
inline DimensionEstimate correlation_dimension(const PointCloud& cloud, const EpsilonLadder& ladder,
                                               Index theiler, Index min_window = 4) {
  CorrelationSum cs = correlation_sum(cloud, ladder, theiler);
  const Index K = cs.values.size();
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(K));
  ys.reserve(static_cast<std::size_t>(K));
  for (Index k = K - 1; k >= 0; --k) {
    if (cs.values[k] <= 0.0) continue;
    xs.push_back(std::log(cs.epsilons[k]));
    ys.push_back(std::log(cs.values[k]));
  }
  if (static_cast<Index>(xs.size()) < min_window)
    throw std::runtime_error("correlation_dimension: too few non-empty scales to fit");

  DimensionEstimate est;
  est.log_eps = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Index>(xs.size()));
  est.log_profile = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Index>(ys.size()));
  est.fit = fit_scaling_region(est.log_eps, est.log_profile, min_window);
  est.fit.low_confidence = !(est.fit.r2 > 0.99);
  est.value = est.fit.slope;
  return est;
}

// ---------------------------------------------------------------------------
// Gaussian kernel sum

struct KernelSum {
  Eigen::VectorXd bandwidths;  // descending, as given
  Eigen::VectorXd values;
  std::optional<ScalingFit> fit;  // present when the ladder can support a fit
  double slope = 0.0;
};

/// Smooth analogue of the correlation sum: pairs are weighted by
/// exp(-d^2 / 4h^2) instead of a hard threshold.  Coordinates are first
/// reduced to zero mean and unit standard deviation unless normalize is off
/// (constant coordinates are left centred).
inline KernelSum gaussian_kernel_sum(const PointCloud& cloud, const EpsilonLadder& h_ladder,
                                     bool normalize = true, Index min_window = 4) {
  detail::validate_ladder(h_ladder, "gaussian_kernel_sum");
  const Index n = cloud.size();
  if (n < 2) throw std::invalid_argument("gaussian_kernel_sum: need at least 2 points");
  const Index K = h_ladder.size();

  Eigen::MatrixXd pts = cloud.points;
  if (normalize) {
    for (Index c = 0; c < pts.cols(); ++c) {
      const double mean = pts.col(c).mean();
      pts.col(c).array() -= mean;
      const double sd = std::sqrt(pts.col(c).squaredNorm() / static_cast<double>(n));
      if (sd > 0.0) pts.col(c) /= sd;
    }
  }

  Eigen::VectorXd inv4h2(K);
  for (Index k = 0; k < K; ++k) inv4h2[k] = 1.0 / (4.0 * h_ladder.values[k] * h_ladder.values[k]);

  const int slots = thread_count();
  std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(slots), Eigen::VectorXd::Zero(K));
  parallel_chunks(n, [&](int chunk, Index begin, Index end) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(K);
    for (Index i = begin; i < end; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double d2 = (pts.row(i) - pts.row(j)).squaredNorm();
        for (Index k = 0; k < K; ++k) acc[k] += std::exp(-d2 * inv4h2[k]);
      }
    partial[static_cast<std::size_t>(chunk)] = acc;
  });

  KernelSum out;
  out.bandwidths = h_ladder.values;
  out.values = Eigen::VectorXd::Zero(K);
  for (int c = 0; c < slots; ++c) out.values += partial[static_cast<std::size_t>(c)];
  out.values *= 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));

  if (K >= min_window) {
    Eigen::VectorXd x = detail::ascending_log(out.bandwidths);
    Eigen::VectorXd y(K);
    for (Index k = 0; k < K; ++k) y[k] = std::log(out.values[K - 1 - k]);
    out.fit = fit_scaling_region(x, y, min_window);
    out.slope = out.fit->slope;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Box counting and generalized dimensions

namespace detail {

/// Occupancy histogram of the axis-aligned grid with the given anchor: sizes
/// of all occupied boxes, in lexicographic box order.  The small positive
/// nudge keeps points whose coordinate ratio is an integer up to rounding
/// dust in their true box instead of the one below.
inline std::vector<Index> box_occupancy(const Eigen::MatrixXd& pts, const Eigen::VectorXd& anchor,
                                        double eps) {
  const Index n = pts.rows();
  const Index d = pts.cols();
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> keys(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c)
      keys(i, c) = static_cast<std::int64_t>(std::floor((pts(i, c) - anchor[c]) / eps + 1e-9));

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index c = 0; c < d; ++c) {
      if (keys(a, c) != keys(b, c)) return keys(a, c) < keys(b, c);
    }
    return false;
  });

  std::vector<Index> sizes;
  Index run = 0;
  for (Index r = 0; r < n; ++r) {
    if (r > 0) {
      bool same = true;
      for (Index c = 0; c < d; ++c)
        if (keys(order[static_cast<std::size_t>(r)], c) != keys(order[static_cast<std::size_t>(r - 1)], c)) {
          same = false;
          break;
        }
      if (!same) {
        sizes.push_back(run);
        run = 0;
      }
    }
    ++run;
  }
  if (run > 0) sizes.push_back(run);
  return sizes;
}

struct BoxGrid {
  Eigen::VectorXd mins;
  double extent = 0.0;  // largest per-coordinate span
};

inline BoxGrid box_grid(const PointCloud& cloud, const EpsilonLadder& ladder, const char* who) {
  validate_ladder(ladder, who);
  if (cloud.size() < 1) throw std::invalid_argument(std::string(who) + ": empty cloud");
  BoxGrid grid;
  grid.mins = cloud.points.colwise().minCoeff();
  for (Index c = 0; c < cloud.dimension(); ++c)
    grid.extent = std::max(grid.extent, cloud.points.col(c).maxCoeff() - grid.mins[c]);
  if (grid.extent > 0.0 && ladder.values[ladder.size() - 1] >= grid.extent)
    throw std::invalid_argument(std::string(who) + ": ladder coarser than data extent");
  return grid;
}

inline ScalingFit flat_fit(Index points) {
  ScalingFit fit;
  fit.slope = 0.0;
  fit.intercept = 0.0;
  fit.r2 = 1.0;
  fit.first = 0;
  fit.last = points - 1;
  fit.residuals = Eigen::VectorXd::Zero(points);
  return fit;
}

}  // namespace detail

struct BoxCounts {
  Eigen::VectorXd epsilons;  // descending, as given
  IndexVec counts;           // occupied boxes, grid anchored at the data minimum
  IndexVec shifted_counts;   // second pass with the anchor moved half a box
  double d0 = 0.0;
  ScalingFit fit;
};

/// Occupied-box counts per scale plus the capacity dimension from the best
/// scaling window of log N against log eps.  A cloud with zero extent sits in
/// one box at every scale and reports dimension zero directly.
inline BoxCounts box_counting(const PointCloud& cloud, const EpsilonLadder& ladder) {
  const Index K = ladder.size();
  BoxCounts out;
  out.epsilons = ladder.values;
  out.counts.resize(K);
  out.shifted_counts.resize(K);

  detail::BoxGrid grid = detail::box_grid(cloud, ladder, "box_counting");
  if (grid.extent == 0.0) {
    out.counts.setOnes();
    out.shifted_counts.setOnes();
    out.d0 = 0.0;
    out.fit = detail::flat_fit(K);
    return out;
  }

  for (Index k = 0; k < K; ++k) {
    const double eps = ladder.values[k];
    out.counts[k] =
        static_cast<Index>(detail::box_occupancy(cloud.points, grid.mins, eps).size());
    Eigen::VectorXd shifted = grid.mins.array() - eps / 2.0;
    out.shifted_counts[k] =
        static_cast<Index>(detail::box_occupancy(cloud.points, shifted, eps).size());
  }

  Eigen::VectorXd x = detail::ascending_log(out.epsilons);
  Eigen::VectorXd y(K);
  for (Index k = 0; k < K; ++k) y[k] = std::log(static_cast<double>(out.counts[K - 1 - k]));
  out.fit = fit_scaling_region(x, y);
  out.d0 = -out.fit.slope;
  return out;
}

/// Order-q dimension from box measures on the anchored grid: the slope of
/// (1/(q-1)) ln sum p^q against ln eps, with the q = 1 case read off the
/// slope of sum p ln p.  q = 0 reproduces box_counting exactly.
inline DimensionEstimate generalized_dimension(const PointCloud& cloud, double q,
                                               const EpsilonLadder& ladder, Index min_window = 4) {
  const Index K = ladder.size();
  detail::BoxGrid grid = detail::box_grid(cloud, ladder, "generalized_dimension");

  DimensionEstimate est;
  if (grid.extent == 0.0) {
    est.value = 0.0;
    est.fit = detail::flat_fit(K);
    est.log_eps = detail::ascending_log(ladder.values);
    est.log_profile = Eigen::VectorXd::Zero(K);
    return est;
  }

  const double n_total = static_cast<double>(cloud.size());
  Eigen::VectorXd y(K);
  for (Index k = 0; k < K; ++k) {
    std::vector<Index> sizes = detail::box_occupancy(cloud.points, grid.mins, ladder.values[k]);
    if (q == 1.0) {
      double s = 0.0;
      for (Index cnt : sizes) {
        const double p = static_cast<double>(cnt) / n_total;
        s += p * std::log(p);
      }
      y[K - 1 - k] = s;
    } else {
      double s = 0.0;
      for (Index cnt : sizes) s += std::pow(static_cast<double>(cnt) / n_total, q);
      y[K - 1 - k] = std::log(s) / (q - 1.0);
    }
  }

  est.log_eps = detail::ascending_log(ladder.values);
  est.log_profile = y;
  est.fit = fit_scaling_region(est.log_eps, est.log_profile, min_window);
  est.fit.low_confidence = !(est.fit.r2 > 0.99);
  est.value = est.fit.slope;
  return est;
}

// ---------------------------------------------------------------------------
// Maximal Lyapunov exponent

struct LyapunovProfile {
  Eigen::VectorXd t;  // horizon steps, 0..T
  Eigen::VectorXd S;  // mean log-divergence at each horizon
  ScalingFit fit;     // best linear window of S against t
  double lambda1 = 0.0;  // fit slope, per sample step
};

/// Divergence-curve estimate: every point with a neighbourhood of points
/// closer than epsilon (beyond the Theiler window) contributes the log of the
/// mean distance of that neighbourhood's forward images.  The slope of the
/// linear region of the averaged curve is the maximal exponent per sample.
/// Rows of the cloud must be consecutive samples of one trajectory.
///
/// The linear region defaults to the best-r^2 window search, which a curve
/// with a long bend can mislead; pass fit_first/fit_last to pin the window
/// by hand after inspecting the profile.
inline LyapunovProfile rosenstein_lyapunov(const PointCloud& cloud, double epsilon, Index theiler,
                                           Index horizon = 0, Index min_window = 4,
                                           Index fit_first = -1, Index fit_last = -1) {
  const Index n = cloud.size();
  if (!(epsilon > 0.0)) throw std::invalid_argument("rosenstein_lyapunov: epsilon must be > 0");
  if (theiler < 0) throw std::invalid_argument("rosenstein_lyapunov: theiler must be >= 0");
  if (horizon <= 0) horizon = std::min<Index>(n / 10, 500);
  if (horizon < 1 || n - horizon < 2)
    throw std::invalid_argument("rosenstein_lyapunov: series too short for the horizon");
  const Index last = n - 1 - horizon;  // latest index whose images stay in range
  const double eps2 = epsilon * epsilon;

  // Flattened neighbour lists per reference, built serially for determinism.
  std::vector<Index> nb_flat;
  std::vector<Index> nb_begin(static_cast<std::size_t>(last) + 2, 0);
  for (Index i = 0; i <= last; ++i) {
    nb_begin[static_cast<std::size_t>(i)] = static_cast<Index>(nb_flat.size());
    for (Index j = 0; j <= last; ++j) {
      if (std::abs(cloud.time_index[static_cast<std::size_t>(i)] -
                   cloud.time_index[static_cast<std::size_t>(j)]) <= theiler)
        continue;
      if ((cloud.points.row(i) - cloud.points.row(j)).squaredNorm() < eps2)
        nb_flat.push_back(j);
    }
  }
  nb_begin[static_cast<std::size_t>(last) + 1] = static_cast<Index>(nb_flat.size());
  if (nb_flat.empty()) throw std::runtime_error("rosenstein_lyapunov: no neighbours at epsilon");

  // One row of log-mean-distances per reference, filled in parallel and
  // reduced in reference order so thread count cannot change the result.
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(last + 1, horizon + 1);
  std::vector<char> has(static_cast<std::size_t>(last) + 1, 0);
  parallel_chunks(last + 1, [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const Index b = nb_begin[static_cast<std::size_t>(i)];
      const Index e = nb_begin[static_cast<std::size_t>(i) + 1];
      if (b == e) continue;
      has[static_cast<std::size_t>(i)] = 1;
      for (Index t = 0; t <= horizon; ++t) {
        double mean = 0.0;
        for (Index idx = b; idx < e; ++idx) {
          const Index j = nb_flat[static_cast<std::size_t>(idx)];
          mean += (cloud.points.row(i + t) - cloud.points.row(j + t)).norm();
        }
        rows(i, t) = std::log(mean / static_cast<double>(e - b));
      }
    }
  });

  LyapunovProfile prof;
  prof.t.resize(horizon + 1);
  prof.S = Eigen::VectorXd::Zero(horizon + 1);
  Index refs = 0;
  for (Index i = 0; i <= last; ++i) {
    if (!has[static_cast<std::size_t>(i)]) continue;
    ++refs;
    prof.S += rows.row(i).transpose();
  }
  prof.S /= static_cast<double>(refs);
  for (Index t = 0; t <= horizon; ++t) prof.t[t] = static_cast<double>(t);
  if (fit_first >= 0 || fit_last >= 0) {
    if (fit_first < 0 || fit_last > horizon || fit_last - fit_first + 1 < 2)
      throw std::invalid_argument("rosenstein_lyapunov: bad fit window");
    const Index len = fit_last - fit_first + 1;
    prof.fit = fit_scaling_region(prof.t.segment(fit_first, len), prof.S.segment(fit_first, len),
                                  len);
    prof.fit.first += fit_first;
    prof.fit.last += fit_first;
  } else {
    prof.fit = fit_scaling_region(prof.t, prof.S, min_window);
  }
  prof.lambda1 = prof.fit.slope;
  return prof;
}

inline LyapunovProfile rosenstein_lyapunov(const TimeSeries& series, const EmbeddingSpec& spec,
                                           double epsilon, Index theiler, Index horizon = 0,
                                           Index min_window = 4, Index fit_first = -1,
                                           Index fit_last = -1) {
  return rosenstein_lyapunov(delay_embed(series, spec), epsilon, theiler, horizon, min_window,
                             fit_first, fit_last);
}

/// Fiducial-trajectory estimate of the maximal exponent: follow one orbit,
/// keep a nearest neighbour, accumulate log distance growth every evolve_n
/// steps, and swap in the closest eligible replacement whenever the pair
/// separates beyond max_scale (default: 10% of the largest coordinate span).
/// Returns the exponent per sample step.
inline double wolf_max(const PointCloud& cloud, Index theiler, Index evolve_n,
                       double max_scale = 0.0) {
  const Index n = cloud.size();
  if (evolve_n < 1) throw std::invalid_argument("wolf_max: evolve_n must be >= 1");
  if (theiler < 0) throw std::invalid_argument("wolf_max: theiler must be >= 0");
  if (n < 2) throw std::invalid_argument("wolf_max: need at least 2 points");
  if (max_scale <= 0.0) {
    for (Index c = 0; c < cloud.dimension(); ++c)
      max_scale = std::max(max_scale,
                           0.1 * (cloud.points.col(c).maxCoeff() - cloud.points.col(c).minCoeff()));
    if (max_scale <= 0.0) throw std::invalid_argument("wolf_max: degenerate cloud");
  }

  const Index last_start = n - 1 - evolve_n;
  // Closest point to row i that can still be evolved, excluding temporal
  // neighbours and exact duplicates (a zero baseline has no growth ratio).
  auto nearest = [&](Index i) -> Index {
    Index best = -1;
    double best_d2 = 0.0;
    for (Index j = 0; j <= last_start; ++j) {
      if (std::abs(cloud.time_index[static_cast<std::size_t>(i)] -
                   cloud.time_index[static_cast<std::size_t>(j)]) <= theiler)
        continue;
      const double d2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
      if (d2 <= 0.0) continue;
      if (best < 0 || d2 < best_d2) {
        best = j;
        best_d2 = d2;
      }
    }
    return best;
  };

  Index cur = 0;
  if (cur > last_start)
    throw std::runtime_error("wolf_max: trajectory exhausted before any replacement cycle completed");
  Index nb = nearest(cur);
  if (nb < 0) throw std::runtime_error("wolf_max: no eligible neighbour to track");
  double len = (cloud.points.row(cur) - cloud.points.row(nb)).norm();

  double sum = 0.0;
  Index steps = 0;
  while (cur + evolve_n <= n - 1) {
    // Only the fiducial point ends the walk: a tracked neighbour that runs
    // off the end of the record is swapped out like any overgrown pair.
    if (nb + evolve_n > n - 1) {
      const Index repl = nearest(cur);
      if (repl < 0) break;
      nb = repl;
      len = (cloud.points.row(cur) - cloud.points.row(nb)).norm();
      continue;
    }
    cur += evolve_n;
    nb += evolve_n;
    const double grown = (cloud.points.row(cur) - cloud.points.row(nb)).norm();
    if (grown > 0.0) {
      sum += std::log(grown / len);
      steps += evolve_n;
    }
    len = grown;
    // Swap in a fresh neighbour once the pair separates too far; a collapsed
    // pair (duplicate samples) has no usable baseline and must be swapped too.
    if (grown > max_scale || grown <= 0.0) {
      if (cur > last_start) break;
      const Index repl = nearest(cur);
      if (repl < 0) break;
      nb = repl;
      len = (cloud.points.row(cur) - cloud.points.row(nb)).norm();
    }
  }
  if (steps == 0)
    throw std::runtime_error("wolf_max: trajectory exhausted before any replacement cycle completed");
  return sum / static_cast<double>(steps);
}

// ---------------------------------------------------------------------------
// Entropies and spectrum identities

/// Shannon (q = 1) or order-q entropy of a probability vector, in bits.
inline double entropy(const Eigen::VectorXd& pmf, double q) {
  if (q < 0.0) throw std::invalid_argument("entropy: q must be >= 0");
  double sum = 0.0;
  for (Index i = 0; i < pmf.size(); ++i) {
    if (pmf[i] < 0.0) throw std::invalid_argument("entropy: negative probability");
    sum += pmf[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("entropy: pmf must sum to 1");

  if (q == 1.0) {
    double h = 0.0;
    for (Index i = 0; i < pmf.size(); ++i)
      if (pmf[i] > 0.0) h -= pmf[i] * std::log2(pmf[i]);
    return h;
  }
  double s = 0.0;
  for (Index i = 0; i < pmf.size(); ++i)
    if (pmf[i] > 0.0) s += std::pow(pmf[i], q);
  return std::log2(s) / (1.0 - q);
}

/// Lyapunov dimension: the exponent count whose partial sum stays
/// non-negative, plus the linear interpolation into the next exponent.
inline double kaplan_yorke(const Spectrum& spectrum) {
  const Index n = spectrum.size();
  if (n == 0) throw std::invalid_argument("kaplan_yorke: empty spectrum");
  for (Index i = 1; i < n; ++i)
    if (spectrum[i] > spectrum[i - 1])
      throw std::invalid_argument("kaplan_yorke: spectrum must be descending");

  double partial = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double next = partial + spectrum[k];
    if (next < 0.0) return static_cast<double>(k) + partial / -spectrum[k];
    partial = next;
  }
  throw std::invalid_argument("kaplan_yorke: partial sums never go negative (non-dissipative spectrum)");
}

/// Entropy bound from the positive exponents alone.
inline double pesin_sum(const Spectrum& spectrum) {
  double h = 0.0;
  for (Index i = 0; i < spectrum.size(); ++i)
    if (spectrum[i] > 0.0) h += spectrum[i];
  return h;
}

}  // namespace nltsa
