#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nltsa/parallel.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

enum class RpMetric { l1, l2, linf };

struct RecurrencePlot {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> matrix;
  RpMetric metric = RpMetric::l2;
  double epsilon = 0.0;
  std::optional<double> rr_target;  // set when the threshold came from a rate
  double epsilon_rr = 0.0;          // largest distance among off-identity recurrences

  Index size() const { return matrix.rows(); }
};

namespace detail {

inline double rp_distance(const PointCloud& cloud, Index i, Index j, RpMetric metric) {
  switch (metric) {
    case RpMetric::l1: return (cloud.points.row(i) - cloud.points.row(j)).lpNorm<1>();
    case RpMetric::l2: return (cloud.points.row(i) - cloud.points.row(j)).norm();
    case RpMetric::linf:
      return (cloud.points.row(i) - cloud.points.row(j)).lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

}  // namespace detail

/// Pairwise threshold plot: entry (i, j) is true when the points sit strictly
/// closer than epsilon.  The diagonal is true by construction.
inline RecurrencePlot recurrence_matrix(const PointCloud& cloud, RpMetric metric, double epsilon) {
  const Index n = cloud.size();
  if (n < 2) throw std::invalid_argument("recurrence_matrix: need at least 2 points");
  if (!(epsilon > 0.0)) throw std::invalid_argument("recurrence_matrix: epsilon must be > 0");

  RecurrencePlot rp;
  rp.metric = metric;
  rp.epsilon = epsilon;
  rp.matrix.resize(n, n);

  const int slots = thread_count();
  std::vector<double> chunk_max(static_cast<std::size_t>(slots), 0.0);
  parallel_chunks(n, [&](int chunk, Index begin, Index end) {
    double widest = 0.0;
    for (Index i = begin; i < end; ++i) {
      rp.matrix(i, i) = true;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = detail::rp_distance(cloud, i, j, metric);
        const bool hit = d < epsilon;
        rp.matrix(i, j) = hit;
        if (hit) widest = std::max(widest, d);
      }
    }
    chunk_max[static_cast<std::size_t>(chunk)] = widest;
  });
  for (double w : chunk_max) rp.epsilon_rr = std::max(rp.epsilon_rr, w);
  return rp;
}

/// Fixed-rate plot: the threshold is the rr_target quantile of the pairwise
/// off-identity distances, so roughly that fraction of pairs recur.
inline RecurrencePlot recurrence_matrix_rr(const PointCloud& cloud, RpMetric metric,
                                           double rr_target) {
  const Index n = cloud.size();
  if (n < 2) throw std::invalid_argument("recurrence_matrix: need at least 2 points");
  if (!(rr_target > 0.0) || !(rr_target < 1.0))
    throw std::invalid_argument("recurrence_matrix: rr_target must lie in (0, 1)");

  const Index pairs = n * (n - 1) / 2;
  std::vector<double> distances(static_cast<std::size_t>(pairs));
  // Row i owns the slots for pairs (i, j > i).
  parallel_chunks(n, [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      std::size_t at = static_cast<std::size_t>(i * n - i * (i + 1) / 2 - i);
      for (Index j = i + 1; j < n; ++j)
        distances[at + static_cast<std::size_t>(j) - 1] =
            detail::rp_distance(cloud, i, j, metric);
    }
  });

  const Index k = static_cast<Index>(std::floor(rr_target * static_cast<double>(pairs)));
  const Index at = std::min(k, pairs - 1);
  std::nth_element(distances.begin(), distances.begin() + at, distances.end());
  const double epsilon = distances[static_cast<std::size_t>(at)];
  if (!(epsilon > 0.0))
    throw std::runtime_error("recurrence_matrix: requested rate falls below the smallest gap");

  RecurrencePlot rp = recurrence_matrix(cloud, metric, epsilon);
  rp.rr_target = rr_target;
  return rp;
}

enum class LineKind { diagonal, vertical, recurrence_time };

struct LineHistogram {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts;  // counts[l-1]: maximal lines of length l
  LineKind kind = LineKind::diagonal;

  std::int64_t lines(Index l_min) const {
    std::int64_t s = 0;
    for (Index l = l_min; l <= counts.size(); ++l) s += counts[l - 1];
    return s;
  }
  std::int64_t points(Index l_min) const {
    std::int64_t s = 0;
    for (Index l = l_min; l <= counts.size(); ++l) s += l * counts[l - 1];
    return s;
  }
};

struct DiagonalMeasures {
  LineHistogram histogram;
  double rr = 0.0;  // off-identity recurrence density
  double det = 0.0;
  std::optional<double> l_avg;
  std::optional<Index> l_max;
  std::optional<double> div;
  double entr = 0.0;
};

struct VerticalMeasures {
  LineHistogram histogram;
  double lam = 0.0;
  std::optional<double> tt;
  std::optional<Index> v_max;
  double ventr = 0.0;
};

struct RecurrenceTimeMeasures {
  LineHistogram histogram;
  std::optional<double> r_avg;
};

namespace detail {

inline void record_line(std::vector<std::int64_t>& counts, Index length, std::int64_t weight) {
  if (length < 1) return;
  if (static_cast<std::size_t>(length) > counts.size()) counts.resize(static_cast<std::size_t>(length), 0);
  counts[static_cast<std::size_t>(length) - 1] += weight;
}

inline LineHistogram pack_histogram(const std::vector<std::int64_t>& counts, LineKind kind) {
  Index top = static_cast<Index>(counts.size());
  while (top > 0 && counts[static_cast<std::size_t>(top) - 1] == 0) --top;
  LineHistogram hist;
  hist.kind = kind;
  hist.counts.resize(top);
  for (Index l = 0; l < top; ++l) hist.counts[l] = counts[static_cast<std::size_t>(l)];
  return hist;
}

/// Shannon entropy (bits) of the line-length distribution restricted to l >= l_min.
inline double line_entropy(const LineHistogram& hist, Index l_min) {
  const double total = static_cast<double>(hist.lines(l_min));
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (Index l = l_min; l <= hist.counts.size(); ++l) {
    if (hist.counts[l - 1] == 0) continue;
    const double p = static_cast<double>(hist.counts[l - 1]) / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline std::int64_t recurrent_cells(const RecurrencePlot& rp, bool include_identity) {
  std::int64_t total = 0;
  for (Index j = 0; j < rp.size(); ++j)
    for (Index i = 0; i < rp.size(); ++i)
      if (rp.matrix(i, j) && (include_identity || i != j)) ++total;
  return total;
}

}  // namespace detail

/// Maximal runs along every off-identity diagonal (both triangles), with the
/// cells beyond the matrix edge treated as non-recurrent.  The identity line
/// itself never contributes.
inline DiagonalMeasures diagonal_histogram(const RecurrencePlot& rp, Index l_min = 2) {
  if (l_min < 1) throw std::invalid_argument("diagonal_histogram: l_min must be >= 1");
  const Index n = rp.size();
  std::vector<std::int64_t> raw;
  for (Index d = 1; d < n; ++d) {
    Index run = 0;
    for (Index i = 0; i + d < n; ++i) {
      if (rp.matrix(i, i + d)) {
        ++run;
      } else if (run > 0) {
        detail::record_line(raw, run, 2);  // the lower triangle mirrors it
        run = 0;
      }
    }
    if (run > 0) detail::record_line(raw, run, 2);
  }

  DiagonalMeasures out;
  out.histogram = detail::pack_histogram(raw, LineKind::diagonal);
  out.rr = static_cast<double>(detail::recurrent_cells(rp, false)) /
           static_cast<double>(n * (n - 1));

  const std::int64_t all_points = out.histogram.points(1);
  const std::int64_t long_points = out.histogram.points(l_min);
  const std::int64_t long_lines = out.histogram.lines(l_min);
  out.det = all_points > 0 ? static_cast<double>(long_points) / static_cast<double>(all_points)
                           : 0.0;
  if (long_lines > 0) {
    out.l_avg = static_cast<double>(long_points) / static_cast<double>(long_lines);
    out.l_max = out.histogram.counts.size();
    out.div = 1.0 / static_cast<double>(*out.l_max);
  }
  out.entr = detail::line_entropy(out.histogram, l_min);
  return out;
}

/// Maximal vertical runs per column, identity entries included: a column's
/// unbroken stretch of neighbours is one laminar episode.
inline VerticalMeasures vertical_histogram(const RecurrencePlot& rp, Index l_min = 2) {
  if (l_min < 1) throw std::invalid_argument("vertical_histogram: l_min must be >= 1");
  const Index n = rp.size();
  std::vector<std::int64_t> raw;
  for (Index j = 0; j < n; ++j) {
    Index run = 0;
    for (Index i = 0; i < n; ++i) {
      if (rp.matrix(i, j)) {
        ++run;
      } else if (run > 0) {
        detail::record_line(raw, run, 1);
        run = 0;
      }
    }
    if (run > 0) detail::record_line(raw, run, 1);
  }

  VerticalMeasures out;
  out.histogram = detail::pack_histogram(raw, LineKind::vertical);
  const std::int64_t all_points = out.histogram.points(1);
  const std::int64_t long_points = out.histogram.points(l_min);
  const std::int64_t long_lines = out.histogram.lines(l_min);
  out.lam = all_points > 0 ? static_cast<double>(long_points) / static_cast<double>(all_points)
                           : 0.0;
  if (long_lines > 0) {
    out.tt = static_cast<double>(long_points) / static_cast<double>(long_lines);
    out.v_max = out.histogram.counts.size();
  }
  out.ventr = detail::line_entropy(out.histogram, l_min);
  return out;
}

/// Waiting times between successive recurrences in each column: a void of k
/// empty cells flanked by recurrent ones is recorded as the revisit distance
/// k + 1.  Adjacent recurrences (no void) contribute nothing, and neither do
/// columns with fewer than two recurrences.
inline RecurrenceTimeMeasures recurrence_time_histogram(const RecurrencePlot& rp,
                                                        Index l_min = 1) {
  if (l_min < 1) throw std::invalid_argument("recurrence_time_histogram: l_min must be >= 1");
  const Index n = rp.size();
  std::vector<std::int64_t> raw;
  for (Index j = 0; j < n; ++j) {
    Index last = -1;
    for (Index i = 0; i < n; ++i) {
      if (!rp.matrix(i, j)) continue;
      if (last >= 0 && i - last >= 2) detail::record_line(raw, i - last, 1);
      last = i;
    }
  }
  RecurrenceTimeMeasures out;
  out.histogram = detail::pack_histogram(raw, LineKind::recurrence_time);
  const std::int64_t lines = out.histogram.lines(l_min);
  if (lines > 0)
    out.r_avg = static_cast<double>(out.histogram.points(l_min)) / static_cast<double>(lines);
  return out;
}

struct RqaSummary {
  double epsilon = 0.0;
  double epsilon_rr = 0.0;
  Index l_min = 2;
  Index theiler = 0;
  double rr = 0.0;
  double n_avg = 0.0;
  double det = 0.0;
  std::optional<double> l_avg;
  std::optional<Index> l_max;
  std::optional<double> div;
  double entr = 0.0;
  double lam = 0.0;
  std::optional<double> tt;
  std::optional<Index> v_max;
  double ventr = 0.0;
  std::optional<double> r_avg;
};

namespace detail {

inline RqaSummary summarize_rp(RecurrencePlot rp, Index l_min, Index theiler,
                               bool include_identity) {
  if (theiler < 0) throw std::invalid_argument("rqa_summary: theiler must be >= 0");
  const Index n = rp.size();
  if (theiler > 0) {
    for (Index j = 0; j < n; ++j)
      for (Index i = std::max(Index{0}, j - theiler); i <= std::min(n - 1, j + theiler); ++i)
        rp.matrix(i, j) = false;
  }

  RqaSummary out;
  out.epsilon = rp.epsilon;
  out.epsilon_rr = rp.epsilon_rr;
  out.l_min = l_min;
  out.theiler = theiler;

  if (theiler == 0 && include_identity) {
    const double total = static_cast<double>(recurrent_cells(rp, true));
    out.rr = total / static_cast<double>(n * n);
    out.n_avg = total / static_cast<double>(n);
  } else {
    // Band cells (identity included) are masked out of both count and norm.
    const Index w = std::min(theiler, n - 1);
    const std::int64_t band = n + 2 * (w * n - w * (w + 1) / 2);
    if (band >= n * n) throw std::invalid_argument("rqa_summary: theiler band covers the whole plot");
    const double total = static_cast<double>(recurrent_cells(rp, false));
    out.rr = total / static_cast<double>(n * n - band);
    out.n_avg = total / static_cast<double>(n);
  }

  DiagonalMeasures diag = diagonal_histogram(rp, l_min);
  out.det = diag.det;
  out.l_avg = diag.l_avg;
  out.l_max = diag.l_max;
  out.div = diag.div;
  out.entr = diag.entr;

  VerticalMeasures vert = vertical_histogram(rp, l_min);
  out.lam = vert.lam;
  out.tt = vert.tt;
  out.v_max = vert.v_max;
  out.ventr = vert.ventr;

  out.r_avg = recurrence_time_histogram(rp).r_avg;
  return out;
}

}  // namespace detail

/// One-call composition of the plot and every line measure.  A positive
/// Theiler width blanks the band |i - j| <= theiler before any counting, so
/// tangential motion drops out of all measures at once.
inline RqaSummary rqa_summary(const PointCloud& cloud, RpMetric metric, double epsilon,
                              Index l_min = 2, Index theiler = 0, bool include_identity = false) {
  return detail::summarize_rp(recurrence_matrix(cloud, metric, epsilon), l_min, theiler,
                              include_identity);
}

inline RqaSummary rqa_summary_rr(const PointCloud& cloud, RpMetric metric, double rr_target,
                                 Index l_min = 2, Index theiler = 0,
                                 bool include_identity = false) {
  return detail::summarize_rp(recurrence_matrix_rr(cloud, metric, rr_target), l_min, theiler,
                              include_identity);
}

}  // namespace nltsa
