#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nltsa/types.hpp"

namespace nltsa {

struct Histogram {
  Eigen::VectorXd pmf;
  Eigen::VectorXd edges;  // pmf.size() + 1 entries
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;  // values that landed in a bin
};

/// Probability mass over equal-width bins. Bins are right-open except the last,
/// which also includes the upper edge, so max(values) is never dropped. With an
/// explicit range, values outside it are ignored and the pmf is normalized over
/// the remainder. A degenerate range collapses to a single full bin.
inline Histogram histogram_pmf(const Eigen::VectorXd& values, int n_bins,
                               std::optional<std::pair<double, double>> range = std::nullopt) {
  if (values.size() == 0) throw std::invalid_argument("histogram_pmf: empty input");
  if (n_bins < 1) throw std::invalid_argument("histogram_pmf: need at least one bin");

  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
    if (hi < lo) throw std::invalid_argument("histogram_pmf: range upper bound below lower bound");
  } else {
    lo = values.minCoeff();
    hi = values.maxCoeff();
  }

  Histogram h;
  if (hi == lo) {  // degenerate span: everything in one bin
    h.edges.resize(2);
    h.edges << lo, hi;
    std::int64_t n = 0;
    for (Index i = 0; i < values.size(); ++i)
      if (values[i] == lo) ++n;
    if (n == 0) throw std::invalid_argument("histogram_pmf: no values inside range");
    h.counts = {n};
    h.total = n;
    h.pmf = Eigen::VectorXd::Ones(1);
    return h;
  }

  double width = (hi - lo) / n_bins;
  h.edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b) h.edges[b] = lo + width * b;
  h.edges[n_bins] = hi;

  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (Index i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (v < lo || v > hi) continue;
    int b = v == hi ? n_bins - 1 : static_cast<int>((v - lo) / width);
    if (b >= n_bins) b = n_bins - 1;  // guards rounding at the top edge
    ++h.counts[static_cast<std::size_t>(b)];
    ++h.total;
  }
  if (h.total == 0) throw std::invalid_argument("histogram_pmf: no values inside range");

  h.pmf.resize(n_bins);
  for (int b = 0; b < n_bins; ++b)
    h.pmf[b] = static_cast<double>(h.counts[static_cast<std::size_t>(b)]) / static_cast<double>(h.total);
  return h;
}

}  // namespace nltsa
