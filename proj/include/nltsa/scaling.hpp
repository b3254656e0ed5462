#pragma once

#include <cmath>
#include <stdexcept>

#include "nltsa/types.hpp"

namespace nltsa {

/// Exhaustive best-window line fit: every contiguous window of at least
/// min_points gets an OLS fit, and the window with the highest r^2 wins.
/// Ties (within 1e-12) go to the widest window, then the leftmost.
/// A window with zero y-variance counts as a perfect fit (slope 0, r^2 = 1).
inline ScalingFit fit_scaling_region(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     Index min_points = 4) {
  const Index n = x.size();
  if (y.size() != n) throw std::invalid_argument("fit_scaling_region: x/y size mismatch");
  if (min_points < 2) throw std::invalid_argument("fit_scaling_region: min_points must be >= 2");
  if (n < min_points) throw std::invalid_argument("fit_scaling_region: fewer points than the minimum window");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("fit_scaling_region: non-finite profile value");
    if (i > 0 && x[i] <= x[i - 1])
      throw std::invalid_argument("fit_scaling_region: x must be strictly increasing");
  }

  // Prefix sums make each window fit O(1).
  Eigen::VectorXd sx(n + 1), sy(n + 1), sxx(n + 1), sxy(n + 1), syy(n + 1);
  sx[0] = sy[0] = sxx[0] = sxy[0] = syy[0] = 0.0;
  for (Index i = 0; i < n; ++i) {
    sx[i + 1] = sx[i] + x[i];
    sy[i + 1] = sy[i] + y[i];
    sxx[i + 1] = sxx[i] + x[i] * x[i];
    sxy[i + 1] = sxy[i] + x[i] * y[i];
    syy[i + 1] = syy[i] + y[i] * y[i];
  }

  const double tie_tol = 1e-12;
  bool have_best = false;
  double top_r2 = -1.0;  // highest r^2 seen, reference for tie detection
  double best_r2 = -1.0;
  Index best_i = 0, best_j = 0;
  double best_slope = 0.0, best_icpt = 0.0;

  for (Index i = 0; i + min_points - 1 < n; ++i) {
    for (Index j = i + min_points - 1; j < n; ++j) {
      double w = static_cast<double>(j - i + 1);
      double Sx = sx[j + 1] - sx[i];
      double Sy = sy[j + 1] - sy[i];
      double Sxx = sxx[j + 1] - sxx[i];
      double Sxy = sxy[j + 1] - sxy[i];
      double Syy = syy[j + 1] - syy[i];
      double vxx = Sxx - Sx * Sx / w;
      double vyy = Syy - Sy * Sy / w;
      double vxy = Sxy - Sx * Sy / w;

      double slope, icpt, r2;
      if (vyy <= 0.0) {  // constant y: horizontal line, exact fit
        slope = 0.0;
        icpt = Sy / w;
        r2 = 1.0;
      } else {
        slope = vxy / vxx;
        icpt = (Sy - slope * Sx) / w;
        r2 = (vxy * vxy) / (vxx * vyy);
        if (r2 > 1.0) r2 = 1.0;
      }

      bool better = false;
      if (!have_best || r2 > top_r2 + tie_tol) {
        better = true;
      } else if (r2 > top_r2 - tie_tol) {
        Index bw = best_j - best_i;
        Index cw = j - i;
        if (cw > bw || (cw == bw && i < best_i)) better = true;
      }
      top_r2 = std::max(top_r2, r2);
      if (better) {
        have_best = true;
        best_r2 = r2;
        best_i = i;
        best_j = j;
        best_slope = slope;
        best_icpt = icpt;
      }
    }
  }

  ScalingFit fit;
  fit.slope = best_slope;
  fit.intercept = best_icpt;
  fit.r2 = best_r2;
  fit.first = best_i;
  fit.last = best_j;
  fit.residuals.resize(best_j - best_i + 1);
  for (Index i = best_i; i <= best_j; ++i)
    fit.residuals[i - best_i] = y[i] - (best_slope * x[i] + best_icpt);
  return fit;
}

}  // namespace nltsa
