#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nltsa/embedding.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

/// Linear recursion x_t = intercept + sum_j coefficients[j-1] x_{t-j} + noise.
struct ArModel {
  Index order = 0;
  Eigen::VectorXd coefficients;  // phi_1 .. phi_p
  double intercept = 0.0;
  double noise_variance = 0.0;  // residual variance of the fit
};

/// Least-squares fit of an order-p linear recursion: regress x_t on its p
/// predecessors plus an intercept.  Equivalent to a linear model over delay
/// vectors, so it works on deterministic signals too (a sinusoid is an exact
/// order-2 recursion).
inline ArModel fit_ar(const TimeSeries& series, Index p) {
  if (p < 1) throw std::invalid_argument("fit_ar: order must be >= 1");
  const Index n = series.size();
  if (n <= 3 * p) throw std::invalid_argument("fit_ar: series too short for requested order");

  const Index rows = n - p;
  Eigen::MatrixXd design(rows, p + 1);
  Eigen::VectorXd target(rows);
  for (Index t = p; t < n; ++t) {
    const Index r = t - p;
    design(r, 0) = 1.0;
    for (Index j = 1; j <= p; ++j) design(r, j) = series.values[t - j];
    target[r] = series.values[t];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1) throw std::runtime_error("fit_ar: singular normal equations");
  const Eigen::VectorXd beta = qr.solve(target);

  ArModel model;
  model.order = p;
  model.intercept = beta[0];
  model.coefficients = beta.segment(1, p);
  model.noise_variance =
      (design * beta - target).squaredNorm() / static_cast<double>(rows - p - 1);
  return model;
}

/// Moduli of the characteristic-polynomial roots of 1 - sum_j phi_j B^j,
/// ascending.  The recursion is stationary iff every root lies strictly
/// outside the unit circle; moduli within 1e-10 of the circle are reported
/// non-stationary so unit-root constructions are not misclassified by
/// rounding.
struct ArStability {
  bool stationary = false;
  Eigen::VectorXd root_moduli;
};

inline ArStability ar_stability(const ArModel& model) {
  const Eigen::VectorXd& phi = model.coefficients;
  if (!phi.allFinite()) throw std::invalid_argument("ar_stability: coefficients must be finite");
  Index q = phi.size();
  while (q > 0 && phi[q - 1] == 0.0) --q;  // trailing zeros lower the degree

  ArStability out;
  if (q == 0) {  // no feedback at all: trivially stable
    out.stationary = true;
    out.root_moduli.resize(0);
    return out;
  }

  // Companion matrix of the monic form; its eigenvalues are the roots.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q, q);
  for (Index i = 1; i < q; ++i) companion(i, i - 1) = 1.0;
  companion(0, q - 1) = 1.0 / phi[q - 1];
  for (Index j = 1; j < q; ++j) companion(j, q - 1) = -phi[q - 1 - j] / phi[q - 1];

  const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  Eigen::VectorXd moduli = es.eigenvalues().array().abs();
  std::sort(moduli.begin(), moduli.end());
  out.root_moduli = std::move(moduli);
  out.stationary = out.root_moduli[0] > 1.0 + 1e-10;
  return out;
}

/// Noise-free forecast: iterate the recursion with the innovation held at
/// zero.  `stationary` mirrors ar_stability; when false the values can grow
/// without bound.
struct ArForecast {
  TimeSeries values;
  bool stationary = true;
};

inline ArForecast ar_forecast(const ArModel& model, const TimeSeries& history, Index steps) {
  const Index p = model.order;
  if (p < 1 || model.coefficients.size() != p)
    throw std::invalid_argument("ar_forecast: malformed model");
  if (history.size() < p)
    throw std::invalid_argument("ar_forecast: history shorter than model order");
  if (steps < 0) throw std::invalid_argument("ar_forecast: steps must be >= 0");

  std::vector<double> buf(p);  // oldest first, buf[p-1] is the newest sample
  for (Index j = 0; j < p; ++j) buf[j] = history.values[history.size() - p + j];

  ArForecast out;
  out.stationary = ar_stability(model).stationary;
  out.values.dt = history.dt;
  out.values.values.resize(steps);
  for (Index s = 0; s < steps; ++s) {
    double next = model.intercept;
    for (Index j = 1; j <= p; ++j) next += model.coefficients[j - 1] * buf[p - j];
    out.values.values[s] = next;
    buf.erase(buf.begin());
    buf.push_back(next);
  }
  return out;
}

enum class NeighbourMode { nearest, k_nearest, ball };

/// Neighbourhood selection for local prediction.  Ball mode can weight
/// successors by exp(-kernel_s * d / dbar) with dbar the mean distance over
/// the selected ball; kernel_s = 0 keeps a plain average.  When the query
/// carries a time stamp, training states with |time - query_time| < theiler
/// are excluded; theiler = 0 excludes nothing, so a query drawn from the
/// training set can match itself.
struct NeighbourSpec {
  NeighbourMode mode = NeighbourMode::nearest;
  Index k = 1;
  double epsilon = 0.0;
  double kernel_s = 0.0;
  Index theiler = 0;
};

/// Method-of-analogues prediction: locate training states near the query and
/// combine their recorded successors.  successors[i] is the value observed
/// one step after train.points.row(i).  Ties in distance resolve to the
/// smallest time index.
inline double knn_predict(const PointCloud& train, const Eigen::VectorXd& successors,
                          const Eigen::RowVectorXd& query, const NeighbourSpec& spec,
                          std::optional<Index> query_time = std::nullopt) {
  const Index n = train.size();
  if (n == 0) throw std::invalid_argument("knn_predict: empty training cloud");
  if (successors.size() != n)
    throw std::invalid_argument("knn_predict: successor count does not match training cloud");
  if (query.size() != train.dimension())
    throw std::invalid_argument("knn_predict: query dimension mismatch");
  if (spec.theiler < 0) throw std::invalid_argument("knn_predict: theiler must be >= 0");

  const bool stamped = static_cast<Index>(train.time_index.size()) == n;
  struct Cand {
    double d;
    Index time;
    Index row;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index ti = stamped ? train.time_index[static_cast<std::size_t>(i)] : i;
    if (query_time && std::abs(ti - *query_time) < spec.theiler) continue;
    cands.push_back({(train.points.row(i) - query).norm(), ti, i});
  }
  if (cands.empty()) throw std::runtime_error("knn_predict: no eligible neighbour");

  const auto closer = [](const Cand& a, const Cand& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.time != b.time) return a.time < b.time;
    return a.row < b.row;
  };

  switch (spec.mode) {
    case NeighbourMode::nearest: {
      const Cand& best = *std::min_element(cands.begin(), cands.end(), closer);
      return successors[best.row];
    }
    case NeighbourMode::k_nearest: {
      if (spec.k < 1) throw std::invalid_argument("knn_predict: k must be >= 1");
      if (spec.k > static_cast<Index>(cands.size()))
        throw std::runtime_error("knn_predict: k exceeds eligible neighbour count");
      std::partial_sort(cands.begin(), cands.begin() + spec.k, cands.end(), closer);
      double sum = 0.0;
      for (Index j = 0; j < spec.k; ++j) sum += successors[cands[static_cast<std::size_t>(j)].row];
      return sum / static_cast<double>(spec.k);
    }
    case NeighbourMode::ball: {
      if (!(spec.epsilon > 0.0)) throw std::invalid_argument("knn_predict: epsilon must be positive");
      double dbar = 0.0;
      std::vector<Cand> ball;
      for (const Cand& c : cands)
        if (c.d < spec.epsilon) {
          ball.push_back(c);
          dbar += c.d;
        }
      if (ball.empty()) throw std::runtime_error("knn_predict: no neighbour within epsilon");
      dbar /= static_cast<double>(ball.size());
      double wsum = 0.0, acc = 0.0;
      for (const Cand& c : ball) {
        const double w = (spec.kernel_s == 0.0 || dbar == 0.0)
                             ? 1.0
                             : std::exp(-spec.kernel_s * c.d / dbar);
        wsum += w;
        acc += w * successors[c.row];
      }
      return acc / wsum;
    }
  }
  throw std::logic_error("knn_predict: unhandled mode");
}

/// Closed-loop forecast: delay-embed the record, predict the next sample from
/// analogues of the final window, append the prediction, repeat.  Predictions
/// feed back into later windows; nothing is corrected against held-out truth.
/// `truncated` reports a run aborted mid-way (e.g. the ball emptied out); the
/// values carry whatever was produced before the failure.
struct FreeRun {
  TimeSeries values;
  bool truncated = false;
};

inline FreeRun freerun(const TimeSeries& series, const EmbeddingSpec& spec,
                       const NeighbourSpec& predictor, Index horizon) {
  if (horizon < 0) throw std::invalid_argument("freerun: horizon must be >= 0");
  const PointCloud embedded = delay_embed(series, spec);
  if (embedded.size() < 2) throw std::invalid_argument("freerun: not enough embedded states");

  // The state anchored at time t is followed by x[t+1]; the final state has
  // no successor and is dropped from the training set.
  const Index rows = embedded.size() - 1;
  Eigen::VectorXd succ(rows);
  for (Index r = 0; r < rows; ++r)
    succ[r] = series.values[embedded.time_index[static_cast<std::size_t>(r)] + 1];
  PointCloud train;
  train.points = embedded.points.topRows(rows);
  train.time_index.assign(embedded.time_index.begin(), embedded.time_index.begin() + rows);
  train.dt = embedded.dt;

  std::vector<double> record(series.values.begin(), series.values.end());
  const Index m = spec.dimension();

  FreeRun out;
  out.values.dt = series.dt;
  std::vector<double> produced;
  produced.reserve(static_cast<std::size_t>(horizon));
  for (Index s = 0; s < horizon; ++s) {
    Eigen::RowVectorXd window(m);
    const Index end = static_cast<Index>(record.size()) - 1;
    window[0] = record[static_cast<std::size_t>(end)];
    for (std::size_t j = 0; j < spec.lags.size(); ++j)
      window[static_cast<Index>(j) + 1] = record[static_cast<std::size_t>(end - spec.lags[j])];
    double next = 0.0;
    try {
      next = knn_predict(train, succ, window, predictor);
    } catch (const std::runtime_error&) {
      out.truncated = true;
      break;
    }
    produced.push_back(next);
    record.push_back(next);
  }
  out.values.values = Eigen::Map<const Eigen::VectorXd>(
      produced.data(), static_cast<Index>(produced.size()));
  return out;
}

/// Forecast-quality summary.  `horizon` is the first 1-based step whose
/// absolute error exceeds theta times the truth's standard deviation, unset
/// when the error never crosses.  `correlation` is unset when either input
/// has zero variance.
struct ForecastReport {
  double rmse = 0.0;
  std::optional<double> correlation;
  std::optional<Index> horizon;
};

inline ForecastReport forecast_metrics(const TimeSeries& pred, const TimeSeries& truth,
                                       double theta = 0.5) {
  const Index n = pred.size();
  if (n != truth.size()) throw std::invalid_argument("forecast_metrics: length mismatch");
  if (n == 0) throw std::invalid_argument("forecast_metrics: empty input");
  if (!(theta > 0.0)) throw std::invalid_argument("forecast_metrics: theta must be positive");

  const Eigen::VectorXd err = pred.values - truth.values;
  ForecastReport rep;
  rep.rmse = std::sqrt(err.squaredNorm() / static_cast<double>(n));

  const Eigen::VectorXd dp = pred.values.array() - pred.values.mean();
  const Eigen::VectorXd dq = truth.values.array() - truth.values.mean();
  const double vp = dp.squaredNorm();
  const double vq = dq.squaredNorm();
  if (vp > 0.0 && vq > 0.0)
    rep.correlation = std::clamp(dp.dot(dq) / std::sqrt(vp * vq), -1.0, 1.0);

  const double sigma = std::sqrt(vq / static_cast<double>(n));
  for (Index i = 0; i < n; ++i)
    if (std::abs(err[i]) > theta * sigma) {
      rep.horizon = i + 1;
      break;
    }
  return rep;
}

}  // namespace nltsa
