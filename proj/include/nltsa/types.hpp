#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace nltsa {

using Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using IndexVec = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

/// Uniformly sampled scalar signal.
template <typename Scalar>
struct TimeSeriesT {
  Vec<Scalar> values;
  double dt = 1.0;
  std::string name;

  Index size() const { return values.size(); }
};
using TimeSeries = TimeSeriesT<double>;

/// Multichannel signal; one row per sample, one column per state variable.
template <typename Scalar>
struct TrajectoryT {
  Mat<Scalar> states;
  double dt = 1.0;
  std::vector<std::string> names;

  Index samples() const { return states.rows(); }
  Index dimension() const { return states.cols(); }

  TimeSeriesT<Scalar> column(Index j) const {
    if (j < 0 || j >= states.cols()) throw std::out_of_range("trajectory column out of range");
    TimeSeriesT<Scalar> s;
    s.values = states.col(j);
    s.dt = dt;
    if (j < static_cast<Index>(names.size())) s.name = names[j];
    return s;
  }
};
using Trajectory = TrajectoryT<double>;

/// Point set in state space; each point remembers the sample index it was built from.
template <typename Scalar>
struct PointCloudT {
  Mat<Scalar> points;  // one row per point
  std::vector<Index> time_index;
  double dt = 1.0;

  Index size() const { return points.rows(); }
  Index dimension() const { return points.cols(); }
};
using PointCloud = PointCloudT<double>;

/// Straight-line fit over the best window of an (x, y) profile.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  Index first = 0;  // inclusive window bounds into the input profile
  Index last = 0;
  Eigen::VectorXd residuals;  // one per point inside the window
  bool low_confidence = false;
};

inline PointCloud cloud_from_trajectory(const Trajectory& traj) {
  PointCloud c;
  c.points = traj.states;
  c.dt = traj.dt;
  c.time_index.resize(traj.samples());
  for (Index i = 0; i < traj.samples(); ++i) c.time_index[i] = i;
  return c;
}

inline TimeSeries make_series(Eigen::VectorXd v, double dt = 1.0, std::string name = {}) {
  TimeSeries s;
  s.values = std::move(v);
  s.dt = dt;
  s.name = std::move(name);
  return s;
}

}  // namespace nltsa
