#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nltsa/random.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

// ---------------------------------------------------------------------------
// Discrete maps
// ---------------------------------------------------------------------------

struct LogisticMap {
  double r = 4.0;
};
struct HenonMap {
  double a = 1.4;
  double b = 0.3;
};
/// Plane form of the laser-cavity map: t = kappa - alpha / (1 + x^2 + y^2),
/// x' = p + u (x cos t - y sin t), y' = u (x sin t + y cos t).
struct IkedaMap {
  double p = 1.0;
  double u = 0.9;
  double kappa = 0.4;
  double alpha = 6.0;
};
struct BernoulliMap {};  // x' = 2x mod 1
struct TentMap {
  double mu = 2.0;  // x' = mu * min(x, 1 - x)
};
/// Rigid rotation x' = frac(x + alpha).
struct KroneckerMap {
  double alpha = 0.25;
};

using MapSpec = std::variant<LogisticMap, HenonMap, IkedaMap, BernoulliMap, TentMap, KroneckerMap>;

inline Index map_dimension(const MapSpec& spec) {
  if (std::holds_alternative<HenonMap>(spec) || std::holds_alternative<IkedaMap>(spec)) return 2;
  return 1;
}

inline std::vector<std::string> map_names(const MapSpec& spec) {
  if (map_dimension(spec) == 2) return {"x", "y"};
  return {"x"};
}

namespace detail {

inline double frac01(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;  // guards floor rounding at the top edge
}

inline void map_step(const MapSpec& spec, Eigen::VectorXd& x) {
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogisticMap>) {
          x[0] = m.r * x[0] * (1.0 - x[0]);
        } else if constexpr (std::is_same_v<M, HenonMap>) {
          double xn = 1.0 - m.a * x[0] * x[0] + x[1];
          double yn = m.b * x[0];
          x[0] = xn;
          x[1] = yn;
        } else if constexpr (std::is_same_v<M, IkedaMap>) {
          double t = m.kappa - m.alpha / (1.0 + x[0] * x[0] + x[1] * x[1]);
          double c = std::cos(t), s = std::sin(t);
          double xn = m.p + m.u * (x[0] * c - x[1] * s);
          double yn = m.u * (x[0] * s + x[1] * c);
          x[0] = xn;
          x[1] = yn;
        } else if constexpr (std::is_same_v<M, BernoulliMap>) {
          double d = 2.0 * x[0];
          x[0] = d >= 1.0 ? d - 1.0 : d;
        } else if constexpr (std::is_same_v<M, TentMap>) {
          x[0] = m.mu * std::min(x[0], 1.0 - x[0]);
        } else if constexpr (std::is_same_v<M, KroneckerMap>) {
          x[0] = frac01(x[0] + m.alpha);
        }
      },
      spec);
}

inline void validate_map(const MapSpec& spec, const Eigen::VectorXd& x0) {
  if (x0.size() != map_dimension(spec)) throw std::invalid_argument("iterate_map: x0 dimension mismatch");
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogisticMap>) {
          if (m.r <= 0.0 || m.r > 4.0) throw std::invalid_argument("iterate_map: logistic r must lie in (0, 4]");
          if (x0[0] < 0.0 || x0[0] > 1.0) throw std::invalid_argument("iterate_map: logistic x0 must lie in [0, 1]");
        } else if constexpr (std::is_same_v<M, BernoulliMap>) {
          if (x0[0] < 0.0 || x0[0] >= 1.0) throw std::invalid_argument("iterate_map: doubling-map x0 must lie in [0, 1)");
        } else if constexpr (std::is_same_v<M, TentMap>) {
          if (m.mu <= 0.0 || m.mu > 2.0) throw std::invalid_argument("iterate_map: tent mu must lie in (0, 2]");
          if (x0[0] < 0.0 || x0[0] > 1.0) throw std::invalid_argument("iterate_map: tent x0 must lie in [0, 1]");
        } else if constexpr (std::is_same_v<M, KroneckerMap>) {
          if (x0[0] < 0.0 || x0[0] >= 1.0) throw std::invalid_argument("iterate_map: rotation x0 must lie in [0, 1)");
        }
      },
      spec);
}

}  // namespace detail

/// Iterates a map. Row 0 holds the state after `discard` transient steps; each
/// later row advances the map once. Sampling interval is 1 per iterate.
inline Trajectory iterate_map(const MapSpec& spec, const Eigen::VectorXd& x0, Index n, Index discard = 0) {
  if (n < 1) throw std::invalid_argument("iterate_map: need at least one sample");
  if (discard < 0) throw std::invalid_argument("iterate_map: discard must be non-negative");
  detail::validate_map(spec, x0);

  Eigen::VectorXd x = x0;
  for (Index t = 0; t < discard; ++t) detail::map_step(spec, x);

  Trajectory traj;
  traj.dt = 1.0;
  traj.names = map_names(spec);
  traj.states.resize(n, x.size());
  traj.states.row(0) = x;
  for (Index t = 1; t < n; ++t) {
    detail::map_step(spec, x);
    if (!x.allFinite())
      throw std::runtime_error("iterate_map: orbit diverged at step " + std::to_string(discard + t));
    traj.states.row(t) = x;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

struct LorenzFlow {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};
struct RosslerFlow {
  double a = 0.165;
  double b = 0.4;
  double c = 8.5;
};
/// Two identical x-coupled oscillators; coupling adds K (x_other - x_own).
struct CoupledRosslerFlow {
  double a = 0.165;
  double b = 0.4;
  double c = 8.5;
  double coupling = 0.0;
};
/// Ring of FitzHugh-Nagumo units, each coupled to its `range` neighbours on
/// both sides through the rotation matrix [[cos phi, sin phi], [-sin phi, cos phi]].
/// State layout: (u_0..u_{n-1}, v_0..v_{n-1}). range < 0 selects round(0.35 n).
struct FhnRingFlow {
  Index n = 50;
  Index range = -1;
  double eps = 0.05;
  double a = 0.05;
  double sigma = 0.1;
  double phi = std::numbers::pi / 2.0 - 0.1;
};

using FlowSpec = std::variant<LorenzFlow, RosslerFlow, CoupledRosslerFlow, FhnRingFlow>;

inline Index fhn_range(const FhnRingFlow& f) {
  Index r = f.range >= 0 ? f.range : static_cast<Index>(std::lround(0.35 * static_cast<double>(f.n)));
  return r;
}

inline Index flow_dimension(const FlowSpec& spec) {
  return std::visit(
      [](const auto& f) -> Index {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LorenzFlow> || std::is_same_v<F, RosslerFlow>) return 3;
        if constexpr (std::is_same_v<F, CoupledRosslerFlow>) return 6;
        if constexpr (std::is_same_v<F, FhnRingFlow>) return 2 * f.n;
        return 0;
      },
      spec);
}

inline std::vector<std::string> flow_names(const FlowSpec& spec) {
  return std::visit(
      [](const auto& f) -> std::vector<std::string> {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LorenzFlow> || std::is_same_v<F, RosslerFlow>)
          return {"x", "y", "z"};
        else if constexpr (std::is_same_v<F, CoupledRosslerFlow>)
          return {"x1", "y1", "z1", "x2", "y2", "z2"};
        else {
          std::vector<std::string> names;
          for (Index k = 0; k < f.n; ++k) names.push_back("u" + std::to_string(k));
          for (Index k = 0; k < f.n; ++k) names.push_back("v" + std::to_string(k));
          return names;
        }
      },
      spec);
}

/// Vector field of a flow, exposed so structure can be probed directly.
inline Eigen::VectorXd flow_rhs(const FlowSpec& spec, const Eigen::VectorXd& s) {
  Eigen::VectorXd d(s.size());
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LorenzFlow>) {
          d[0] = f.sigma * (s[1] - s[0]);
          d[1] = s[0] * (f.rho - s[2]) - s[1];
          d[2] = s[0] * s[1] - f.beta * s[2];
        } else if constexpr (std::is_same_v<F, RosslerFlow>) {
          d[0] = -s[1] - s[2];
          d[1] = s[0] + f.a * s[1];
          d[2] = f.b + s[2] * (s[0] - f.c);
        } else if constexpr (std::is_same_v<F, CoupledRosslerFlow>) {
          d[0] = -s[1] - s[2] + f.coupling * (s[3] - s[0]);
          d[1] = s[0] + f.a * s[1];
          d[2] = f.b + s[2] * (s[0] - f.c);
          d[3] = -s[4] - s[5] + f.coupling * (s[0] - s[3]);
          d[4] = s[3] + f.a * s[4];
          d[5] = f.b + s[5] * (s[3] - f.c);
        } else if constexpr (std::is_same_v<F, FhnRingFlow>) {
          const Index n = f.n;
          const Index R = fhn_range(f);
          const double w = f.sigma / (2.0 * static_cast<double>(R));
          const double buu = std::cos(f.phi), buv = std::sin(f.phi);
          const double bvu = -std::sin(f.phi), bvv = std::cos(f.phi);
          for (Index k = 0; k < n; ++k) {
            double cu = 0.0, cv = 0.0;
            for (Index off = 1; off <= R; ++off) {
              Index jl = (k - off + n) % n;
              Index jr = (k + off) % n;
              cu += (s[jl] - s[k]) + (s[jr] - s[k]);
              cv += (s[n + jl] - s[n + k]) + (s[n + jr] - s[n + k]);
            }
            double u = s[k], v = s[n + k];
            d[k] = (u - u * u * u / 3.0 - v + w * (buu * cu + buv * cv)) / f.eps;
            d[n + k] = u + f.a + w * (bvu * cu + bvv * cv);
          }
        }
      },
      spec);
  return d;
}

/// One classical fourth-order Runge-Kutta step of an autonomous field.
template <typename Field>
Eigen::VectorXd rk4_step(const Field& field, const Eigen::VectorXd& x, double dt) {
  Eigen::VectorXd k1 = field(x);
  Eigen::VectorXd k2 = field(x + (0.5 * dt) * k1);
  Eigen::VectorXd k3 = field(x + (0.5 * dt) * k2);
  Eigen::VectorXd k4 = field(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 integration. Row 0 holds the state after `discard` steps;
/// each later row advances time by dt.
inline Trajectory integrate_flow(const FlowSpec& spec, const Eigen::VectorXd& x0, double dt, Index n,
                                 Index discard = 0) {
  if (n < 1) throw std::invalid_argument("integrate_flow: need at least one sample");
  if (dt <= 0.0) throw std::invalid_argument("integrate_flow: dt must be positive");
  if (discard < 0) throw std::invalid_argument("integrate_flow: discard must be non-negative");
  if (x0.size() != flow_dimension(spec)) throw std::invalid_argument("integrate_flow: x0 dimension mismatch");
  if (std::holds_alternative<FhnRingFlow>(spec)) {
    const auto& f = std::get<FhnRingFlow>(spec);
    Index R = fhn_range(f);
    if (f.n < 3 || R < 1 || 2 * R >= f.n)
      throw std::invalid_argument("integrate_flow: ring coupling range must satisfy 1 <= R < n/2");
  }

  auto field = [&spec](const Eigen::VectorXd& s) { return flow_rhs(spec, s); };
  Eigen::VectorXd x = x0;
  for (Index t = 0; t < discard; ++t) x = rk4_step(field, x, dt);

  Trajectory traj;
  traj.dt = dt;
  traj.names = flow_names(spec);
  traj.states.resize(n, x.size());
  traj.states.row(0) = x;
  for (Index t = 1; t < n; ++t) {
    x = rk4_step(field, x, dt);
    if (!x.allFinite())
      throw std::runtime_error("integrate_flow: state diverged at step " + std::to_string(discard + t));
    traj.states.row(t) = x;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Opinion dynamics on networks
// ---------------------------------------------------------------------------

enum class OpinionRule { degroot, fj, voter, bcm_dw, bcm_hk };
enum class UpdateMode { synchronous, asynchronous };

struct OpinionModel {
  OpinionRule rule = OpinionRule::degroot;
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd susceptibility;  // diagonal D of the anchored averaging rule
  double mu = 0.5;                 // compromise step for bounded-confidence rules
  double confidence = 1.0;         // interaction threshold c
  std::optional<UpdateMode> mode;  // defaults to the rule's natural mode
};

namespace detail {

inline void require_row_stochastic(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": adjacency must be square");
  for (Index i = 0; i < a.rows(); ++i) {
    if ((a.row(i).array() < 0.0).any())
      throw std::invalid_argument(std::string(who) + ": adjacency weights must be non-negative");
    if (std::abs(a.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument(std::string(who) + ": adjacency must be row-stochastic");
  }
}

inline UpdateMode natural_mode(OpinionRule rule) {
  switch (rule) {
    case OpinionRule::voter:
    case OpinionRule::bcm_dw:
      return UpdateMode::asynchronous;
    default:
      return UpdateMode::synchronous;
  }
}

}  // namespace detail

/// Evolves an opinion vector. Row 0 of the result is o0; row t is the state
/// after t updates. A synchronous update refreshes every agent at once; an
/// asynchronous update touches a single random agent (voter) or edge (pairwise
/// bounded confidence), so one row = one elementary event.
inline Trajectory simulate_opinions(const OpinionModel& model, const Eigen::VectorXd& o0, Index n,
                                    RandomSource* rng = nullptr) {
  if (n < 1) throw std::invalid_argument("simulate_opinions: need at least one sample");
  const Index N = o0.size();
  if (model.adjacency.rows() != N || model.adjacency.cols() != N)
    throw std::invalid_argument("simulate_opinions: adjacency size does not match the opinion vector");

  UpdateMode mode = model.mode.value_or(detail::natural_mode(model.rule));
  if (mode != detail::natural_mode(model.rule))
    throw std::invalid_argument("simulate_opinions: unsupported update mode for this rule");
  bool needs_rng = model.rule == OpinionRule::voter || model.rule == OpinionRule::bcm_dw;
  if (needs_rng && rng == nullptr)
    throw std::invalid_argument("simulate_opinions: this rule requires a random source");

  const Eigen::MatrixXd& A = model.adjacency;
  if (model.rule == OpinionRule::degroot || model.rule == OpinionRule::fj)
    detail::require_row_stochastic(A, "simulate_opinions");
  Eigen::VectorXd d;
  if (model.rule == OpinionRule::fj) {
    if (model.susceptibility.size() != N)
      throw std::invalid_argument("simulate_opinions: susceptibility size mismatch");
    if ((model.susceptibility.array() < 0.0).any() || (model.susceptibility.array() > 1.0).any())
      throw std::invalid_argument("simulate_opinions: susceptibility entries must lie in [0, 1]");
    d = model.susceptibility;
  }

  std::vector<std::pair<Index, Index>> edges;
  if (model.rule == OpinionRule::bcm_dw) {
    for (Index i = 0; i < N; ++i)
      for (Index j = i + 1; j < N; ++j)
        if (A(i, j) > 0.0 || A(j, i) > 0.0) edges.emplace_back(i, j);
    if (edges.empty()) throw std::invalid_argument("simulate_opinions: the interaction graph has no edges");
  }

  Trajectory traj;
  traj.dt = 1.0;
  traj.states.resize(n, N);
  Eigen::VectorXd o = o0;
  traj.states.row(0) = o;

  for (Index t = 1; t < n; ++t) {
    switch (model.rule) {
      case OpinionRule::degroot:
        o = (A * o).eval();
        break;
      case OpinionRule::fj:
        o = (d.asDiagonal() * (A * o) + (Eigen::VectorXd::Ones(N) - d).asDiagonal() * o0).eval();
        break;
      case OpinionRule::voter: {
        Index i = rng->index(N);
        double wsum = A.row(i).sum() - A(i, i);
        if (wsum > 0.0) {
          double pick = rng->uniform() * wsum;
          double acc = 0.0;
          for (Index j = 0; j < N; ++j) {
            if (j == i) continue;
            acc += A(i, j);
            if (pick < acc) {
              o[i] = o[j];
              break;
            }
          }
        }
        break;
      }
      case OpinionRule::bcm_dw: {
        auto [i, j] = edges[static_cast<std::size_t>(rng->index(static_cast<Index>(edges.size())))];
        double diff = o[j] - o[i];
        if (std::abs(diff) < model.confidence) {
          o[i] += model.mu * diff;
          o[j] -= model.mu * diff;
        }
        break;
      }
      case OpinionRule::bcm_hk: {
        Eigen::VectorXd next = o;
        for (Index i = 0; i < N; ++i) {
          double wsum = A.row(i).sum();
          if (wsum <= 0.0) continue;
          double mean_i = A.row(i).dot(o) / wsum;
          if (std::abs(mean_i - o[i]) < model.confidence) next[i] = o[i] + model.mu * (mean_i - o[i]);
        }
        o = next;
        break;
      }
    }
    traj.states.row(t) = o;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Signal helpers
// ---------------------------------------------------------------------------

/// Four-quadrant phase of (x, y), unwrapped so successive samples never jump
/// by more than pi.
inline Eigen::VectorXd phase_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("phase_estimate: component length mismatch");
  if (x.size() == 0) throw std::invalid_argument("phase_estimate: empty input");
  Eigen::VectorXd phase(x.size());
  double prev_raw = 0.0;
  for (Index t = 0; t < x.size(); ++t) {
    if (x[t] == 0.0 && y[t] == 0.0)
      throw std::invalid_argument("phase_estimate: phase undefined at the origin (sample " + std::to_string(t) + ")");
    double raw = std::atan2(y[t], x[t]);
    if (t == 0) {
      phase[t] = raw;
    } else {
      double delta = raw - prev_raw;
      delta -= 2.0 * std::numbers::pi * std::round(delta / (2.0 * std::numbers::pi));
      phase[t] = phase[t - 1] + delta;
    }
    prev_raw = raw;
  }
  return phase;
}

struct SyncError {
  Eigen::VectorXd per_sample;
  double tail_mean = 0.0;  // mean over the final fifth of the record
};

inline SyncError sync_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("sync_error: trajectory shapes differ");
  if (a.rows() == 0) throw std::invalid_argument("sync_error: empty trajectories");
  SyncError e;
  e.per_sample = (a - b).rowwise().norm();
  Index tail = std::max<Index>(1, a.rows() / 5);
  e.tail_mean = e.per_sample.tail(tail).mean();
  return e;
}

struct NoiseSpec {
  std::optional<double> sigma;  // absolute noise scale
  std::optional<double> snr;    // signal std over noise std
};

inline TimeSeries add_noise(const TimeSeries& s, const NoiseSpec& spec, RandomSource& rng) {
  if (spec.sigma.has_value() == spec.snr.has_value())
    throw std::invalid_argument("add_noise: set exactly one of sigma or snr");
  double sigma;
  if (spec.sigma) {
    sigma = *spec.sigma;
    if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be non-negative");
  } else {
    if (*spec.snr <= 0.0) throw std::invalid_argument("add_noise: snr must be positive");
    double n = static_cast<double>(s.size());
    if (n < 2) throw std::invalid_argument("add_noise: need at least two samples for snr scaling");
    double mean = s.values.mean();
    double sd = std::sqrt((s.values.array() - mean).square().sum() / n);
    if (sd == 0.0) throw std::invalid_argument("add_noise: constant signal has no snr scale");
    sigma = sd / *spec.snr;
  }
  TimeSeries out = s;
  for (Index t = 0; t < out.size(); ++t) out.values[t] += sigma * rng.gaussian();
  return out;
}

}  // namespace nltsa
