#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nltsa/embedding.hpp"
#include "nltsa/parallel.hpp"
#include "nltsa/random.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

namespace detail {

inline std::vector<std::complex<double>> dft(const Eigen::VectorXd& values) {
  Eigen::FFT<double> fft;
  std::vector<double> in(values.data(), values.data() + values.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

inline Eigen::VectorXd idft_real(const std::vector<std::complex<double>>& spectrum,
                                 double* max_imag = nullptr) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.inv(out, spectrum);
  Eigen::VectorXd values(static_cast<Index>(out.size()));
  double imag = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    values[static_cast<Index>(i)] = out[i].real();
    imag = std::max(imag, std::abs(out[i].imag()));
  }
  if (max_imag) *max_imag = imag;
  return values;
}

/// Indices that sort `values` ascending, ties kept in index order.
inline std::vector<Index> stable_order(const Eigen::VectorXd& values) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values[a] < values[b]; });
  return order;
}

/// Rotates the phases of bins [k_lo, k_hi] by fresh uniform angles, mirroring
/// each rotation onto the conjugate bin so the inverse transform stays real.
inline void randomize_phases(std::vector<std::complex<double>>& spectrum, Index k_lo, Index k_hi,
                             RandomSource& rng) {
  const Index n = static_cast<Index>(spectrum.size());
  for (Index k = k_lo; k <= k_hi; ++k) {
    const double psi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const std::complex<double> rot(std::cos(psi), std::sin(psi));
    spectrum[static_cast<std::size_t>(k)] *= rot;
    spectrum[static_cast<std::size_t>(n - k)] *= std::conj(rot);
  }
}

/// Highest bin with an independent phase: the DC bin and (for even length)
/// the self-conjugate Nyquist bin stay untouched.
inline Index top_free_bin(Index n) { return (n - 1) / 2; }

/// Writes the sorted values of `from` into `into` following the ranks of
/// `pattern`: the smallest value lands where pattern is smallest, and so on.
inline Eigen::VectorXd rank_remap(const Eigen::VectorXd& from, const Eigen::VectorXd& pattern) {
  Eigen::VectorXd sorted = from;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  std::vector<Index> order = stable_order(pattern);
  Eigen::VectorXd out(from.size());
  for (Index j = 0; j < from.size(); ++j) out[order[static_cast<std::size_t>(j)]] = sorted[j];
  return out;
}

}  // namespace detail

/// Amplitudes |X_k| of the discrete Fourier transform, all bins.
inline Eigen::VectorXd amplitude_spectrum(const TimeSeries& series) {
  auto spec = detail::dft(series.values);
  Eigen::VectorXd amp(static_cast<Index>(spec.size()));
  for (std::size_t k = 0; k < spec.size(); ++k) amp[static_cast<Index>(k)] = std::abs(spec[k]);
  return amp;
}

// ---------------------------------------------------------------------------
// Generators

/// Plain permutation: destroys all temporal structure, keeps the value
/// multiset exactly.
inline TimeSeries shuffle_surrogate(const TimeSeries& series, RandomSource& rng) {
  TimeSeries out = series;
  rng.shuffle(out.values.data(), out.values.data() + out.values.size());
  return out;
}

/// Phase-randomized surrogate: keeps every Fourier amplitude, draws fresh
/// phases for the independent bins (conjugate-mirrored so the inverse stays
/// real).  Optionally reports the largest imaginary residue discarded when
/// taking the real part.
inline TimeSeries ft_surrogate(const TimeSeries& series, RandomSource& rng,
                               double* max_imag = nullptr) {
  const Index n = series.values.size();
  TimeSeries out = series;
  if (n < 2) {
    if (max_imag) *max_imag = 0.0;
    return out;
  }
  auto spectrum = detail::dft(series.values);
  detail::randomize_phases(spectrum, 1, detail::top_free_bin(n), rng);
  out.values = detail::idft_real(spectrum, max_imag);
  return out;
}

/// Amplitude-adjusted surrogate: a Gaussian copy of the series' rank
/// structure is phase-randomized, and the original values are reordered to
/// follow it.  Keeps the value multiset exactly and the spectrum
/// approximately.
inline TimeSeries aaft_surrogate(const TimeSeries& series, RandomSource& rng) {
  const Index n = series.values.size();
  TimeSeries out = series;
  if (n < 2) return out;

  Eigen::VectorXd gauss(n);
  for (Index t = 0; t < n; ++t) gauss[t] = rng.gaussian();
  TimeSeries driver = series;
  driver.values = detail::rank_remap(gauss, series.values);

  TimeSeries randomized = ft_surrogate(driver, rng);
  out.values = detail::rank_remap(series.values, randomized.values);
  return out;
}

struct IaaftResult {
  TimeSeries series;
  Index iterations = 0;
  Eigen::VectorXd spectral_errors;  // relative L2 amplitude mismatch per iteration
};

/// Iterative refinement of the amplitude-adjusted surrogate: alternate
/// imposing the target amplitude spectrum and restoring the value multiset
/// until the spectral mismatch stops improving.
inline IaaftResult iaaft_surrogate(const TimeSeries& series, RandomSource& rng,
                                   Index max_iter = 100, double tol = 1e-8) {
  if (max_iter < 1) throw std::invalid_argument("iaaft_surrogate: max_iter must be >= 1");
  const Index n = series.values.size();
  IaaftResult result;
  result.series = series;
  if (n < 2) return result;

  const auto target = detail::dft(series.values);
  double target_norm2 = 0.0;
  for (const auto& c : target) target_norm2 += std::norm(c);
  const double target_norm = std::sqrt(target_norm2);

  Eigen::VectorXd current = shuffle_surrogate(series, rng).values;
  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(max_iter));

  for (Index it = 0; it < max_iter; ++it) {
    auto spectrum = detail::dft(current);
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
      const double amp = std::abs(spectrum[k]);
      const double want = std::abs(target[k]);
      spectrum[k] = amp > 0.0 ? spectrum[k] * (want / amp) : std::complex<double>(want, 0.0);
    }
    current = detail::rank_remap(series.values, detail::idft_real(spectrum));

    auto achieved = detail::dft(current);
    double err2 = 0.0;
    for (std::size_t k = 0; k < achieved.size(); ++k) {
      const double diff = std::abs(achieved[k]) - std::abs(target[k]);
      err2 += diff * diff;
    }
    const double err = target_norm > 0.0 ? std::sqrt(err2) / target_norm : 0.0;
    errors.push_back(err);
    if (it > 0) {
      const double prev = errors[static_cast<std::size_t>(it) - 1];
      if (prev <= 0.0 || std::abs(err - prev) / prev < tol) break;
    }
  }

  result.series.values = current;
  result.iterations = static_cast<Index>(errors.size());
  result.spectral_errors =
      Eigen::Map<Eigen::VectorXd>(errors.data(), static_cast<Index>(errors.size()));
  return result;
}

/// Band-limited phase randomization: bins at or above f_cut (as a fraction of
/// the Nyquist frequency) get fresh phases, everything below is carried over
/// untouched, preserving trends and slow periodicities.
inline TimeSeries tfts_surrogate(const TimeSeries& series, double f_cut, RandomSource& rng) {
  if (!(f_cut > 0.0) || !(f_cut < 1.0))
    throw std::invalid_argument("tfts_surrogate: f_cut must lie in (0, 1)");
  const Index n = series.values.size();
  TimeSeries out = series;
  if (n < 2) return out;

  const Index top = detail::top_free_bin(n);
  Index k_lo = top + 1;  // empty range unless some bin reaches the cutoff
  for (Index k = 1; k <= top; ++k) {
    if (2.0 * static_cast<double>(k) / static_cast<double>(n) >= f_cut) {
      k_lo = k;
      break;
    }
  }
  auto spectrum = detail::dft(series.values);
  detail::randomize_phases(spectrum, k_lo, top, rng);
  out.values = detail::idft_real(spectrum);
  return out;
}

/// Small-scale index jitter: each sample's index is perturbed by A times a
/// Gaussian draw and values are re-read in the perturbed order.  Local
/// structure survives for small A, distant structure is untouched.
inline TimeSeries sss_surrogate(const TimeSeries& series, double amplitude, RandomSource& rng) {
  if (!(amplitude > 0.0)) throw std::invalid_argument("sss_surrogate: amplitude must be > 0");
  const Index n = series.values.size();
  Eigen::VectorXd jittered(n);
  for (Index t = 0; t < n; ++t)
    jittered[t] = static_cast<double>(t) + amplitude * rng.gaussian();
  std::vector<Index> order = detail::stable_order(jittered);
  TimeSeries out = series;
  for (Index t = 0; t < n; ++t) out.values[t] = series.values[order[static_cast<std::size_t>(t)]];
  return out;
}

struct PpsResult {
  TimeSeries series;
  Index restarts = 0;  // steps where every candidate weight vanished
};

/// Random walk over the delay-embedded states: from the current state, a
/// candidate state is drawn with probability proportional to
/// exp(-distance/rho) and the walk continues from that candidate's successor.
/// Transitions that would land back on the current state are excluded, so the
/// walk cannot freeze in place.  Weights are rescaled by the closest
/// candidate, which keeps the rho -> 0 limit (follow the original orbit)
/// exact instead of underflowing.
inline PpsResult pps_surrogate(const TimeSeries& series, Index m, Index tau, double rho,
                               RandomSource& rng, Index length = 0) {
  if (!(rho > 0.0)) throw std::invalid_argument("pps_surrogate: rho must be > 0");
  PointCloud cloud = delay_embed(series, uniform_spec(tau, m));
  const Index states = cloud.size();
  if (states < 3) throw std::invalid_argument("pps_surrogate: too few embedded states");
  if (length <= 0) length = series.values.size();

  PpsResult result;
  result.series.dt = series.dt;
  result.series.name = series.name;
  result.series.values.resize(length);

  Eigen::VectorXd weights(states - 1);
  Index current = rng.index(states);
  for (Index i = 0; i < length; ++i) {
    result.series.values[i] = cloud.points(current, 0);
    if (i + 1 == length) break;

    double nearest = std::numeric_limits<double>::infinity();
    for (Index t = 0; t + 1 < states; ++t) {
      if (t + 1 == current) continue;
      nearest = std::min(nearest, (cloud.points.row(t) - cloud.points.row(current)).norm());
    }
    double total = 0.0;
    for (Index t = 0; t + 1 < states; ++t) {
      if (t + 1 == current) {
        weights[t] = 0.0;
        continue;
      }
      const double d = (cloud.points.row(t) - cloud.points.row(current)).norm();
      weights[t] = std::exp(-(d - nearest) / rho);
      total += weights[t];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      current = rng.index(states);
      ++result.restarts;
      continue;
    }
    double draw = rng.uniform() * total;
    Index chosen = states - 2;
    for (Index t = 0; t + 1 < states; ++t) {
      draw -= weights[t];
      if (draw < 0.0) {
        chosen = t;
        break;
      }
    }
    current = chosen + 1;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ensembles and the rank test

enum class SurrogateKind { shuffle, ft, aaft, iaaft, tfts, sss, pps };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::aaft;
  double f_cut = 0.5;      // tfts: fraction of Nyquist above which phases shuffle
  double amplitude = 1.0;  // sss: index jitter scale
  Index m = 3;             // pps embedding dimension
  Index tau = 1;           // pps embedding lag
  double rho = 0.1;        // pps neighbour scale, in data units
  Index max_iter = 100;    // iaaft
  double tol = 1e-8;       // iaaft
};

inline std::string surrogate_name(const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateKind::shuffle: return "shuffle";
    case SurrogateKind::ft: return "ft";
    case SurrogateKind::aaft: return "aaft";
    case SurrogateKind::iaaft:
      return "iaaft(max_iter=" + std::to_string(spec.max_iter) + ")";
    case SurrogateKind::tfts: return "tfts(f_cut=" + std::to_string(spec.f_cut) + ")";
    case SurrogateKind::sss: return "sss(amplitude=" + std::to_string(spec.amplitude) + ")";
    case SurrogateKind::pps:
      return "pps(m=" + std::to_string(spec.m) + ",tau=" + std::to_string(spec.tau) +
             ",rho=" + std::to_string(spec.rho) + ")";
  }
  return "unknown";
}

inline TimeSeries make_surrogate(const TimeSeries& series, const SurrogateSpec& spec,
                                 RandomSource& rng) {
  switch (spec.kind) {
    case SurrogateKind::shuffle: return shuffle_surrogate(series, rng);
    case SurrogateKind::ft: return ft_surrogate(series, rng);
    case SurrogateKind::aaft: return aaft_surrogate(series, rng);
    case SurrogateKind::iaaft:
      return iaaft_surrogate(series, rng, spec.max_iter, spec.tol).series;
    case SurrogateKind::tfts: return tfts_surrogate(series, spec.f_cut, rng);
    case SurrogateKind::sss: return sss_surrogate(series, spec.amplitude, rng);
    case SurrogateKind::pps:
      return pps_surrogate(series, spec.m, spec.tau, spec.rho, rng).series;
  }
  throw std::invalid_argument("make_surrogate: unknown generator");
}

struct SurrogateEnsemble {
  TimeSeries original;
  std::vector<TimeSeries> members;
  std::string generator;
  std::uint64_t seed = 0;
};

/// Generates `count` members, each from its own derived random stream, so the
/// ensemble is reproducible and independent of the worker count.
inline SurrogateEnsemble surrogate_ensemble(const TimeSeries& series, const SurrogateSpec& spec,
                                            Index count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("surrogate_ensemble: count must be >= 1");
  SurrogateEnsemble ensemble;
  ensemble.original = series;
  ensemble.generator = surrogate_name(spec);
  ensemble.seed = seed;
  ensemble.members.resize(static_cast<std::size_t>(count));

  RandomSource root(seed);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
  parallel_chunks(count, [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      try {
        RandomSource stream = root.stream(static_cast<std::uint64_t>(i));
        ensemble.members[static_cast<std::size_t>(i)] = make_surrogate(series, spec, stream);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  });
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return ensemble;
}

enum class TestSide { low, high, two };

struct SurrogateStatistic {
  std::string name;
  std::function<double(const TimeSeries&)> fn;
};

struct TestReport {
  std::string statistic;
  double observed = 0.0;
  Eigen::VectorXd surrogate_values;
  Index rank = 0;  // 1-based position of the observed value from the tested tail
  double p_value = 1.0;
  TestSide side = TestSide::two;
};

/// Rank test of the observed statistic against the surrogate null: with n
/// surrogates the attainable one-sided p-values are k/(n+1).  Ties count as
/// more extreme, which can only make the test more conservative.
inline TestReport surrogate_test(const TimeSeries& series, const SurrogateSpec& spec,
                                 const SurrogateStatistic& statistic, Index n_surrogates = 39,
                                 TestSide side = TestSide::two, std::uint64_t seed = 0) {
  if (!statistic.fn) throw std::invalid_argument("surrogate_test: statistic not set");
  SurrogateEnsemble ensemble = surrogate_ensemble(series, spec, n_surrogates, seed);

  TestReport report;
  report.statistic = statistic.name;
  report.side = side;
  report.observed = statistic.fn(series);
  report.surrogate_values.resize(n_surrogates);

  std::vector<std::string> failures(static_cast<std::size_t>(n_surrogates));
  parallel_chunks(n_surrogates, [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      try {
        report.surrogate_values[i] = statistic.fn(ensemble.members[static_cast<std::size_t>(i)]);
      } catch (const std::exception& e) {
        failures[static_cast<std::size_t>(i)] = e.what();
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = "unknown error";
      }
    }
  });
  for (Index i = 0; i < n_surrogates; ++i) {
    if (!failures[static_cast<std::size_t>(i)].empty())
      throw std::runtime_error("surrogate_test: statistic failed on member " + std::to_string(i) +
                               ": " + failures[static_cast<std::size_t>(i)]);
  }

  Index at_or_below = 0, at_or_above = 0;
  for (Index i = 0; i < n_surrogates; ++i) {
    if (report.surrogate_values[i] <= report.observed) ++at_or_below;
    if (report.surrogate_values[i] >= report.observed) ++at_or_above;
  }
  const Index rank_low = 1 + at_or_below;
  const Index rank_high = 1 + at_or_above;
  const double denom = static_cast<double>(n_surrogates + 1);

  switch (side) {
    case TestSide::low:
      report.rank = rank_low;
      report.p_value = static_cast<double>(rank_low) / denom;
      break;
    case TestSide::high:
      report.rank = rank_high;
      report.p_value = static_cast<double>(rank_high) / denom;
      break;
    case TestSide::two:
      report.rank = std::min(rank_low, rank_high);
      report.p_value =
          std::min(1.0, 2.0 * static_cast<double>(std::min(rank_low, rank_high)) / denom);
      break;
  }
  return report;
}

}  // namespace nltsa
