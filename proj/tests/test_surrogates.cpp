#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>

#include <nltsa/embedding.hpp>
#include <nltsa/surrogates.hpp>
#include <nltsa/systems.hpp>

#include "fixtures.hpp"

using namespace nltsa;
using namespace nltsa::fixtures;

namespace {

Eigen::VectorXd sorted_copy(const Eigen::VectorXd& v) {
  Eigen::VectorXd s = v;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

bool same_multiset(const TimeSeries& a, const TimeSeries& b) {
  if (a.size() != b.size()) return false;
  Eigen::VectorXd sa = sorted_copy(a.values), sb = sorted_copy(b.values);
  for (Index i = 0; i < sa.size(); ++i)
    if (sa[i] != sb[i]) return false;
  return true;
}

Eigen::VectorXd autocorr(const Eigen::VectorXd& x, Index kmax) {
  const Index n = x.size();
  const double mu = x.mean();
  const double denom = (x.array() - mu).square().sum();
  Eigen::VectorXd c(kmax + 1);
  for (Index k = 0; k <= kmax; ++k) {
    double s = 0.0;
    for (Index t = 0; t + k < n; ++t) s += (x[t] - mu) * (x[t + k] - mu);
    c[k] = s / denom;
  }
  return c;
}

double rel_amplitude_error(const TimeSeries& made, const TimeSeries& target) {
  Eigen::VectorXd a = amplitude_spectrum(made), b = amplitude_spectrum(target);
  return (a - b).norm() / b.norm();
}

double log_spectrum_distance(const TimeSeries& a, const TimeSeries& b) {
  Eigen::VectorXd A = amplitude_spectrum(a), B = amplitude_spectrum(b);
  double s = 0.0;
  for (Index k = 1; k < A.size(); ++k) {
    const double d = std::log(A[k] + 1e-300) - std::log(B[k] + 1e-300);
    s += d * d;
  }
  return std::sqrt(s);
}

TimeSeries cubic_noise() {
  TimeSeries z = ar1_series(1024, 0.8, 7);
  z.values = z.values.array().cube();
  return z;
}

TimeSeries sine_series(Index n, double cycles) {
  TimeSeries s;
  s.values.resize(n);
  for (Index t = 0; t < n; ++t)
    s.values[t] = std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) /
                           static_cast<double>(n));
  return s;
}

double lag1_autocov(const TimeSeries& s) {
  const double mu = s.values.mean();
  double num = 0.0;
  for (Index t = 0; t + 1 < s.size(); ++t) num += (s.values[t] - mu) * (s.values[t + 1] - mu);
  return num / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("shuffling keeps the value multiset and its moments") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  RandomSource rng(3);
  TimeSeries y = shuffle_surrogate(x, rng);
  CHECK(y.size() == x.size());
  CHECK(same_multiset(x, y));
  CHECK(y.values == y.values);  // finite
  CHECK(std::abs(y.values.mean() - x.values.mean()) < 1e-12);
  const double sx = std::sqrt((x.values.array() - x.values.mean()).square().mean());
  const double sy = std::sqrt((y.values.array() - y.values.mean()).square().mean());
  CHECK(std::abs(sx - sy) < 1e-12);
  CHECK((y.values - x.values).cwiseAbs().maxCoeff() > 0.0);  // actually permuted
}

TEST_CASE("shuffling a single sample returns it unchanged") {
  TimeSeries x;
  x.values.resize(1);
  x.values[0] = 2.5;
  RandomSource rng(3);
  TimeSeries y = shuffle_surrogate(x, rng);
  CHECK(y.values[0] == 2.5);
}

TEST_CASE("surrogates are reproducible from the seed") {
  TimeSeries x = ar1_series(256, 0.8, 5);
  for (SurrogateKind kind : {SurrogateKind::shuffle, SurrogateKind::ft, SurrogateKind::aaft,
                             SurrogateKind::iaaft, SurrogateKind::tfts, SurrogateKind::sss,
                             SurrogateKind::pps}) {
    SurrogateSpec spec;
    spec.kind = kind;
    spec.tau = 2;
    RandomSource a(17), b(17), c(18);
    TimeSeries ya = make_surrogate(x, spec, a);
    TimeSeries yb = make_surrogate(x, spec, b);
    TimeSeries yc = make_surrogate(x, spec, c);
    CHECK(ya.size() == x.size());
    CHECK((ya.values - yb.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ya.values - yc.values).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("phase randomization preserves every Fourier amplitude") {
  TimeSeries x = ar1_series(1024, 0.8, 7);
  RandomSource rng(11);
  double max_imag = -1.0;
  TimeSeries y = ft_surrogate(x, rng, &max_imag);
  Eigen::VectorXd a = amplitude_spectrum(x), b = amplitude_spectrum(y);
  double worst = 0.0;
  for (Index k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(b[k] - a[k]) / std::max(a[k], 1e-30));
  CHECK(worst < 1e-10);
  CHECK(max_imag >= 0.0);
  CHECK(max_imag < 1e-10);
}

TEST_CASE("phase randomization keeps the autocorrelation profile of linear noise") {
  TimeSeries x = ar1_series(1024, 0.8, 7);
  RandomSource rng(11);
  TimeSeries y = ft_surrogate(x, rng);
  Eigen::VectorXd cx = autocorr(x.values, 20), cy = autocorr(y.values, 20);
  for (Index k = 1; k <= 20; ++k) CHECK(std::abs(cx[k] - cy[k]) < 0.05);
}

TEST_CASE("phase randomization leaves the mean and the Nyquist bin alone") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  RandomSource rng(11);
  TimeSeries y = ft_surrogate(x, rng);
  CHECK(std::abs(y.values.mean() - x.values.mean()) < 1e-12);
  auto sx = detail::dft(x.values), sy = detail::dft(y.values);
  CHECK(std::abs(sx[256] - sy[256]) < 1e-10 * std::abs(sx[256]) + 1e-12);
}

TEST_CASE("rank-preserving phase randomization keeps the value multiset") {
  TimeSeries x = cubic_noise();
  RandomSource rng(21);
  TimeSeries y = aaft_surrogate(x, rng);
  CHECK(same_multiset(x, y));
}

TEST_CASE("rank-preserving randomization beats plain shuffling on transformed noise") {
  // A monotone cube of linear noise: the flat-spectrum shuffle destroys the
  // spectral profile, the rank-preserving route keeps it close.
  TimeSeries x = cubic_noise();
  RandomSource r1(21), r2(21);
  const double d_rank = log_spectrum_distance(aaft_surrogate(x, r1), x);
  const double d_flat = log_spectrum_distance(shuffle_surrogate(x, r2), x);
  CHECK(d_rank < 0.9 * d_flat);
}

TEST_CASE("rank-preserving surrogate follows its randomized driver's ordering") {
  TimeSeries x = cubic_noise();
  RandomSource r1(21);
  TimeSeries y = aaft_surrogate(x, r1);
  // Rebuild the internal driver with an identical draw sequence.
  RandomSource r2(21);
  Eigen::VectorXd gauss(x.size());
  for (Index t = 0; t < x.size(); ++t) gauss[t] = r2.gaussian();
  TimeSeries driver = x;
  driver.values = detail::rank_remap(gauss, x.values);
  TimeSeries randomized = ft_surrogate(driver, r2);
  CHECK(detail::stable_order(y.values) == detail::stable_order(randomized.values));
}

TEST_CASE("iterative refinement tightens the spectrum without touching the multiset") {
  TimeSeries x = cubic_noise();
  RandomSource r1(21), r2(21);
  TimeSeries one_shot = aaft_surrogate(x, r1);
  IaaftResult refined = iaaft_surrogate(x, r2);
  CHECK(same_multiset(x, refined.series));
  CHECK(refined.iterations >= 1);
  CHECK(refined.spectral_errors.size() == refined.iterations);
  for (Index i = 1; i < refined.iterations; ++i)
    CHECK(refined.spectral_errors[i] <= refined.spectral_errors[i - 1] + 1e-12);
  const double final_err = refined.spectral_errors[refined.iterations - 1];
  CHECK(final_err <= rel_amplitude_error(one_shot, x));
}

TEST_CASE("iterative refinement converges fast on a pure tone") {
  TimeSeries x = sine_series(256, 5.0);
  RandomSource rng(3);
  IaaftResult r = iaaft_surrogate(x, rng);
  CHECK(r.iterations <= 100);
  CHECK(r.spectral_errors[r.iterations - 1] < 1e-6);
}

TEST_CASE("iterative refinement respects the iteration cap") {
  TimeSeries x = cubic_noise();
  RandomSource rng(21);
  IaaftResult r = iaaft_surrogate(x, rng, 1);
  CHECK(r.iterations == 1);
  RandomSource rng2(21);
  CHECK_THROWS_AS(iaaft_surrogate(x, rng2, 0), std::invalid_argument);
}

TEST_CASE("band-limited randomization at a cutoff near one is the identity") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  for (Index t = 0; t < 512; ++t) x.values[t] += 0.02 * static_cast<double>(t);
  RandomSource rng(13);
  TimeSeries y = tfts_surrogate(x, 0.999999, rng);
  CHECK((y.values - x.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("band-limited randomization at a vanishing cutoff matches full randomization") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  RandomSource r1(13), r2(13);
  TimeSeries all_bins = tfts_surrogate(x, 1e-9, r1);
  TimeSeries reference = ft_surrogate(x, r2);
  CHECK((all_bins.values - reference.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("band-limited randomization preserves the slow components") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  for (Index t = 0; t < 512; ++t) x.values[t] += 0.02 * static_cast<double>(t);
  RandomSource rng(13);
  const double f_cut = 0.1;
  TimeSeries y = tfts_surrogate(x, f_cut, rng);

  auto sx = detail::dft(x.values), sy = detail::dft(y.values);
  const Index n = x.size();
  const double scale = amplitude_spectrum(x).maxCoeff();
  for (Index k = 0; k < n; ++k) {
    const Index folded = std::min(k, n - k);
    if (2.0 * static_cast<double>(folded) / static_cast<double>(n) < f_cut)
      CHECK(std::abs(sx[static_cast<std::size_t>(k)] - sy[static_cast<std::size_t>(k)]) <
            1e-10 * scale);
  }
  // The full amplitude spectrum survives too: only phases were touched.
  CHECK(rel_amplitude_error(y, x) < 1e-10);

  auto lowpass = [f_cut, n](const TimeSeries& s) {
    auto sp = detail::dft(s.values);
    for (Index k = 1; k <= n / 2; ++k) {
      if (2.0 * static_cast<double>(k) / static_cast<double>(n) >= f_cut) {
        sp[static_cast<std::size_t>(k)] = 0.0;
        if (k < n - k) sp[static_cast<std::size_t>(n - k)] = 0.0;
      }
    }
    return detail::idft_real(sp);
  };
  CHECK((lowpass(x) - lowpass(y)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("band-limited randomization validates the cutoff") {
  TimeSeries x = ar1_series(64, 0.8, 5);
  RandomSource rng(13);
  CHECK_THROWS_AS(tfts_surrogate(x, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(tfts_surrogate(x, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(tfts_surrogate(x, -0.5, rng), std::invalid_argument);
}

TEST_CASE("index jitter with a vanishing amplitude returns the series unchanged") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  RandomSource rng(17);
  TimeSeries y = sss_surrogate(x, 1e-9, rng);
  CHECK((y.values - x.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("index jitter keeps the multiset and displaces more as the amplitude grows") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  RandomSource rng(17);
  CHECK(same_multiset(x, sss_surrogate(x, 1.0, rng)));

  auto mean_displacement = [&](double amplitude) {
    RandomSource r(17);
    Eigen::VectorXd jittered(x.size());
    for (Index t = 0; t < x.size(); ++t)
      jittered[t] = static_cast<double>(t) + amplitude * r.gaussian();
    auto order = detail::stable_order(jittered);
    double s = 0.0;
    for (Index t = 0; t < x.size(); ++t)
      s += std::abs(static_cast<double>(order[static_cast<std::size_t>(t)]) -
                    static_cast<double>(t));
    return s / static_cast<double>(x.size());
  };
  const double small = mean_displacement(1.0);
  const double large = mean_displacement(10.0);
  CHECK(small > 0.0);
  CHECK(large > 3.0 * small);
  CHECK_THROWS_AS(sss_surrogate(x, 0.0, rng), std::invalid_argument);
}

TEST_CASE("state-walk surrogate draws its values from the original set") {
  TimeSeries x = ar1_series(400, 0.8, 5);
  RandomSource rng(9);
  PpsResult r = pps_surrogate(x, 3, 2, 0.5, rng);
  CHECK(r.series.size() == x.size());
  std::map<double, Index> allowed;
  for (Index s = 4; s < 400; ++s) allowed[x.values[s]] = s;
  for (Index i = 0; i < r.series.size(); ++i)
    CHECK(allowed.count(r.series.values[i]) == 1);
}

TEST_CASE("state-walk surrogate follows the original orbit when the scale vanishes") {
  TimeSeries x = ar1_series(400, 0.8, 5);
  const double sd = std::sqrt((x.values.array() - x.values.mean()).square().mean());
  RandomSource rng(9);
  PpsResult r = pps_surrogate(x, 3, 2, 1e-12 * sd, rng, 100);
  CHECK(r.restarts == 0);
  Index start = -1;
  for (Index s = 0; s < 400; ++s)
    if (x.values[s] == r.series.values[0]) start = s;
  REQUIRE(start >= 0);
  for (Index i = 0; i < 100; ++i) {
    REQUIRE(start + i < 396);
    CHECK(r.series.values[i] == x.values[start + i]);
  }
}

TEST_CASE("state-walk surrogate visits states near-uniformly when the scale is huge") {
  TimeSeries x = ar1_series(400, 0.8, 5);
  const double sd = std::sqrt((x.values.array() - x.values.mean()).square().mean());
  RandomSource rng(9);
  const Index states = 396;
  PpsResult r = pps_surrogate(x, 3, 2, 1e12 * sd, rng, states * 20);
  CHECK(r.restarts == 0);

  std::map<double, Index> where;
  for (Index s = 0; s < states; ++s) where[x.values[s + 4]] = s;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(states);
  for (Index i = 1; i < r.series.size(); ++i) counts[where.at(r.series.values[i])] += 1.0;
  CHECK(counts[0] == 0.0);  // the first state has no predecessor to arrive from

  const double expect = static_cast<double>(r.series.size() - 1) / static_cast<double>(states - 1);
  double chi2 = 0.0;
  for (Index s = 1; s < states; ++s)
    chi2 += (counts[s] - expect) * (counts[s] - expect) / expect;
  // 1% critical value via the Wilson-Hilferty cube approximation.
  const double df = static_cast<double>(states - 2);
  const double crit =
      df * std::pow(1.0 - 2.0 / (9.0 * df) + 2.326 * std::sqrt(2.0 / (9.0 * df)), 3.0);
  CHECK(chi2 < crit);
}

TEST_CASE("state-walk surrogate validates its inputs") {
  TimeSeries x = ar1_series(400, 0.8, 5);
  RandomSource rng(9);
  CHECK_THROWS_AS(pps_surrogate(x, 3, 2, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(pps_surrogate(x, 3, 2, -1.0, rng), std::invalid_argument);
  TimeSeries tiny;
  tiny.values.resize(6);
  tiny.values << 1, 2, 3, 4, 5, 6;
  CHECK_THROWS_AS(pps_surrogate(tiny, 3, 2, 0.5, rng), std::invalid_argument);
  RandomSource rng2(9);
  PpsResult r = pps_surrogate(x, 3, 2, 0.5, rng2, 37);
  CHECK(r.series.size() == 37);
}

TEST_CASE("ensembles are reproducible and independent of the worker count") {
  TimeSeries x = ar1_series(256, 0.8, 5);
  SurrogateSpec spec;
  spec.kind = SurrogateKind::aaft;

  setenv("NLTSA_THREADS", "1", 1);
  SurrogateEnsemble serial = surrogate_ensemble(x, spec, 8, 42);
  setenv("NLTSA_THREADS", "7", 1);
  SurrogateEnsemble threaded = surrogate_ensemble(x, spec, 8, 42);
  unsetenv("NLTSA_THREADS");

  REQUIRE(serial.members.size() == 8);
  REQUIRE(threaded.members.size() == 8);
  CHECK(serial.generator == "aaft");
  CHECK(serial.seed == 42);
  CHECK(serial.original.values == x.values);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(serial.members[i].size() == x.size());
    CHECK((serial.members[i].values - threaded.members[i].values).cwiseAbs().maxCoeff() == 0.0);
  }
  // Each member comes from its own derived stream, indexed by position.
  RandomSource direct = RandomSource(42).stream(3);
  TimeSeries expected = make_surrogate(x, spec, direct);
  CHECK((serial.members[3].values - expected.values).cwiseAbs().maxCoeff() == 0.0);
  // And distinct members differ.
  CHECK((serial.members[0].values - serial.members[1].values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("ensemble generation propagates member failures") {
  TimeSeries x = ar1_series(64, 0.8, 5);
  SurrogateSpec spec;
  spec.kind = SurrogateKind::pps;
  spec.rho = -1.0;
  CHECK_THROWS_AS(surrogate_ensemble(x, spec, 4, 42), std::invalid_argument);
  spec.rho = 0.5;
  CHECK_THROWS_AS(surrogate_ensemble(x, spec, 0, 42), std::invalid_argument);
}

TEST_CASE("rank test arithmetic is exact for an extreme observation") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  SurrogateStatistic stat{"lag1_autocov", lag1_autocov};
  SurrogateSpec spec;
  spec.kind = SurrogateKind::shuffle;

  TestReport high = surrogate_test(x, spec, stat, 39, TestSide::high, 4);
  CHECK(high.statistic == "lag1_autocov");
  CHECK(high.surrogate_values.size() == 39);
  CHECK(high.rank == 1);
  CHECK(high.p_value == 1.0 / 40.0);
  CHECK(high.observed > high.surrogate_values.maxCoeff());

  TestReport two = surrogate_test(x, spec, stat, 39, TestSide::two, 4);
  CHECK(two.p_value == 0.05);
  CHECK(two.rank == 1);

  TestReport low = surrogate_test(x, spec, stat, 39, TestSide::low, 4);
  CHECK(low.rank == 40);
  CHECK(low.p_value == 1.0);
  CHECK(low.rank + high.rank == 41);  // no ties: the two tails partition the pool
}

TEST_CASE("rank test p-values survive monotone transforms of the statistic") {
  TimeSeries x = ar1_series(512, 0.8, 5);
  SurrogateSpec spec;
  spec.kind = SurrogateKind::ft;
  SurrogateStatistic plain{"stat", lag1_autocov};
  SurrogateStatistic warped{"stat", [](const TimeSeries& s) {
    return std::exp(2.0 * lag1_autocov(s)) + 3.0;
  }};
  for (TestSide side : {TestSide::low, TestSide::high, TestSide::two}) {
    TestReport a = surrogate_test(x, spec, plain, 19, side, 8);
    TestReport b = surrogate_test(x, spec, warped, 19, side, 8);
    CHECK(a.rank == b.rank);
    CHECK(a.p_value == b.p_value);
    CHECK(a.p_value > 0.0);
    CHECK(a.p_value <= 1.0);
    CHECK(a.rank >= 1);
    CHECK(a.rank <= 20);
  }
}

TEST_CASE("rank test reports which member broke the statistic") {
  TimeSeries x = ar1_series(64, 0.8, 5);
  SurrogateSpec spec;
  spec.kind = SurrogateKind::shuffle;
  // Succeeds on the observed series, fails on every permuted member.
  const Eigen::VectorXd original = x.values;
  SurrogateStatistic broken{"boom", [original](const TimeSeries& s) -> double {
    if (s.values != original) throw std::runtime_error("boom");
    return 0.0;
  }};
  try {
    surrogate_test(x, spec, broken, 7, TestSide::two, 4);
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("member 0") != std::string::npos);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
  SurrogateStatistic unset{"empty", nullptr};
  CHECK_THROWS_AS(surrogate_test(x, spec, unset, 7, TestSide::two, 4), std::invalid_argument);
}

TEST_CASE("rank test rejects at the nominal rate on null data") {
  // White noise tested against its own shuffle null: two-sided alpha = 0.05
  // admits exactly the two rank-1 outcomes out of 40, so the long-run rate is
  // 0.05 on the nose.  200 seeded trials land within two standard errors.
  SurrogateStatistic stat{"lag1_autocov", lag1_autocov};
  SurrogateSpec spec;
  spec.kind = SurrogateKind::shuffle;
  int rejections = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RandomSource rs(6000 + static_cast<std::uint64_t>(trial));
    TimeSeries w;
    w.values.resize(256);
    for (Index t = 0; t < 256; ++t) w.values[t] = rs.gaussian();
    TestReport rep =
        surrogate_test(w, spec, stat, 39, TestSide::two, 12000 + static_cast<std::uint64_t>(trial));
    CHECK(rep.p_value > 0.0);
    CHECK(rep.p_value <= 1.0);
    if (rep.p_value <= 0.05) ++rejections;
  }
  const double rate = rejections / 200.0;
  CHECK(rate >= 0.02);
  CHECK(rate <= 0.08);
}

TEST_CASE("nonlinear structure is flagged against a rank-preserving null") {
  TimeSeries x = integrate_flow(LorenzFlow{}, Eigen::Vector3d(1.0, 1.0, 1.0), 0.01, 4000, 2000)
                     .column(0);
  LagProfile prof = auto_mutual_information(x, 100);
  REQUIRE(prof.selected.has_value());
  const Index tau = *prof.selected;
  SurrogateStatistic ami{"auto_mutual_information",
                         [tau](const TimeSeries& s) {
                           return auto_mutual_information(s, tau).values[tau];
                         }};
  SurrogateSpec spec;
  spec.kind = SurrogateKind::aaft;
  TestReport rep = surrogate_test(x, spec, ami, 39, TestSide::high, 2);
  CHECK(rep.p_value <= 0.05);
  CHECK(rep.observed > rep.surrogate_values.maxCoeff());
}
