#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nltsa/csv.hpp"
#include "nltsa/histogram.hpp"
#include "nltsa/random.hpp"
#include "nltsa/scaling.hpp"
#include "nltsa/types.hpp"

using namespace nltsa;

namespace {

// Reference line fitter: per-window OLS done the slow, literal way.
struct WindowFit {
  Index first, last;
  double slope, r2;
};

WindowFit best_window_reference(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Index min_points) {
  WindowFit best{0, 0, 0.0, -1.0};
  double top = -1.0;
  for (Index i = 0; i < x.size(); ++i) {
    for (Index j = i + min_points - 1; j < x.size(); ++j) {
      Index w = j - i + 1;
      double mx = 0, my = 0;
      for (Index t = i; t <= j; ++t) {
        mx += x[t];
        my += y[t];
      }
      mx /= w;
      my /= w;
      double sxy = 0, sxx = 0, syy = 0;
      for (Index t = i; t <= j; ++t) {
        sxy += (x[t] - mx) * (y[t] - my);
        sxx += (x[t] - mx) * (x[t] - mx);
        syy += (y[t] - my) * (y[t] - my);
      }
      double slope = syy <= 0 ? 0.0 : sxy / sxx;
      double r2 = syy <= 0 ? 1.0 : std::min(1.0, sxy * sxy / (sxx * syy));
      bool take = false;
      if (r2 > top + 1e-12) {
        take = true;
      } else if (r2 > top - 1e-12) {
        if (j - i > best.last - best.first || (j - i == best.last - best.first && i < best.first)) take = true;
      }
      top = std::max(top, r2);
      if (take) best = {i, j, slope, r2};
    }
  }
  return best;
}

std::string temp_path(const std::string& stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("middle-third ladder: box counts over a geometric scale ladder give slope ln2/ln3") {
  // Counts at scale 3^-k follow by construction of the set: 2^k occupied boxes.
  const int kmax = 8;
  Eigen::VectorXd lx(kmax), ly(kmax);
  for (int k = 1; k <= kmax; ++k) {  // finest scale first so x ascends
    lx[kmax - k] = -k * std::log(3.0);
    ly[kmax - k] = k * std::log(2.0);
  }
  ScalingFit fit = fit_scaling_region(lx, ly, 4);
  double d0 = -fit.slope;
  CHECK(d0 == doctest::Approx(0.6309297535714574).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.first == 0);  // exact data: ties resolve to the widest window
  CHECK(fit.last == kmax - 1);
}

TEST_CASE("piecewise profile: the best window stays on the rising branch") {
  // Slope-2 ramp followed by a plateau; the ramp is longer so it wins the tie on width.
  Eigen::VectorXd x(21), y(21);
  for (Index i = 0; i < 21; ++i) {
    x[i] = 0.1 * static_cast<double>(i);
    y[i] = i <= 12 ? 2.0 * x[i] : 2.0 * x[12];
  }
  ScalingFit fit = fit_scaling_region(x, y, 4);
  WindowFit ref = best_window_reference(x, y, 4);
  CHECK(fit.first == ref.first);
  CHECK(fit.last == ref.last);
  CHECK(fit.slope == doctest::Approx(ref.slope).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.first == 0);
  CHECK(fit.last == 12);
}

TEST_CASE("exact line fits the full range with r2 = 1") {
  Eigen::VectorXd x(30), y(30);
  for (Index i = 0; i < 30; ++i) {
    x[i] = 0.25 * static_cast<double>(i) - 2.0;
    y[i] = 2.0 * x[i] + 1.0;
  }
  ScalingFit fit = fit_scaling_region(x, y);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.first == 0);
  CHECK(fit.last == 29);
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_scaling_region rejects bad input") {
  Eigen::VectorXd x(3), y(3);
  x << 0, 1, 2;
  y << 0, 1, 2;
  CHECK_THROWS(fit_scaling_region(x, y, 4));  // fewer points than the window
  Eigen::VectorXd xb(5), yb(5);
  xb << 0, 1, 1, 2, 3;  // not strictly increasing
  yb << 0, 1, 2, 3, 4;
  CHECK_THROWS(fit_scaling_region(xb, yb, 2));
  xb << 0, 1, 2, 3, 4;
  yb[2] = std::nan("");
  CHECK_THROWS(fit_scaling_region(xb, yb, 2));
}

TEST_CASE("csv round trip preserves values to full precision") {
  RandomSource rng(20260814);
  Eigen::MatrixXd m(40, 3);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng.gaussian() * std::pow(10.0, rng.uniform(-6, 6));
  std::string path = temp_path("nltsa_roundtrip.csv");
  save_table(path, {"a", "b", "c"}, m, {"comment one", "seed: 42"});
  Table t = load_table(path);
  REQUIRE(t.rows() == 40);
  REQUIRE(t.cols() == 3);
  CHECK(t.columns[0] == "a");
  CHECK(t.columns[2] == "c");
  REQUIRE(t.comments.size() == 2);
  CHECK(t.comments[1] == "seed: 42");
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      double rel = std::abs(t.data(i, j) - m(i, j)) / std::max(1.0, std::abs(m(i, j)));
      CHECK(rel < 1e-12);
    }
  std::filesystem::remove(path);
}

TEST_CASE("csv loader reports precise failure locations") {
  std::string path = temp_path("nltsa_bad.csv");
  {
    std::ofstream out(path);
    out << "# header comment\n";
    out << "1.0,2.0\n";
    out << "3.0,oops\n";
  }
  try {
    load_table(path);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find(":3") != std::string::npos);        // line number
    CHECK(msg.find("column 2") != std::string::npos);  // column number
    CHECK(msg.find("oops") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "1.0,2.0\n";
    out << "3.0\n";
  }
  CHECK_THROWS_WITH_AS(load_table(path), doctest::Contains("ragged"), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS(load_table(temp_path("nltsa_definitely_missing.csv")));
}

TEST_CASE("load_series picks a column and range-checks it") {
  std::string path = temp_path("nltsa_series.csv");
  {
    std::ofstream out(path);
    out << "t,x\n0,5\n1,6\n2,7\n";
  }
  TimeSeries s = load_series(path, 1);
  REQUIRE(s.size() == 3);
  CHECK(s.values[2] == 7.0);
  CHECK(s.name == "x");
  CHECK_THROWS(load_series(path, 2));
  std::filesystem::remove(path);
}

TEST_CASE("histogram bins are right-open with a closed top bin") {
  Eigen::VectorXd v(3);
  v << 0.0, 0.5, 1.0;
  Histogram h = histogram_pmf(v, 2);
  REQUIRE(h.pmf.size() == 2);
  CHECK(h.counts[0] == 1);  // [0, 0.5) holds only 0
  CHECK(h.counts[1] == 2);  // [0.5, 1] holds 0.5 and the max
  CHECK(h.pmf.sum() == doctest::Approx(1.0));
}

TEST_CASE("histogram handles explicit and degenerate ranges") {
  Eigen::VectorXd v(5);
  v << 1, 2, 3, 4, 100;
  Histogram h = histogram_pmf(v, 4, std::make_pair(1.0, 5.0));
  CHECK(h.total == 4);  // the outlier is ignored
  CHECK(h.pmf.sum() == doctest::Approx(1.0));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(7, 3.25);
  Histogram d = histogram_pmf(c, 16);  // degenerate span collapses to one bin
  REQUIRE(d.pmf.size() == 1);
  CHECK(d.pmf[0] == doctest::Approx(1.0));
  CHECK(d.total == 7);

  CHECK_THROWS(histogram_pmf(v, 0));
  CHECK_THROWS(histogram_pmf(v, 3, std::make_pair(200.0, 300.0)));
}

TEST_CASE("seeded generator reproduces its sequence exactly") {
  RandomSource a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  for (int i = 0; i < 1000; ++i) CHECK(a.gaussian() == b.gaussian());
  RandomSource c(12346);
  int differ = 0;
  RandomSource a2(12345);
  for (int i = 0; i < 100; ++i) differ += a2.uniform() != c.uniform();
  CHECK(differ > 90);
}

TEST_CASE("derived streams are decorrelated") {
  RandomSource root(777);
  RandomSource s1 = root.stream(1);
  RandomSource s2 = root.stream(2);
  const int n = 10000;
  Eigen::VectorXd u1(n), u2(n);
  for (int i = 0; i < n; ++i) {
    u1[i] = s1.uniform();
    u2[i] = s2.uniform();
  }
  double c = ((u1.array() - u1.mean()) * (u2.array() - u2.mean())).sum() /
             std::sqrt(((u1.array() - u1.mean()).square().sum()) * ((u2.array() - u2.mean()).square().sum()));
  CHECK(std::abs(c) < 0.05);
  // Same id twice gives the same stream.
  RandomSource s1b = root.stream(1);
  RandomSource s1c = root.stream(1);
  CHECK(s1b.seed() == s1c.seed());
  for (int i = 0; i < 100; ++i) CHECK(s1b.uniform() == s1c.uniform());
}

TEST_CASE("uniform and gaussian draws have the expected ranges and moments") {
  RandomSource rng(99);
  const int n = 100000;
  double mean = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  CHECK(mean / n == doctest::Approx(0.5).epsilon(0.01));
  mean = 0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    mean += g;
    m2 += g * g;
  }
  CHECK(mean / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) {
    auto k = rng.below(7);
    CHECK(k < 7);
  }
  CHECK_THROWS(rng.below(0));
}
