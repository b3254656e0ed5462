#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nltsa/types.hpp"

namespace nltsa {

inline std::vector<std::complex<double>> fft_forward(const Eigen::VectorXd& x) {
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);  // full spectrum, conjugate-symmetric for real input
  return out;
}

/// Inverse transform of a conjugate-symmetric spectrum back to a real signal.
inline Eigen::VectorXd fft_inverse_real(const std::vector<std::complex<double>>& spec) {
  std::vector<double> out;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in = spec;
  fft.inv(out, in);
  Eigen::VectorXd x(static_cast<Index>(out.size()));
  for (Index i = 0; i < x.size(); ++i) x[i] = out[static_cast<std::size_t>(i)];
  return x;
}

/// |X_k|^2 for k = 0..floor(N/2).
inline Eigen::VectorXd power_spectrum(const Eigen::VectorXd& x) {
  auto spec = fft_forward(x);
  Index half = x.size() / 2;
  Eigen::VectorXd p(half + 1);
  for (Index k = 0; k <= half; ++k) p[k] = std::norm(spec[static_cast<std::size_t>(k)]);
  return p;
}

}  // namespace nltsa
