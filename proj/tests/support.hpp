#pragma once

// Shared test helpers: hand-rolled random generators for specs and matrices,
// and independent oracles (matrix exponentials, direct series).

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "punctured/punctured.hpp"

namespace testing_support {

using punctured::CMatrix;
using punctured::Complex;
using punctured::CVector;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  /// Uniform in the disk of radius r.
  Complex in_disk(double r) {
    const double rho = r * std::sqrt(uniform(0.0, 1.0));
    return std::polar(rho, uniform(0.0, 2.0 * punctured::kPi));
  }
  CMatrix hermitian(int dim, double scale = 1.0) {
    CMatrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) m(i, j) = Complex(uniform(-scale, scale), uniform(-scale, scale));
    }
    return (m + m.adjoint()) * 0.5;
  }

 private:
  std::mt19937_64 eng_;
};

/// Random valid spec: thermal or squeezed base, up to `max_punctures`
/// punctures whose weights sum below 0.9.
inline punctured::PuncturedStateSpec random_spec(Gen& g, int max_punctures = 2, bool allow_delta = true,
                                                 bool allow_squeezed = true) {
  using namespace punctured;
  PuncturedStateSpec s;
  if (allow_squeezed && g.integer(0, 2) == 0) {
    const double nbar = g.uniform(0.3, 2.0);
    // keep well inside the P-existence region
    const double rmax = 0.5 * std::atanh(nbar / (nbar + 1.0));
    s.base = SqueezedThermal{nbar, g.uniform(-rmax, rmax)};
  } else {
    s.base = Thermal{g.uniform(0.1, 2.0)};
  }
  const int k = g.integer(0, max_punctures);
  double budget = 0.9;
  for (int i = 0; i < k; ++i) {
    const double w = g.uniform(0.0, budget / 2.0);
    budget -= w;
    const Complex c = g.in_disk(1.5);
    if (allow_delta && g.coin()) {
      s.punctures.push_back(Puncture::delta(c, w));
    } else {
      s.punctures.push_back(Puncture::gaussian(g.uniform(0.05, 1.5), c, w));
    }
  }
  return s;
}

/// Annihilation operator on dimension dim.
inline Eigen::MatrixXd annihilation(int dim) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

/// D(alpha) = exp(alpha a^dag - alpha* a) by matrix exponential on a padded
/// basis, cropped to n_max.
inline CMatrix displacement_by_expm(Complex alpha, int n_max, int pad = 80) {
  const int dim = n_max + 1 + pad;
  const CMatrix a = annihilation(dim).cast<Complex>();
  const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  const CMatrix d = gen.exp();
  return d.topLeftCorner(n_max + 1, n_max + 1);
}

/// D(alpha) rho_T(b) D(alpha)^dag from padded matrices, cropped.
inline CMatrix displaced_thermal_by_expm(Complex alpha, double b, int n_max, int pad = 80) {
  const int dim = n_max + 1 + pad;
  const CMatrix a = annihilation(dim).cast<Complex>();
  const CMatrix d = (alpha * a.adjoint() - std::conj(alpha) * a).exp();
  const auto p = punctured::thermal_populations(b, dim);
  CVector pv(dim);
  for (int n = 0; n < dim; ++n) pv(n) = p[static_cast<std::size_t>(n)];
  const CMatrix m = d * pv.asDiagonal() * d.adjoint();
  return m.topLeftCorner(n_max + 1, n_max + 1);
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing_support
