#pragma once

// Truncated single-mode Fock space: states, operator matrices and the
// Hermitian linear algebra used by the positivity machinery.
//
// Basis is {|0>, ..., |n_max>}; a FockVector/FockOperator of dimension
// n_max + 1 holds amplitudes/matrix elements in that basis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "punctured/error.hpp"

namespace punctured {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Relative tolerance on |A_nm - conj(A_mn)| used for every hermiticity test.
inline constexpr double kHermitianTol = 1e-12;

inline void require_finite(Complex a, const char* what) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
    throw InvalidInput(std::string(what) + " must be finite");
  }
}

inline void require_n_max(int n_max) {
  if (n_max < 0) throw InvalidInput("n_max must be >= 0");
}

class FockVector {
 public:
  explicit FockVector(CVector amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() < 1) throw InvalidInput("FockVector needs dim >= 1");
  }

  int dim() const { return static_cast<int>(amp_.size()); }
  int n_max() const { return dim() - 1; }
  const CVector& amplitudes() const { return amp_; }
  Complex operator[](int n) const { return amp_(n); }
  double norm() const { return amp_.norm(); }

 private:
  CVector amp_;
};

class FockOperator {
 public:
  FockOperator(CMatrix entries, bool hermitian)
      : m_(std::move(entries)), hermitian_(hermitian) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw InvalidInput("FockOperator must be a non-empty square matrix");
    }
    if (hermitian_ && !within_hermitian_tolerance()) {
      throw InvalidInput("FockOperator flagged hermitian but residual " +
                         std::to_string(hermiticity_residual()) +
                         " exceeds tolerance");
    }
  }

  static FockOperator diagonal(std::span<const double> d) {
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d.size()),
                              static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    }
    return FockOperator(std::move(m), true);
  }

  static FockOperator identity(int dim) {
    return FockOperator(CMatrix::Identity(dim, dim), true);
  }

  static FockOperator projector(const FockVector& v) {
    const CVector& a = v.amplitudes();
    CMatrix m = a * a.adjoint();
    m = (m + m.adjoint()).eval() * 0.5;
    return FockOperator(std::move(m), true);
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  int n_max() const { return dim() - 1; }
  const CMatrix& entries() const { return m_; }
  bool hermitian() const { return hermitian_; }
  Complex operator()(int m, int n) const { return m_(m, n); }

  double trace() const { return m_.trace().real(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }
  double hermiticity_residual() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  }
  bool within_hermitian_tolerance() const {
    const double scale = max_abs();
    return hermiticity_residual() <= kHermitianTol * (scale > 0 ? scale : 1.0);
  }

  bool is_diagonal(double rel_tol) const {
    const double scale = max_abs();
    const double limit = rel_tol * (scale > 0 ? scale : 1.0);
    for (int j = 0; j < dim(); ++j) {
      for (int i = 0; i < dim(); ++i) {
        if (i != j && std::abs(m_(i, j)) > limit) return false;
      }
    }
    return true;
  }

  std::vector<double> diagonal_values() const {
    std::vector<double> d(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) d[static_cast<std::size_t>(i)] = m_(i, i).real();
    return d;
  }

 private:
  CMatrix m_;
  bool hermitian_;
};

// ---------------------------------------------------------------------------
// State and operator constructions

/// Thermal occupation probabilities nbar^n / (nbar+1)^(n+1), n = 0..dim-1.
inline std::vector<double> thermal_populations(double nbar, int dim) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
    throw InvalidInput("thermal mean photon number must be finite and >= 0");
  }
  std::vector<double> p(static_cast<std::size_t>(std::max(dim, 0)));
  if (p.empty()) return p;
  const double ratio = nbar / (nbar + 1.0);
  p[0] = 1.0 / (nbar + 1.0);
  for (std::size_t n = 1; n < p.size(); ++n) p[n] = p[n - 1] * ratio;
  return p;
}

/// Coherent-state amplitudes exp(-|a|^2/2) a^n / sqrt(n!).
inline FockVector coherent_vector(Complex alpha, int n_max) {
  require_n_max(n_max);
  require_finite(alpha, "coherent amplitude");
  CVector v(n_max + 1);
  const double x = std::norm(alpha);
  if (x / 2.0 < 600.0) {
    v(0) = std::exp(-x / 2.0);
    for (int n = 1; n <= n_max; ++n) v(n) = v(n - 1) * alpha / std::sqrt(double(n));
  } else {
    // exp(-|a|^2/2) underflows; evaluate each modulus in log form.
    const double log_abs = std::log(std::abs(alpha));
    const double phase = std::arg(alpha);
    for (int n = 0; n <= n_max; ++n) {
      const double lm = -x / 2.0 + n * log_abs - 0.5 * std::lgamma(n + 1.0);
      v(n) = std::polar(std::exp(lm), n * phase);
    }
  }
  return FockVector(std::move(v));
}

/// <m|D(alpha)|n> for 0 <= m, n <= n_max from the closed Laguerre form
///   <n+k|D|n> = sqrt(n!/(n+k)!) alpha^k e^{-|alpha|^2/2} L_n^{(k)}(|alpha|^2),
/// evaluated along each diagonal k with the normalized three-term recurrence
/// seeded by the coherent amplitude <k|alpha>. Exact for the truncated block.
inline FockOperator displacement_matrix(Complex alpha, int n_max) {
  require_n_max(n_max);
  require_finite(alpha, "displacement amplitude");
  const int dim = n_max + 1;
  const double x = std::norm(alpha);
  const CVector seed = coherent_vector(alpha, n_max).amplitudes();
  CMatrix d = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Complex prev = 0.0;
    Complex cur = seed(k);
    for (int j = 0; j + k < dim; ++j) {
      d(j + k, j) = cur;
      if (k > 0) d(j, j + k) = ((k % 2) ? -1.0 : 1.0) * std::conj(cur);
      const double jj = j;
      const Complex next = ((2.0 * jj + 1.0 + k - x) * cur - std::sqrt(jj * (jj + k)) * prev) /
                           std::sqrt((jj + 1.0) * (jj + 1.0 + k));
      prev = cur;
      cur = next;
    }
  }
  return FockOperator(std::move(d), false);
}

namespace detail {

/// Lower-triangle generator of matrix elements of the displaced thermal
/// state D(alpha) rho_T(b) D(alpha)^dag; b = 0 gives |alpha><alpha|.
/// With `whiten_nbar` set, every element is divided by sqrt(p_m p_n) of the
/// thermal state with that mean photon number (congruence by rho_T^{-1/2}),
/// computed inside the recurrence so that no tiny populations are divided.
inline CMatrix displaced_thermal_elements(Complex alpha, double b, int n_max,
                                          std::optional<double> whiten_nbar) {
  const int dim = n_max + 1;
  const double x = std::norm(alpha);
  const double q = b / (1.0 + b);
  const double shift = x / ((1.0 + b) * (1.0 + b));
  double scale = 1.0;       // per-index population ratio of the whitening state
  double log_pref = 0.0;    // log((nbar+1)) for whitening
  if (whiten_nbar) {
    scale = *whiten_nbar / (*whiten_nbar + 1.0);
    log_pref = std::log(*whiten_nbar + 1.0);
  }
  const double log_abs = x > 0.0 ? std::log(std::sqrt(x)) : 0.0;
  const double phase = std::arg(alpha);

  CMatrix out = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    if (x == 0.0 && k > 0) break;
    double log_mag = -x / (1.0 + b) - (k + 1.0) * std::log1p(b) - 0.5 * std::lgamma(k + 1.0) +
                     k * log_abs + log_pref;
    if (whiten_nbar) log_mag -= 0.5 * k * std::log(scale);
    Complex prev = 0.0;
    Complex cur = std::polar(std::exp(log_mag), k * phase);
    for (int j = 0; j + k < dim; ++j) {
      out(j + k, j) = cur;
      const double jj = j;
      const double a_coef = (q * (2.0 * jj + 1.0 + k) + shift) / scale;
      const double b_coef = (q * q) * std::sqrt(jj * (jj + k)) / (scale * scale);
      const Complex next =
          (a_coef * cur - b_coef * prev) / std::sqrt((jj + 1.0) * (jj + 1.0 + k));
      prev = cur;
      cur = next;
    }
  }
  for (int j = 0; j < dim; ++j) {
    for (int i = j + 1; i < dim; ++i) out(j, i) = std::conj(out(i, j));
  }
  return out;
}

/// Real generator -r (a^dag^2 - a^2)/2 on dimension `dim`.
inline Eigen::MatrixXd squeeze_generator(double r, int dim) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n + 2 < dim; ++n) {
    const double e = 0.5 * r * std::sqrt((n + 1.0) * (n + 2.0));
    g(n + 2, n) = -e;
    g(n, n + 2) = e;
  }
  return g;
}

inline int squeeze_padding(int n_max) { return 2 * n_max + 40; }

/// Rows 0..n_max of exp(generator) built on the padded space; all padded
/// columns are kept so that products like S rho S^dag can use them.
inline Eigen::MatrixXd squeeze_rows(double r, int n_max) {
  const int pad = squeeze_padding(n_max);
  Eigen::MatrixXd s = squeeze_generator(r, pad).exp();
  return s.topRows(n_max + 1);
}

}  // namespace detail

/// Largest |r| accepted by squeeze_matrix.
inline constexpr double kSqueezeSafeLimit = 1.5;

/// S(r) = exp(-r (a^dag^2 - a^2)/2), built on a padded basis and cropped.
inline FockOperator squeeze_matrix(double r, int n_max) {
  require_n_max(n_max);
  if (!std::isfinite(r) || std::abs(r) > kSqueezeSafeLimit) {
    throw InvalidInput("squeezing parameter |r| = " + std::to_string(std::abs(r)) +
                       " exceeds the safe limit " + std::to_string(kSqueezeSafeLimit));
  }
  const Eigen::MatrixXd rows = detail::squeeze_rows(r, n_max);
  CMatrix s = rows.leftCols(n_max + 1).cast<Complex>();
  return FockOperator(std::move(s), false);
}

/// D(alpha) rho_T(b) D(alpha)^dag on the truncated basis (b = 0: coherent projector).
inline FockOperator displaced_thermal_matrix(Complex alpha, double b, int n_max) {
  require_n_max(n_max);
  require_finite(alpha, "puncture center");
  if (!(b >= 0.0)) throw InvalidInput("thermal width b must be >= 0");
  CMatrix m = detail::displaced_thermal_elements(alpha, b, n_max, std::nullopt);
  return FockOperator(std::move(m), true);
}

// ---------------------------------------------------------------------------
// Hermitian analysis

namespace detail {

inline void require_hermitian(const FockOperator& h) {
  if (!h.within_hermitian_tolerance()) {
    throw InvalidInput("operator is not hermitian (residual " +
                       std::to_string(h.hermiticity_residual()) + ")");
  }
}

inline bool is_real(const CMatrix& m) {
  return m.imag().cwiseAbs().maxCoeff() == 0.0;
}

inline Eigen::VectorXd hermitian_eigenvalues(const CMatrix& a) {
  const CMatrix sym = (a + a.adjoint()) * 0.5;
  if (is_real(sym)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.real(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue iteration failed");
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue iteration failed");
  return es.eigenvalues();
}

}  // namespace detail

inline double min_eigenvalue(const FockOperator& h) {
  detail::require_hermitian(h);
  return detail::hermitian_eigenvalues(h.entries())(0);
}

/// min_n ( H_nn - sum_{m != n} |H_nm| ); a nonnegative margin certifies H >= 0.
inline double gershgorin_margin(const FockOperator& h) {
  detail::require_hermitian(h);
  const CMatrix& m = h.entries();
  double margin = std::numeric_limits<double>::infinity();
  for (int n = 0; n < h.dim(); ++n) {
    double radius = 0.0;
    for (int k = 0; k < h.dim(); ++k) {
      if (k != n) radius += std::abs(m(n, k));
    }
    margin = std::min(margin, m(n, n).real() - radius);
  }
  return margin;
}

struct EigenPair {
  double value;
  FockVector vector;
};

/// Eigenpairs sorted by descending eigenvalue.
inline std::vector<EigenPair> eigendecompose(const FockOperator& h) {
  detail::require_hermitian(h);
  const CMatrix sym = (h.entries() + h.entries().adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigen decomposition failed");
  std::vector<EigenPair> out;
  out.reserve(static_cast<std::size_t>(h.dim()));
  for (int i = h.dim() - 1; i >= 0; --i) {
    out.push_back({es.eigenvalues()(i), FockVector(es.eigenvectors().col(i))});
  }
  return out;
}

namespace detail {

inline std::vector<double> checked_populations(const FockOperator& a, const char* name) {
  if (!a.is_diagonal(1e-12)) throw InvalidInput(std::string(name) + " is not diagonal");
  if (std::abs(a.trace() - 1.0) > 1e-10) {
    throw InvalidInput(std::string(name) + " does not have unit trace (trace = " +
                       std::to_string(a.trace()) + ")");
  }
  std::vector<double> d = a.diagonal_values();
  const double floor = -1e-12 * std::max(1.0, a.max_abs());
  for (double& v : d) {
    if (v < floor) throw InvalidInput(std::string(name) + " has a negative population");
    v = std::max(v, 0.0);
  }
  return d;
}

}  // namespace detail

/// sum_n sqrt(A_nn B_nn) for Fock-diagonal states.
inline double diagonal_root_fidelity(const FockOperator& a, const FockOperator& b) {
  if (a.dim() != b.dim()) throw InvalidInput("fidelity operands differ in dimension");
  const auto pa = detail::checked_populations(a, "first operand");
  const auto pb = detail::checked_populations(b, "second operand");
  double s = 0.0;
  for (std::size_t n = 0; n < pa.size(); ++n) s += std::sqrt(pa[n] * pb[n]);
  return std::min(s, 1.0);
}

/// Fidelity of Fock-diagonal states in the squared convention,
/// F = (sum_n sqrt(A_nn B_nn))^2, which is the convention of the QND
/// fidelity closed form.
inline double diagonal_fidelity(const FockOperator& a, const FockOperator& b) {
  const double root = diagonal_root_fidelity(a, b);
  return root * root;
}

}  // namespace punctured
