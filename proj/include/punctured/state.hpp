#pragma once

// Punctured states: a smooth classical P function (thermal or squeezed
// thermal) minus weighted delta or Gaussian punctures,
//
//   P(a) = N [ P_cl(a) - sum_i w_i pi_i(a - a_i) ],   N = 1 / (1 - sum_i w_i),
//
// and the assembly of their density operators on a truncated Fock basis.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "punctured/error.hpp"
#include "punctured/fock.hpp"
#include "punctured/quadrature.hpp"

namespace punctured {

struct Thermal {
  double nbar = 0.0;
};

struct SqueezedThermal {
  double nbar = 0.0;
  double r = 0.0;
};

using BaseState = std::variant<Thermal, SqueezedThermal>;

/// Widths of the anisotropic Gaussian P function of a squeezed thermal state.
struct SqueezedWidths {
  double nbar_r = 0.0;
  double nbar_i = 0.0;
  bool valid() const { return nbar_r > 0.0 && nbar_i > 0.0; }
};

enum class PunctureShape { Delta, Gaussian };

struct Puncture {
  PunctureShape shape = PunctureShape::Delta;
  double b = 0.0;  // Gaussian width; unused for Delta
  Complex center{0.0, 0.0};
  double weight = 0.0;

  static Puncture delta(Complex center, double weight) {
    return {PunctureShape::Delta, 0.0, center, weight};
  }
  static Puncture gaussian(double b, Complex center, double weight) {
    return {PunctureShape::Gaussian, b, center, weight};
  }
  /// Width entering Fock-space and moment formulas (0 for a delta).
  double width() const { return shape == PunctureShape::Gaussian ? b : 0.0; }
};

struct PuncturedStateSpec {
  BaseState base = Thermal{1.0};
  std::vector<Puncture> punctures;
};

enum class Family {
  Thermal,
  SqueezedThermal,
  DeltaThermal,
  DeltaSqueezed,
  GaussianThermal,
  GaussianSqueezed,
  MultiPuncture,
};

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Thermal: return "thermal";
    case Family::SqueezedThermal: return "squeezed_thermal";
    case Family::DeltaThermal: return "delta_thermal";
    case Family::DeltaSqueezed: return "delta_squeezed";
    case Family::GaussianThermal: return "gaussian_thermal";
    case Family::GaussianSqueezed: return "gaussian_squeezed";
    case Family::MultiPuncture: return "multi_puncture";
  }
  return "unknown";
}

inline Family family_from_name(const std::string& name) {
  for (Family f : {Family::Thermal, Family::SqueezedThermal, Family::DeltaThermal, Family::DeltaSqueezed,
                   Family::GaussianThermal, Family::GaussianSqueezed, Family::MultiPuncture}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidInput("unknown family '" + name + "'");
}

inline bool is_squeezed(const PuncturedStateSpec& s) {
  return std::holds_alternative<SqueezedThermal>(s.base);
}

inline Family classify(const PuncturedStateSpec& s) {
  const bool sq = is_squeezed(s);
  if (s.punctures.empty()) return sq ? Family::SqueezedThermal : Family::Thermal;
  if (s.punctures.size() > 1) return Family::MultiPuncture;
  if (s.punctures[0].shape == PunctureShape::Delta) {
    return sq ? Family::DeltaSqueezed : Family::DeltaThermal;
  }
  return sq ? Family::GaussianSqueezed : Family::GaussianThermal;
}

// ---------------------------------------------------------------------------
// Squeezed thermal parametrization

inline SqueezedWidths squeezed_widths(double nbar, double r) {
  const double s = std::sinh(r);
  return {std::exp(-2.0 * r) * nbar - std::exp(-r) * s,
          std::exp(2.0 * r) * nbar + std::exp(r) * s};
}

inline void require_valid(const SqueezedWidths& w) {
  if (!w.valid()) {
    std::ostringstream os;
    os << "squeezed thermal P function does not exist: requires "
          "exp(-2|r|) nbar - exp(-|r|) sinh|r| > 0 (got widths nbar_R = "
       << w.nbar_r << ", nbar_I = " << w.nbar_i << ")";
    throw InvalidInput(os.str());
  }
}

/// Inverse of squeezed_widths: the (nbar, r) producing the given widths.
inline SqueezedThermal squeezing_from_widths(const SqueezedWidths& w) {
  require_valid(w);
  const double one_plus = std::sqrt((1.0 + 2.0 * w.nbar_r) * (1.0 + 2.0 * w.nbar_i));
  const double nbar = 0.5 * (one_plus - 1.0);
  const double r = -0.5 * std::log((1.0 + 2.0 * w.nbar_r) / one_plus);
  return {nbar, r};
}

inline SqueezedWidths widths_of(const SqueezedThermal& s) { return squeezed_widths(s.nbar, s.r); }

/// Mean photon number of the unpunctured base state.
inline double base_mean_photons(const BaseState& base) {
  if (const auto* t = std::get_if<Thermal>(&base)) return t->nbar;
  const auto w = widths_of(std::get<SqueezedThermal>(base));
  return 0.5 * (w.nbar_r + w.nbar_i);
}

// ---------------------------------------------------------------------------
// Validation and normalization

inline double weight_sum(const PuncturedStateSpec& s) {
  return std::accumulate(s.punctures.begin(), s.punctures.end(), 0.0,
                         [](double acc, const Puncture& p) { return acc + p.weight; });
}

inline void validate(const PuncturedStateSpec& s) {
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    if (!std::isfinite(t->nbar) || t->nbar < 0.0) {
      throw InvalidInput("thermal base requires finite nbar >= 0");
    }
  } else {
    const auto& sq = std::get<SqueezedThermal>(s.base);
    if (!std::isfinite(sq.nbar) || sq.nbar < 0.0 || !std::isfinite(sq.r)) {
      throw InvalidInput("squeezed thermal base requires finite nbar >= 0 and finite r");
    }
    require_valid(widths_of(sq));
  }
  for (std::size_t i = 0; i < s.punctures.size(); ++i) {
    const Puncture& p = s.punctures[i];
    const std::string tag = "puncture " + std::to_string(i) + ": ";
    if (!std::isfinite(p.weight) || p.weight < 0.0) throw InvalidInput(tag + "weight must be >= 0");
    require_finite(p.center, "puncture center");
    if (p.shape == PunctureShape::Gaussian && !(p.b > 0.0 && std::isfinite(p.b))) {
      throw InvalidInput(tag + "Gaussian width b must be > 0");
    }
  }
  const double sum = weight_sum(s);
  if (!(sum < 1.0)) {
    std::ostringstream os;
    os << "normalization failure: puncture weights sum to " << sum
       << " >= 1, so N = 1/(1 - sum w) is not positive and finite";
    throw InvalidInput(os.str());
  }
}

/// N = 1 / (1 - sum_i w_i).
inline double normalization(const PuncturedStateSpec& s) {
  const double sum = weight_sum(s);
  if (!(sum < 1.0)) {
    std::ostringstream os;
    os << "normalization failure: puncture weights sum to " << sum << " >= 1";
    throw InvalidInput(os.str());
  }
  return 1.0 / (1.0 - sum);
}

// ---------------------------------------------------------------------------
// P function (smooth part)

inline double base_p_value(const BaseState& base, Complex a) {
  if (const auto* t = std::get_if<Thermal>(&base)) {
    if (t->nbar == 0.0) return 0.0;  // vacuum: P is a delta at the origin
    return std::exp(-std::norm(a) / t->nbar) / (kPi * t->nbar);
  }
  const auto w = widths_of(std::get<SqueezedThermal>(base));
  return std::exp(-(a.real() * a.real() / w.nbar_r + a.imag() * a.imag() / w.nbar_i)) /
         (kPi * std::sqrt(w.nbar_r * w.nbar_i));
}

/// Smooth part of P at `a`: N (P_cl(a) - sum over Gaussian punctures).
inline double smooth_p_value(const PuncturedStateSpec& s, Complex a) {
  double v = base_p_value(s.base, a);
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Gaussian) {
      v -= p.weight * std::exp(-std::norm(a - p.center) / p.b) / (kPi * p.b);
    }
  }
  return normalization(s) * v;
}

// ---------------------------------------------------------------------------
// Density operator assembly

/// Unnormalized base operator on the truncated basis.
inline CMatrix base_operator(const BaseState& base, int n_max) {
  require_n_max(n_max);
  if (const auto* t = std::get_if<Thermal>(&base)) {
    const auto p = thermal_populations(t->nbar, n_max + 1);
    CMatrix m = CMatrix::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) m(n, n) = p[static_cast<std::size_t>(n)];
    return m;
  }
  const auto& sq = std::get<SqueezedThermal>(base);
  if (std::abs(sq.r) > kSqueezeSafeLimit) {
    throw InvalidInput("squeezing parameter exceeds the safe limit");
  }
  const Eigen::MatrixXd rows = detail::squeeze_rows(sq.r, n_max);
  const auto p = thermal_populations(sq.nbar, static_cast<int>(rows.cols()));
  const Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), rows.cols());
  Eigen::MatrixXd m = rows * pv.asDiagonal() * rows.transpose();
  m = (0.5 * (m + m.transpose())).eval();
  return m.cast<Complex>();
}

/// Unnormalized operator of one puncture (pi_i shape, unit weight).
inline CMatrix puncture_operator(const Puncture& p, int n_max) {
  return detail::displaced_thermal_elements(p.center, p.width(), n_max, std::nullopt);
}

/// rho = N (M_base - sum_i w_i M_i) on {|0>, ..., |n_max>}.
inline FockOperator build_density(const PuncturedStateSpec& s, int n_max) {
  validate(s);
  CMatrix m = base_operator(s.base, n_max);
  for (const Puncture& p : s.punctures) m -= p.weight * puncture_operator(p, n_max);
  m *= normalization(s);
  m = (0.5 * (m + m.adjoint())).eval();
  return FockOperator(std::move(m), true);
}

/// Rough cut-off that captures the state; used as a starting point by the
/// convergence policies and as a suggestion when truncation is too small.
inline int suggested_n_max(const PuncturedStateSpec& s) {
  double extent = base_mean_photons(s.base);
  for (const Puncture& p : s.punctures) extent += std::norm(p.center) + p.width();
  return std::max(15, static_cast<int>(std::ceil(10.0 * extent)));
}

/// build_density, but rejects truncations whose trace misses 1 by more than
/// `trace_tol` instead of silently renormalizing.
inline FockOperator checked_build_density(const PuncturedStateSpec& s, int n_max,
                                          double trace_tol = 1e-6) {
  FockOperator rho = build_density(s, n_max);
  const double deficit = std::abs(1.0 - rho.trace());
  if (deficit > trace_tol) {
    int suggestion = std::max(2 * n_max, suggested_n_max(s));
    std::ostringstream os;
    os << "truncation too small: trace deficit " << deficit << " at n_max = " << n_max
       << " exceeds " << trace_tol << "; try n_max >= " << suggestion;
    throw TruncationError(os.str(), suggestion);
  }
  return rho;
}

// ---------------------------------------------------------------------------
// Independent route: rho = integral of P(b) |b><b| d^2 b by polar quadrature

struct PolarQuadratureOptions {
  int angular_nodes = 512;
  double panel_length = 0.25;
  int panel_order = 12;
};

struct QuadratureDensity {
  FockOperator rho;
  double residual;  // max-entry change between the base and refined resolution
};

namespace detail {

/// Narrowest length scale of the smooth part of P.
inline double smooth_p_scale(const PuncturedStateSpec& s) {
  double w2 = 0.0;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    w2 = t->nbar;
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    w2 = std::min(w.nbar_r, w.nbar_i);
  }
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Gaussian) w2 = std::min(w2, p.b);
  }
  return std::sqrt(w2);
}

/// Radial rule on [0, radius]: uniform panels, with the first panel split
/// geometrically down to a quarter of the narrowest P width so that narrow
/// Gaussians at the origin are resolved.
inline QuadratureRule radial_rule(const PuncturedStateSpec& s, double radius, const PolarQuadratureOptions& o) {
  std::vector<double> breaks{0.0};
  double edge = 0.25 * smooth_p_scale(s);
  if (edge < o.panel_length) {
    for (; edge < o.panel_length; edge *= 2.0) breaks.push_back(edge);
  }
  const int panels = std::max(1, static_cast<int>(std::ceil(radius / o.panel_length)));
  for (int k = 1; k <= panels; ++k) breaks.push_back(radius * k / panels);
  std::sort(breaks.begin(), breaks.end());
  QuadratureRule out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k + 1] <= breaks[k]) continue;
    const QuadratureRule piece = gauss_legendre(o.panel_order, breaks[k], breaks[k + 1]);
    out.nodes.insert(out.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    out.weights.insert(out.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return out;
}

inline CMatrix polar_quadrature_smooth(const PuncturedStateSpec& s, int n_max,
                                       const PolarQuadratureOptions& o) {
  const int dim = n_max + 1;
  const double radius = std::sqrt(double(n_max)) + 9.0;
  const QuadratureRule radial = radial_rule(s, radius, o);
  const int nt = o.angular_nodes;
  const double dtheta = 2.0 * kPi / nt;

  // e^{i k theta_j} for k = 0..n_max
  CMatrix phase(nt, dim);
  for (int j = 0; j < nt; ++j) {
    for (int k = 0; k < dim; ++k) phase(j, k) = std::polar(1.0, k * j * dtheta);
  }
  std::vector<double> half_log_fact(static_cast<std::size_t>(dim));
  for (int n = 0; n < dim; ++n) half_log_fact[static_cast<std::size_t>(n)] = 0.5 * std::lgamma(n + 1.0);

  CMatrix out = CMatrix::Zero(dim, dim);
  Eigen::VectorXd samples(nt);
  for (std::size_t ir = 0; ir < radial.nodes.size(); ++ir) {
    const double rho = radial.nodes[ir];
    if (rho <= 0.0) continue;
    for (int j = 0; j < nt; ++j) samples(j) = smooth_p_value(s, std::polar(rho, j * dtheta));
    // c_k = integral P(rho, theta) e^{i k theta} dtheta, k >= 0
    const CVector ck = phase.transpose() * samples.cast<Complex>() * dtheta;
    const double log_rho = std::log(rho);
    for (int n = 0; n < dim; ++n) {
      for (int m = n; m < dim; ++m) {
        const double lw = (1.0 + m + n) * log_rho - rho * rho - half_log_fact[static_cast<std::size_t>(m)] -
                          half_log_fact[static_cast<std::size_t>(n)];
        out(m, n) += radial.weights[ir] * std::exp(lw) * ck(m - n);
      }
    }
  }
  for (int n = 0; n < dim; ++n) {
    for (int m = n + 1; m < dim; ++m) out(n, m) = std::conj(out(m, n));
  }
  return out;
}

}  // namespace detail

/// Density operator from the P representation by numerical integration of
/// the smooth part (polar grid: trapezoid in angle, composite Gauss-Legendre
/// in radius); delta punctures enter as exact coherent projectors.
inline QuadratureDensity density_from_P_quadrature(const PuncturedStateSpec& s, int n_max,
                                                   const PolarQuadratureOptions& opts = {}) {
  validate(s);
  require_n_max(n_max);
  if (const auto* t = std::get_if<Thermal>(&s.base); t && t->nbar == 0.0) {
    throw InvalidInput("vacuum base has a singular P function; use nbar > 0");
  }
  PolarQuadratureOptions coarse = opts;
  coarse.angular_nodes = std::max(16, opts.angular_nodes / 2);
  coarse.panel_length = opts.panel_length * 2.0;

  CMatrix fine_m = detail::polar_quadrature_smooth(s, n_max, opts);
  const CMatrix coarse_m = detail::polar_quadrature_smooth(s, n_max, coarse);
  const double residual = (fine_m - coarse_m).cwiseAbs().maxCoeff();

  const double norm = normalization(s);
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Delta) {
      const CVector c = coherent_vector(p.center, n_max).amplitudes();
      fine_m -= norm * p.weight * (c * c.adjoint());
    }
  }
  fine_m = (0.5 * (fine_m + fine_m.adjoint())).eval();
  return {FockOperator(std::move(fine_m), true), residual};
}

}  // namespace punctured
