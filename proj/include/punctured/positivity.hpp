#pragma once

// Puncture-weight bounds: analytic necessary (NC), sufficient (SC) and
// necessary-and-sufficient (NSC) conditions, the exact maximal weight by
// eigenvalue bisection, tightness witnesses and positivity reports.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "punctured/error.hpp"
#include "punctured/fock.hpp"
#include "punctured/state.hpp"

namespace punctured {

enum class BoundKind { Necessary, Sufficient, NecessaryAndSufficient };

inline std::string bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::Necessary: return "necessary";
    case BoundKind::Sufficient: return "sufficient";
    case BoundKind::NecessaryAndSufficient: return "necessary-and-sufficient";
  }
  return "unknown";
}

struct BoundResult {
  double value = 0.0;
  BoundKind kind = BoundKind::Necessary;
  Family family = Family::DeltaThermal;
  bool boundary_case = false;  // b == nbar for Gaussian punctures
};

// ---------------------------------------------------------------------------
// Analytic bounds

/// w <= exp(-|a|^2/nbar)/(nbar+1).
inline BoundResult nc_bound_delta_thermal(double nbar, Complex alpha) {
  if (!(nbar > 0.0) || !std::isfinite(nbar)) {
    throw InvalidInput("delta puncture of a thermal state requires nbar > 0");
  }
  require_finite(alpha, "puncture center");
  return {std::exp(-std::norm(alpha) / nbar) / (nbar + 1.0), BoundKind::Necessary,
          Family::DeltaThermal};
}

/// Gershgorin bound
///   w < e^{|a|^2}/((nbar+1) f(|a|)) min_n t_n,  t_n = (nbar/((nbar+1)|a|))^n sqrt(n!),
/// f(x) = sum_m x^m/sqrt(m!). Evaluated in log space.
inline BoundResult sc_bound_delta_thermal(double nbar, Complex alpha) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw InvalidInput("nbar must be finite and >= 0");
  require_finite(alpha, "puncture center");
  if (nbar == 0.0) return {0.0, BoundKind::Sufficient, Family::DeltaThermal};
  const double a = std::abs(alpha);
  if (a == 0.0) return {1.0 / (nbar + 1.0), BoundKind::Sufficient, Family::DeltaThermal};

  // min_n log t_n: the ratio t_{n+1}/t_n = (nbar/((nbar+1)a)) sqrt(n+1) increases
  // with n, so the scan stops at the first ratio >= 1.
  const double log_c = std::log(nbar / ((nbar + 1.0) * a));
  double log_t = 0.0, log_min = 0.0;
  for (int n = 0;; ++n) {
    const double log_ratio = log_c + 0.5 * std::log(n + 1.0);
    if (log_ratio >= 0.0) break;
    log_t += log_ratio;
    log_min = std::min(log_min, log_t);
  }

  // log f(a): terms peak near m ~ a^2; sum until they are negligible past the peak.
  const double log_a = std::log(a);
  std::vector<double> terms;
  double peak = -std::numeric_limits<double>::infinity();
  for (int m = 0;; ++m) {
    const double lt = m * log_a - 0.5 * std::lgamma(m + 1.0);
    terms.push_back(lt);
    peak = std::max(peak, lt);
    if (m > a * a + 10 && lt < peak - 40.0) break;
  }
  double s = 0.0;
  for (double lt : terms) s += std::exp(lt - peak);
  const double log_f = peak + std::log(s);

  const double value = std::exp(a * a - std::log(nbar + 1.0) - log_f + log_min);
  return {value, BoundKind::Sufficient, Family::DeltaThermal};
}

/// w <= 2 sqrt(R I) exp(-(a_R^2/R + a_I^2/I)) / (R + I + 2 R I).
inline BoundResult nc_bound_delta_squeezed(const SqueezedWidths& w, Complex alpha) {
  if (!w.valid()) throw InvalidInput("squeezed widths must both be > 0");
  require_finite(alpha, "puncture center");
  const double R = w.nbar_r, I = w.nbar_i;
  const double expo = alpha.real() * alpha.real() / R + alpha.imag() * alpha.imag() / I;
  return {2.0 * std::sqrt(R * I) * std::exp(-expo) / (R + I + 2.0 * R * I), BoundKind::Necessary,
          Family::DeltaSqueezed};
}

/// Vacuum-centered Gaussian: w <= (b+1)/(nbar+1) iff b <= nbar, else 0.
inline BoundResult nsc_bound_gaussian_vacuum(double nbar, double b) {
  if (!(nbar > 0.0) || !(b > 0.0)) throw InvalidInput("Gaussian puncture requires nbar > 0, b > 0");
  BoundResult r{0.0, BoundKind::NecessaryAndSufficient, Family::GaussianThermal};
  if (b <= nbar) r.value = std::min(1.0, (b + 1.0) / (nbar + 1.0));
  r.boundary_case = (b == nbar);
  return r;
}

/// w <= (b+1)/(nbar+1) exp(-|a|^2/(nbar-b)) for b < nbar. At b >= nbar the
/// limit is used: 0 off the origin, and the vacuum-centered value at a = 0.
inline BoundResult nc_bound_gaussian(double nbar, double b, Complex alpha) {
  if (!(nbar > 0.0) || !(b > 0.0)) throw InvalidInput("Gaussian puncture requires nbar > 0, b > 0");
  require_finite(alpha, "puncture center");
  if (alpha == Complex(0.0, 0.0)) return nsc_bound_gaussian_vacuum(nbar, b);
  BoundResult r{0.0, BoundKind::Necessary, Family::GaussianThermal};
  r.boundary_case = (b == nbar);
  if (b < nbar) r.value = (b + 1.0) / (nbar + 1.0) * std::exp(-std::norm(alpha) / (nbar - b));
  return r;
}

/// The analytic NC (or NSC) bound for single-puncture specs where the family
/// has one; nullopt for Gaussian punctures on squeezed bases, multi-puncture
/// and unpunctured specs.
inline std::optional<BoundResult> analytic_nc_bound(const PuncturedStateSpec& s) {
  const Family f = classify(s);
  switch (f) {
    case Family::DeltaThermal:
      return nc_bound_delta_thermal(std::get<Thermal>(s.base).nbar, s.punctures[0].center);
    case Family::GaussianThermal:
      return nc_bound_gaussian(std::get<Thermal>(s.base).nbar, s.punctures[0].b,
                               s.punctures[0].center);
    case Family::DeltaSqueezed:
      return nc_bound_delta_squeezed(widths_of(std::get<SqueezedThermal>(s.base)),
                                     s.punctures[0].center);
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Exact maximal weight

struct WmaxOptions {
  double rel_tol = 1e-7;
  double abs_tol = 1e-15;
  int n_max_start = 0;  // 0: max(15, ceil(10 (nbar + |a|^2 + b)))
  int n_max_cap = 512;
};

struct WmaxLevel {
  int n_max;
  double wmax;
};

struct WmaxResult {
  double value = 0.0;
  bool converged = false;
  int n_max_used = 0;
  std::vector<WmaxLevel> history;
};

/// Largest n_max at which the squeezed-base factorization stays accurate.
/// The lab-frame squeezed thermal operator has eigenvalues spanning many
/// orders of magnitude; past this size the padded exponential and the
/// triangular factor lose them (values drift below the tight bound near 96).
inline constexpr int kSqueezedWmaxCap = 80;

namespace detail {

inline void require_single_puncture(const PuncturedStateSpec& s) {
  if (s.punctures.size() != 1) {
    throw InvalidInput("numeric maximal weight requires exactly one puncture");
  }
}

/// K~ = B^{-1/2} K B^{-1/2} (up to a congruence that preserves inertia), so
/// that B - w K >= 0  <=>  I - w K~ >= 0.
inline CMatrix whitened_puncture(const PuncturedStateSpec& s, int n_max) {
  const Puncture& p = s.punctures[0];
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    if (!(t->nbar > 0.0)) throw InvalidInput("vacuum base admits no puncture (nbar must be > 0)");
    // Thermal base is phase invariant; rotating the center to the real axis
    // is an exact diagonal unitary congruence and keeps the matrix real.
    return displaced_thermal_elements(Complex(std::abs(p.center), 0.0), p.width(), n_max, t->nbar);
  }
  const auto& sq = std::get<SqueezedThermal>(s.base);
  if (std::abs(sq.r) > kSqueezeSafeLimit) throw InvalidInput("squeezing exceeds the safe limit");
  // B = F F^T with F = S_rows diag(sqrt p); F^T = Q R gives B = R^T R.
  const Eigen::MatrixXd rows = squeeze_rows(sq.r, n_max);
  const auto pops = thermal_populations(sq.nbar, static_cast<int>(rows.cols()));
  Eigen::VectorXd root(rows.cols());
  for (Eigen::Index i = 0; i < rows.cols(); ++i) root(i) = std::sqrt(pops[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd ft = (rows * root.asDiagonal()).transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ft);
  const Eigen::MatrixXd r_full = qr.matrixQR().topRows(n_max + 1).triangularView<Eigen::Upper>();
  const Eigen::VectorXd diag = r_full.diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 0.0) || !diag.allFinite()) {
    throw NumericalFailure("squeezed base factorization is singular at n_max = " +
                           std::to_string(n_max));
  }
  const CMatrix rc = r_full.cast<Complex>();
  const CMatrix k = displaced_thermal_elements(p.center, p.width(), n_max, std::nullopt);
  // Y = R^{-T} K, then K~ = (R^{-T} Y^dag)^dag.
  const CMatrix y = rc.transpose().triangularView<Eigen::Lower>().solve(k);
  const CMatrix ydag = y.adjoint();
  CMatrix kt = rc.transpose().triangularView<Eigen::Lower>().solve(ydag).adjoint();
  if (!kt.allFinite()) throw NumericalFailure("whitened puncture operator is not finite");
  return kt;
}

inline double bisect_weight(const Eigen::VectorXd& spectrum_kt, double rel_tol, double abs_tol) {
  // eig(I - w K~) = 1 - w eig(K~) exactly, so the sign test below is the
  // minimum eigenvalue of the whitened pencil at each trial weight.
  const double lmax = spectrum_kt.maxCoeff();
  auto min_eig_at = [&](double w) { return 1.0 - w * lmax; };
  if (min_eig_at(1.0) >= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 0.25 * (abs_tol + rel_tol * lo)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (min_eig_at(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// Maximal weight at a single fixed truncation.
inline double numeric_wmax_at(const PuncturedStateSpec& spec, int n_max, double rel_tol = 1e-7,
                              double abs_tol = 1e-15) {
  detail::require_single_puncture(spec);
  require_n_max(n_max);
  PuncturedStateSpec probe = spec;
  probe.punctures[0].weight = 0.0;
  validate(probe);
  const CMatrix kt = detail::whitened_puncture(probe, n_max);
  return detail::bisect_weight(detail::hermitian_eigenvalues(kt), rel_tol, abs_tol);
}

/// Reference route without whitening: bisection on the sign of
/// min_eigenvalue(M_base - w M_pi). Only reliable while the smallest base
/// population stays well above roundoff (small n_max).
inline double numeric_wmax_direct(const PuncturedStateSpec& spec, int n_max, double abs_tol = 1e-12) {
  detail::require_single_puncture(spec);
  PuncturedStateSpec probe = spec;
  probe.punctures[0].weight = 0.0;
  validate(probe);
  const CMatrix base = base_operator(probe.base, n_max);
  const CMatrix k = puncture_operator(probe.punctures[0], n_max);
  auto psd = [&](double w) {
    return min_eigenvalue(FockOperator(CMatrix(base - w * k), true)) >= 0.0;
  };
  if (psd(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > abs_tol) {
    const double mid = 0.5 * (lo + hi);
    (psd(mid) ? lo : hi) = mid;
  }
  return lo;
}

inline int wmax_start_n_max(const PuncturedStateSpec& s) {
  const Puncture& p = s.punctures.at(0);
  const double extent = base_mean_photons(s.base) + std::norm(p.center) + p.width();
  return std::max(15, static_cast<int>(std::ceil(10.0 * extent)));
}

/// Maximal weight under the convergence policy: start at wmax_start_n_max,
/// double until successive values differ by less than half the tolerance.
inline WmaxResult numeric_wmax(const PuncturedStateSpec& spec, const WmaxOptions& opt = {}) {
  detail::require_single_puncture(spec);
  WmaxResult res;
  int cap = opt.n_max_cap;
  if (is_squeezed(spec)) cap = std::min(cap, kSqueezedWmaxCap);
  int n = opt.n_max_start > 0 ? opt.n_max_start : wmax_start_n_max(spec);
  n = std::min(n, cap);
  for (;;) {
    const double w = numeric_wmax_at(spec, n, opt.rel_tol, opt.abs_tol);
    res.history.push_back({n, w});
    res.value = w;
    res.n_max_used = n;
    if (res.history.size() >= 2) {
      const double prev = res.history[res.history.size() - 2].wmax;
      const double tol = opt.abs_tol + opt.rel_tol * std::abs(w);
      if (std::abs(w - prev) < 0.5 * tol) {
        res.converged = true;
        break;
      }
    }
    if (n >= cap) break;
    n = std::min(2 * n, cap);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Tightness witnesses

/// Normalized candidate null vector of rho at the analytic bound:
///  - delta thermal:     |((nbar+1)/nbar) a1>
///  - Gaussian thermal:  |((nbar+1)/(nbar-b)) a1>
///  - delta squeezed:    S(r') D(gamma)|0> with tanh r' = (R - I)/(2 R I) and
///                       gamma = (R + I + 2RI)/sqrt((R - I + 2RI)(I - R + 2RI)) a1.
inline FockVector witness_vector(const PuncturedStateSpec& s, int n_max) {
  detail::require_single_puncture(s);
  const Puncture& p = s.punctures[0];
  const Family f = classify(s);
  if (f == Family::DeltaThermal) {
    const double nbar = std::get<Thermal>(s.base).nbar;
    return coherent_vector((nbar + 1.0) / nbar * p.center, n_max);
  }
  if (f == Family::GaussianThermal) {
    const double nbar = std::get<Thermal>(s.base).nbar;
    if (p.b >= nbar) throw InvalidInput("witness undefined: Gaussian width b must be < nbar");
    return coherent_vector((nbar + 1.0) / (nbar - p.b) * p.center, n_max);
  }
  if (f == Family::DeltaSqueezed) {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    require_valid(w);
    const double R = w.nbar_r, I = w.nbar_i;
    const double t = (R - I) / (2.0 * R * I);
    if (!(std::abs(t) < 1.0)) {
      std::ostringstream os;
      os << "witness undefined: squeezing of the witness requires |(R - I)/(2 R I)| < 1, got "
         << std::abs(t);
      throw InvalidInput(os.str());
    }
    const double rp = std::atanh(t);
    if (std::abs(rp) > kSqueezeSafeLimit) throw InvalidInput("witness squeezing exceeds the safe limit");
    const double g_den = (R - I + 2.0 * R * I) * (I - R + 2.0 * R * I);
    const Complex gamma = (R + I + 2.0 * R * I) / std::sqrt(g_den) * p.center;
    const Eigen::MatrixXd rows = detail::squeeze_rows(rp, n_max);
    const CVector coh = coherent_vector(gamma, static_cast<int>(rows.cols()) - 1).amplitudes();
    CVector v = rows.cast<Complex>() * coh;
    v /= v.norm();
    return FockVector(std::move(v));
  }
  throw InvalidInput("no analytic witness for family " + family_name(f));
}

/// ||rho v|| / ||rho||_2 for the family's witness v; rho built from `spec`
/// as given (callers set the weight to the analytic bound).
inline double zero_eigenvector_residual(const PuncturedStateSpec& spec, int n_max) {
  const FockVector v = witness_vector(spec, n_max);
  const FockOperator rho = build_density(spec, n_max);
  const Eigen::VectorXd ev = detail::hermitian_eigenvalues(rho.entries());
  const double spectral = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return (rho.entries() * v.amplitudes()).norm() / spectral;
}

// ---------------------------------------------------------------------------
// Reports

enum class Verdict { Positive, NotPositive, Indeterminate };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Positive: return "positive";
    case Verdict::NotPositive: return "not-positive";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

struct EigenLevel {
  int n_max;
  double min_eigenvalue;
};

struct PositivityReport {
  Family family = Family::Thermal;
  std::optional<bool> nc_pass;          // absent when no analytic bound applies
  std::optional<BoundResult> nc_bound;
  double gershgorin_margin = 0.0;
  double min_eigenvalue = 0.0;
  int n_max_used = 0;
  std::vector<EigenLevel> convergence_history;
  Verdict verdict = Verdict::Indeterminate;
  bool boundary_case = false;
};

struct ReportOptions {
  int n_max_start = 0;       // 0: suggested_n_max(spec)
  int n_max_cap = 256;
  double psd_tol = 1e-10;    // relative to the trace
  double converge_abs = 1e-9;
};

inline PositivityReport positivity_report(const PuncturedStateSpec& spec, const ReportOptions& opt = {}) {
  validate(spec);
  PositivityReport rep;
  rep.family = classify(spec);
  if (auto b = analytic_nc_bound(spec)) {
    rep.nc_bound = b;
    rep.boundary_case = b->boundary_case;
    rep.nc_pass = spec.punctures[0].weight <= b->value * (1.0 + 1e-12);
  }
  int cap = opt.n_max_cap;
  if (is_squeezed(spec)) cap = std::min(cap, kSqueezedWmaxCap);
  int n = std::min(opt.n_max_start > 0 ? opt.n_max_start : suggested_n_max(spec), cap);
  bool converged = false;
  double trace = 1.0;
  for (;;) {
    const FockOperator rho = build_density(spec, n);
    trace = rho.trace();
    rep.min_eigenvalue = min_eigenvalue(rho);
    rep.gershgorin_margin = gershgorin_margin(rho);
    rep.n_max_used = n;
    rep.convergence_history.push_back({n, rep.min_eigenvalue});
    if (rep.convergence_history.size() >= 2) {
      const double prev = rep.convergence_history[rep.convergence_history.size() - 2].min_eigenvalue;
      if (std::abs(prev - rep.min_eigenvalue) < opt.converge_abs) {
        converged = true;
        break;
      }
    }
    if (n >= cap) break;
    n = std::min(2 * n, cap);
  }
  const double floor = -opt.psd_tol * trace;
  if (rep.gershgorin_margin >= 0.0) {
    rep.verdict = Verdict::Positive;
  } else if (rep.min_eigenvalue < floor) {
    // A negative eigenvalue of the truncated block is a negative expectation
    // value of the full operator, so no convergence is needed to refute.
    rep.verdict = Verdict::NotPositive;
  } else if (converged) {
    rep.verdict = Verdict::Positive;
  } else {
    rep.verdict = Verdict::Indeterminate;
  }
  return rep;
}

}  // namespace punctured
