#pragma once

// P and Wigner functions of punctured states, negativity thresholds, a
// quadrature convolution oracle, numerical minima and sampled grids.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "punctured/error.hpp"
#include "punctured/fock.hpp"
#include "punctured/quadrature.hpp"
#include "punctured/state.hpp"

namespace punctured {

struct DeltaComponent {
  Complex center;
  double signed_weight;  // -N w_i
};

struct PValue {
  double smooth = 0.0;
  std::vector<DeltaComponent> deltas;
};

/// Distributional parts of P: a vacuum thermal base contributes +delta(0).
inline std::vector<DeltaComponent> delta_components(const PuncturedStateSpec& s) {
  const double norm = normalization(s);
  std::vector<DeltaComponent> out;
  if (const auto* t = std::get_if<Thermal>(&s.base); t && t->nbar == 0.0) {
    out.push_back({Complex(0.0, 0.0), norm});
  }
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Delta) out.push_back({p.center, -norm * p.weight});
  }
  return out;
}

inline PValue eval_P(const PuncturedStateSpec& s, Complex a) {
  validate(s);
  return {smooth_p_value(s, a), delta_components(s)};
}

// ---------------------------------------------------------------------------
// Wigner function

namespace detail {

/// Wigner function of the unnormalized base state (without 2/pi).
inline double base_wigner_kernel(const BaseState& base, Complex a) {
  if (const auto* t = std::get_if<Thermal>(&base)) {
    const double s = 1.0 + 2.0 * t->nbar;
    return std::exp(-2.0 * std::norm(a) / s) / s;
  }
  const auto& sq = std::get<SqueezedThermal>(base);
  const auto w = widths_of(sq);
  const double sr = 1.0 + 2.0 * w.nbar_r, si = 1.0 + 2.0 * w.nbar_i;
  return std::exp(-2.0 * (a.real() * a.real() / sr + a.imag() * a.imag() / si)) /
         (1.0 + 2.0 * sq.nbar);
}

inline double puncture_wigner_kernel(const Puncture& p, Complex a) {
  const double s = 1.0 + 2.0 * p.width();
  return std::exp(-2.0 * std::norm(a - p.center) / s) / s;
}

}  // namespace detail

/// W(a) = (2N/pi) [W_base(a) - sum_i w_i e^{-2|a-a_i|^2/(1+2b_i)}/(1+2b_i)].
inline double eval_W(const PuncturedStateSpec& s, Complex a) {
  validate(s);
  double v = detail::base_wigner_kernel(s.base, a);
  for (const Puncture& p : s.punctures) v -= p.weight * detail::puncture_wigner_kernel(p, a);
  return 2.0 * normalization(s) / kPi * v;
}

// ---------------------------------------------------------------------------
// Negativity thresholds

/// Infimum weight above which the smooth part of P takes negative values.
/// Delta punctures: 0 (any positive weight is nonclassical).
inline double p_negativity_threshold(const PuncturedStateSpec& s) {
  if (s.punctures.size() != 1) throw InvalidInput("P threshold is defined for one puncture");
  const Puncture& p = s.punctures[0];
  if (p.shape == PunctureShape::Delta) return 0.0;
  if (is_squeezed(s)) throw InvalidInput("no P threshold for Gaussian punctures of squeezed states");
  const double nbar = std::get<Thermal>(s.base).nbar;
  if (!(p.b < nbar)) throw InvalidInput("P threshold requires b < nbar");
  return p.b / nbar * std::exp(-std::norm(p.center) / (nbar - p.b));
}

/// Infimum weight above which the Wigner function takes negative values.
inline double wigner_negativity_threshold(const PuncturedStateSpec& s) {
  if (s.punctures.size() != 1) throw InvalidInput("Wigner threshold is defined for one puncture");
  const Puncture& p = s.punctures[0];
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    const double nbar = t->nbar;
    if (p.shape == PunctureShape::Delta) {
      if (!(nbar > 0.0)) throw InvalidInput("delta puncture requires nbar > 0");
      return std::exp(-std::norm(p.center) / nbar) / (1.0 + 2.0 * nbar);
    }
    if (!(p.b < nbar)) throw InvalidInput("Wigner threshold requires b < nbar");
    return (1.0 + 2.0 * p.b) / (1.0 + 2.0 * nbar) * std::exp(-std::norm(p.center) / (nbar - p.b));
  }
  if (p.shape != PunctureShape::Delta) {
    throw InvalidInput("no Wigner threshold for Gaussian punctures of squeezed states");
  }
  const auto& sq = std::get<SqueezedThermal>(s.base);
  const auto w = widths_of(sq);
  const double e = p.center.real() * p.center.real() / w.nbar_r +
                   p.center.imag() * p.center.imag() / w.nbar_i;
  return std::exp(-e) / (1.0 + 2.0 * sq.nbar);
}

// ---------------------------------------------------------------------------
// Convolution oracle: W = (2/pi) * integral P(b) e^{-2|a-b|^2} d^2b

namespace detail {

/// Tensor Gauss-Legendre integral of f over the box center +- (hx, hy).
inline double tensor_gl(const std::function<double(double, double)>& f, Complex center, double hx,
                        double hy, int nodes) {
  const QuadratureRule gx = gauss_legendre(nodes, center.real() - hx, center.real() + hx);
  const QuadratureRule gy = gauss_legendre(nodes, center.imag() - hy, center.imag() + hy);
  double sum = 0.0;
  for (std::size_t i = 0; i < gx.nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < gy.nodes.size(); ++j) row += gy.weights[j] * f(gx.nodes[i], gy.nodes[j]);
    sum += gx.weights[i] * row;
  }
  return sum;
}

/// Integral of an anisotropic Gaussian density (widths vx, vy, center c)
/// against e^{-2|a-b|^2}; the box follows the product peak +- 8 sigma.
inline double gaussian_against_kernel(Complex c, double vx, double vy, Complex a, int nodes) {
  auto axis = [](double cc, double v, double aa) {
    const double prec = 1.0 / v + 2.0;
    return std::pair<double, double>{(cc / v + 2.0 * aa) / prec, std::sqrt(0.5 / prec)};
  };
  const auto [mx, sx] = axis(c.real(), vx, a.real());
  const auto [my, sy] = axis(c.imag(), vy, a.imag());
  auto f = [&](double x, double y) {
    const double dx = x - c.real(), dy = y - c.imag();
    const double p = std::exp(-dx * dx / vx - dy * dy / vy) / (kPi * std::sqrt(vx * vy));
    const double ex = x - a.real(), ey = y - a.imag();
    return p * std::exp(-2.0 * (ex * ex + ey * ey));
  };
  return tensor_gl(f, Complex(mx, my), 8.0 * sx, 8.0 * sy, nodes);
}

}  // namespace detail

/// Wigner function from P by numerical convolution; delta parts analytic.
inline double wigner_by_convolution(const PuncturedStateSpec& s, Complex a, int nodes = 96) {
  validate(s);
  const double norm = normalization(s);
  double smooth = 0.0;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    if (t->nbar > 0.0) {
      smooth += detail::gaussian_against_kernel(Complex(0.0, 0.0), t->nbar, t->nbar, a, nodes);
    }
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    smooth += detail::gaussian_against_kernel(Complex(0.0, 0.0), w.nbar_r, w.nbar_i, a, nodes);
  }
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Gaussian) {
      smooth -= p.weight * detail::gaussian_against_kernel(p.center, p.b, p.b, a, nodes);
    }
  }
  double total = norm * smooth;
  for (const DeltaComponent& d : delta_components(s)) {
    total += d.signed_weight * std::exp(-2.0 * std::norm(a - d.center));
  }
  return 2.0 / kPi * total;
}

/// Half-width of a square that holds the smooth P of `s` to ~e^{-25}.
inline double p_support_half_width(const PuncturedStateSpec& s) {
  double width = 0.0;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    width = 5.0 * std::sqrt(t->nbar);
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    width = 5.0 * std::sqrt(std::max(w.nbar_r, w.nbar_i));
  }
  for (const Puncture& p : s.punctures) {
    width = std::max(width, std::abs(p.center) + 5.0 * std::sqrt(p.width() + 0.5));
  }
  return width;
}

/// Quadrature of the smooth P over a square of half-width
/// max(5 sqrt(nbar), |a_i| + 5 sqrt(b_i + 1/2)), plus the delta weights.
inline double integrate_P(const PuncturedStateSpec& s, int nodes_per_axis = 200) {
  validate(s);
  const double h = p_support_half_width(s);
  const int panels = 4;
  const QuadratureRule g = composite_gauss_legendre(nodes_per_axis / panels, panels, -h, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      sum += g.weights[i] * g.weights[j] * smooth_p_value(s, Complex(g.nodes[i], g.nodes[j]));
    }
  }
  for (const DeltaComponent& d : delta_components(s)) sum += d.signed_weight;
  return sum;
}

/// Quadrature of W over the plane (integral W d^2a = 1).
inline double integrate_W(const PuncturedStateSpec& s, int nodes_per_axis = 200) {
  validate(s);
  const double h = p_support_half_width(s) + 5.0;
  const int panels = 4;
  const QuadratureRule g = composite_gauss_legendre(nodes_per_axis / panels, panels, -h, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      sum += g.weights[i] * g.weights[j] * eval_W(s, Complex(g.nodes[i], g.nodes[j]));
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Numerical minimum

struct Region {
  double re_min = -3.0, re_max = 3.0, im_min = -3.0, im_max = 3.0;
  bool contains(Complex a) const {
    return a.real() >= re_min && a.real() <= re_max && a.imag() >= im_min && a.imag() <= im_max;
  }
};

struct Resolution {
  int n_re = 101;
  int n_im = 101;
};

struct MinimumResult {
  double value;
  Complex location;
  bool region_ok;  // region encloses all centers plus three base widths
};

/// Region needed by min_wigner: the origin, every puncture center and the
/// point where that puncture's Gaussian dips deepest below the base (per
/// axis: c (1+2n)/(2(n-b)) for base width n > b), padded by three standard
/// deviations of the widest base Wigner quadrature.
inline Region recommended_region(const PuncturedStateSpec& s) {
  double nr = 0.0, ni = 0.0;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    nr = ni = t->nbar;
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    nr = w.nbar_r;
    ni = w.nbar_i;
  }
  const double pad = 3.0 * 0.5 * std::sqrt(1.0 + 2.0 * std::max(nr, ni));
  Region r{-pad, pad, -pad, pad};
  auto include = [&](Complex a) {
    r.re_min = std::min(r.re_min, a.real() - pad);
    r.re_max = std::max(r.re_max, a.real() + pad);
    r.im_min = std::min(r.im_min, a.imag() - pad);
    r.im_max = std::max(r.im_max, a.imag() + pad);
  };
  auto dip = [](double c, double n, double b) { return n > b ? c * (1.0 + 2.0 * n) / (2.0 * (n - b)) : c; };
  for (const Puncture& p : s.punctures) {
    include(p.center);
    include({dip(p.center.real(), nr, p.width()), dip(p.center.imag(), ni, p.width())});
  }
  return r;
}

inline bool region_covers(const Region& outer, const Region& inner) {
  return outer.re_min <= inner.re_min && outer.re_max >= inner.re_max &&
         outer.im_min <= inner.im_min && outer.im_max >= inner.im_max;
}

namespace detail {

/// Nelder-Mead in two dimensions, stopping when the simplex values agree to ftol.
inline std::pair<double, std::array<double, 2>> nelder_mead_2d(
    const std::function<double(double, double)>& f, std::array<double, 2> start, double step,
    double ftol, int max_iter = 2000) {
  std::array<std::array<double, 2>, 3> x{start, {start[0] + step, start[1]}, {start[0], start[1] + step}};
  std::array<double, 3> fx{};
  for (int i = 0; i < 3; ++i) fx[i] = f(x[i][0], x[i][1]);
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const int lo = idx[0], mid = idx[1], hi = idx[2];
    if (std::abs(fx[hi] - fx[lo]) <= ftol * (std::abs(fx[lo]) + 1e-300) + 1e-300) break;
    const std::array<double, 2> c{0.5 * (x[lo][0] + x[mid][0]), 0.5 * (x[lo][1] + x[mid][1])};
    auto along = [&](double t) {
      return std::array<double, 2>{c[0] + t * (x[hi][0] - c[0]), c[1] + t * (x[hi][1] - c[1])};
    };
    const auto xr = along(-1.0);
    const double fr = f(xr[0], xr[1]);
    if (fr < fx[lo]) {
      const auto xe = along(-2.0);
      const double fe = f(xe[0], xe[1]);
      if (fe < fr) { x[hi] = xe; fx[hi] = fe; } else { x[hi] = xr; fx[hi] = fr; }
    } else if (fr < fx[mid]) {
      x[hi] = xr; fx[hi] = fr;
    } else {
      const auto xc = along(fr < fx[hi] ? -0.5 : 0.5);
      const double fc = f(xc[0], xc[1]);
      if (fc < std::min(fr, fx[hi])) {
        x[hi] = xc; fx[hi] = fc;
      } else {
        for (int k : {mid, hi}) {
          x[k] = {0.5 * (x[k][0] + x[lo][0]), 0.5 * (x[k][1] + x[lo][1])};
          fx[k] = f(x[k][0], x[k][1]);
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  return {fx[best], x[best]};
}

inline MinimumResult grid_then_descent(const std::function<double(double, double)>& f,
                                       const Region& region, const Resolution& res) {
  if (res.n_re < 2 || res.n_im < 2) throw InvalidInput("resolution must be at least 2 x 2");
  const double dx = (region.re_max - region.re_min) / (res.n_re - 1);
  const double dy = (region.im_max - region.im_min) / (res.n_im - 1);
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 2> at{region.re_min, region.im_min};
  for (int j = 0; j < res.n_im; ++j) {
    for (int i = 0; i < res.n_re; ++i) {
      const double x = region.re_min + i * dx, y = region.im_min + j * dy;
      const double v = f(x, y);
      if (v < best) { best = v; at = {x, y}; }
    }
  }
  // descent stays inside the region: W decays to 0 at infinity, so an
  // unconstrained search walks off whenever the minimum sits on the boundary
  auto inside = [&](double x, double y) {
    if (x < region.re_min || x > region.re_max || y < region.im_min || y > region.im_max) {
      return std::numeric_limits<double>::infinity();
    }
    return f(x, y);
  };
  auto [v, p] = nelder_mead_2d(inside, at, 0.5 * std::max(dx, dy), 1e-10);
  if (v > best) { v = best; p = at; }
  return {v, Complex(p[0], p[1]), true};
}

}  // namespace detail

inline MinimumResult min_wigner(const PuncturedStateSpec& s, const Region& region,
                                const Resolution& res = {}) {
  validate(s);
  auto f = [&](double x, double y) { return eval_W(s, Complex(x, y)); };
  MinimumResult out = detail::grid_then_descent(f, region, res);
  out.region_ok = region_covers(region, recommended_region(s));
  return out;
}

// ---------------------------------------------------------------------------
// Characteristic function

/// Normal-ordered characteristic function of a squeezed thermal state,
/// chi(beta) = exp(-nbar_I beta_R^2 - nbar_R beta_I^2).
inline double eval_characteristic_squeezed(double nbar, double r, Complex beta) {
  const auto w = squeezed_widths(nbar, r);
  require_valid(w);
  require_finite(beta, "characteristic-function argument");
  return std::exp(-w.nbar_i * beta.real() * beta.real() - w.nbar_r * beta.imag() * beta.imag());
}

// ---------------------------------------------------------------------------
// Grids

enum class Quantity { P, W };

inline std::string quantity_name(Quantity q) { return q == Quantity::P ? "P" : "W"; }

struct PhaseSpaceGrid {
  Region region;
  Resolution resolution;
  Quantity quantity = Quantity::W;
  std::vector<double> values;  // row-major: values[j * n_re + i]
  std::vector<DeltaComponent> delta_components;

  double re_at(int i) const {
    return region.re_min + i * (region.re_max - region.re_min) / (resolution.n_re - 1);
  }
  double im_at(int j) const {
    return region.im_min + j * (region.im_max - region.im_min) / (resolution.n_im - 1);
  }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j * resolution.n_re + i)]; }
};

inline PhaseSpaceGrid sample_grid(const PuncturedStateSpec& s, Quantity q, const Region& region,
                                  const Resolution& res) {
  validate(s);
  if (res.n_re < 2 || res.n_im < 2) throw InvalidInput("resolution must be at least 2 x 2");
  if (!(region.re_max > region.re_min) || !(region.im_max > region.im_min)) {
    throw InvalidInput("region must have re_max > re_min and im_max > im_min");
  }
  PhaseSpaceGrid g{region, res, q, {}, {}};
  g.values.resize(static_cast<std::size_t>(res.n_re) * static_cast<std::size_t>(res.n_im));
  for (int j = 0; j < res.n_im; ++j) {
    for (int i = 0; i < res.n_re; ++i) {
      const Complex a(g.re_at(i), g.im_at(j));
      g.values[static_cast<std::size_t>(j * res.n_re + i)] =
          q == Quantity::P ? smooth_p_value(s, a) : eval_W(s, a);
    }
  }
  if (q == Quantity::P) g.delta_components = delta_components(s);
  return g;
}

}  // namespace punctured
