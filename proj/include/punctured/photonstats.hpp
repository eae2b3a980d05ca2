#pragma once

// Second-order correlation g2 and Mandel Q from P-function moments and from
// Fock-basis traces, antibunching scans with g2 = 1 contours, and the
// classical-P (Jensen) check.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "punctured/error.hpp"
#include "punctured/fock.hpp"
#include "punctured/phasespace.hpp"
#include "punctured/positivity.hpp"
#include "punctured/state.hpp"

namespace punctured {

enum class MomentRoute { Analytic, Trace };

inline std::string route_name(MomentRoute r) { return r == MomentRoute::Analytic ? "analytic" : "trace"; }

struct G2Report {
  std::optional<double> g2;        // absent when the mean photon number vanishes
  std::optional<double> mandel_q;
  double mean_n = 0.0;
  double second_factorial_moment = 0.0;
  MomentRoute route = MomentRoute::Analytic;
  std::optional<std::string> warning;
};

inline constexpr double kUndefinedMeanN = 1e-12;

namespace detail {

inline G2Report finish_report(double m1, double m2, MomentRoute route) {
  G2Report r;
  r.mean_n = m1;
  r.second_factorial_moment = m2;
  r.route = route;
  if (m1 >= kUndefinedMeanN) {
    r.g2 = m2 / (m1 * m1);
    r.mandel_q = m1 * (*r.g2 - 1.0);
  } else {
    r.warning = "g2 undefined: mean photon number below 1e-12";
  }
  return r;
}

}  // namespace detail

/// <|a|^2> and <|a|^4> of the unnormalized base P function.
inline std::pair<double, double> base_p_moments(const BaseState& base) {
  if (const auto* t = std::get_if<Thermal>(&base)) return {t->nbar, 2.0 * t->nbar * t->nbar};
  const auto w = widths_of(std::get<SqueezedThermal>(base));
  const double R = w.nbar_r, I = w.nbar_i;
  return {0.5 * (R + I), 0.25 * (3.0 * R * R + 2.0 * R * I + 3.0 * I * I)};
}

/// <|a|^2> and <|a|^4> of a unit-weight puncture shape.
inline std::pair<double, double> puncture_p_moments(const Puncture& p) {
  const double x = std::norm(p.center), b = p.width();
  return {x + b, x * x + 4.0 * x * b + 2.0 * b * b};
}

/// g2 from the P-moment building blocks, combined with N.
inline G2Report g2_analytic(const PuncturedStateSpec& s) {
  validate(s);
  auto [m1, m2] = base_p_moments(s.base);
  for (const Puncture& p : s.punctures) {
    const auto [q1, q2] = puncture_p_moments(p);
    m1 -= p.weight * q1;
    m2 -= p.weight * q2;
  }
  const double norm = normalization(s);
  return detail::finish_report(norm * m1, norm * m2, MomentRoute::Analytic);
}

/// g2 from Tr(n rho) and Tr(n(n-1) rho) on the truncated basis.
inline G2Report g2_trace(const FockOperator& rho) {
  detail::require_hermitian(rho);
  if (std::abs(rho.trace() - 1.0) > 1e-8) {
    throw InvalidInput("g2 trace route needs unit trace within 1e-8 (trace = " +
                       std::to_string(rho.trace()) + ")");
  }
  double m1 = 0.0, m2 = 0.0, tail = 0.0;
  const int dim = rho.dim();
  const int tail_start = dim - std::max(1, dim / 10);
  for (int n = 0; n < dim; ++n) {
    const double p = rho(n, n).real();
    m1 += n * p;
    m2 += double(n) * (n - 1.0) * p;
    if (n >= tail_start) tail += n * p;
  }
  G2Report r = detail::finish_report(m1, m2, MomentRoute::Trace);
  if (m1 > 0.0 && tail > 1e-6 * m1) {
    std::ostringstream os;
    os << "truncation tail: top 10% of the basis carries " << tail / m1 << " of <n>";
    r.warning = os.str();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Jensen property

struct JensenCheck {
  bool classical_p = false;         // smooth P >= 0 everywhere and no delta punctures
  std::optional<double> g2;
  bool satisfied = true;            // !classical_p or g2 >= 1 - 1e-9
  double min_p_ratio = 0.0;         // min over the plane of 1 - sum w_i pi_i / P_base
};

namespace detail {

/// log of the unit-weight Gaussian puncture density minus log of the base
/// P density, at a.
inline double log_ratio(const BaseState& base, const Puncture& p, Complex a) {
  double lb;
  if (const auto* t = std::get_if<Thermal>(&base)) {
    lb = -std::norm(a) / t->nbar - std::log(kPi * t->nbar);
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(base));
    lb = -(a.real() * a.real() / w.nbar_r + a.imag() * a.imag() / w.nbar_i) -
         std::log(kPi * std::sqrt(w.nbar_r * w.nbar_i));
  }
  const double lp = -std::norm(a - p.center) / p.b - std::log(kPi * p.b);
  return lp - lb;
}

}  // namespace detail

/// Decides whether the smooth P is a probability density (no delta
/// punctures; sum_i w_i pi_i <= P_base everywhere) and, if so, checks g2 >= 1.
inline JensenCheck jensen_classicality_check(const PuncturedStateSpec& s) {
  validate(s);
  JensenCheck out;
  out.g2 = g2_analytic(s).g2;
  for (const Puncture& p : s.punctures) {
    if (p.shape == PunctureShape::Delta && p.weight > 0.0) return out;
  }
  if (const auto* t = std::get_if<Thermal>(&s.base); t && t->nbar == 0.0) {
    out.classical_p = s.punctures.empty() || weight_sum(s) == 0.0;
    out.satisfied = true;  // vacuum: g2 undefined
    return out;
  }
  // Tails: every puncture must be narrower than the base along both axes.
  double vmin = 0.0;
  if (const auto* t = std::get_if<Thermal>(&s.base)) {
    vmin = t->nbar;
  } else {
    const auto w = widths_of(std::get<SqueezedThermal>(s.base));
    vmin = std::min(w.nbar_r, w.nbar_i);
  }
  std::vector<Puncture> active;
  for (const Puncture& p : s.punctures) {
    if (p.weight == 0.0) continue;
    if (p.b > vmin) return out;
    if (p.b == vmin && p.center != Complex(0.0, 0.0)) return out;
    active.push_back(p);
  }
  auto h = [&](double x, double y) {
    double sum = 0.0;
    for (const Puncture& p : active) sum += p.weight * std::exp(detail::log_ratio(s.base, p, {x, y}));
    return 1.0 - sum;
  };
  double value = 1.0;
  if (!active.empty()) {
    if (active.size() == 1 && std::holds_alternative<Thermal>(s.base)) {
      // closed form: the ratio is maximal at a1 nbar/(nbar - b)
      const Puncture& p = active[0];
      const double nbar = std::get<Thermal>(s.base).nbar;
      value = p.b == nbar ? 1.0 - p.weight * nbar / p.b
                          : 1.0 - p.weight * nbar / p.b * std::exp(std::norm(p.center) / (nbar - p.b));
    } else {
      // Each ratio term peaks near a_i v/(v - b_i); search a box around them.
      Region box{0, 0, 0, 0};
      bool first = true;
      for (const Puncture& p : active) {
        const double scale = vmin / std::max(vmin - p.b, 1e-3 * vmin);
        // per-axis peaks lie between a_i and a_i * scale
        const Complex peak = p.center * scale;
        const double pad = 6.0 * std::sqrt(p.b * scale) + 1.0;
        Region r{std::min(peak.real(), p.center.real()) - pad, std::max(peak.real(), p.center.real()) + pad,
                 std::min(peak.imag(), p.center.imag()) - pad, std::max(peak.imag(), p.center.imag()) + pad};
        if (first) { box = r; first = false; }
        box = {std::min(box.re_min, r.re_min), std::max(box.re_max, r.re_max),
               std::min(box.im_min, r.im_min), std::max(box.im_max, r.im_max)};
      }
      value = detail::grid_then_descent(h, box, {161, 161}).value;
    }
  }
  out.min_p_ratio = value;
  out.classical_p = value >= -1e-12;
  out.satisfied = !out.classical_p || !out.g2 || *out.g2 >= 1.0 - 1e-9;
  return out;
}

// ---------------------------------------------------------------------------
// Scans

struct ScanAxis {
  std::string name;  // nbar, alpha_abs, alpha_re, alpha_im, b, w, nbar_r, nbar_i, r
  double min = 0.0;
  double max = 1.0;
  int steps = 2;
  bool log = false;

  double value(int i) const {
    if (steps == 1) return min;
    const double t = double(i) / (steps - 1);
    return log ? min * std::pow(max / min, t) : min + t * (max - min);
  }
};

enum class WeightRule { Fixed, Max };

struct ScanConfig {
  Family family = Family::DeltaThermal;
  std::map<std::string, double> fixed;  // parameters held constant
  ScanAxis axis1, axis2;
  WeightRule weight_rule = WeightRule::Max;
};

struct ScanPoint {
  double p1, p2;
};

struct ScanResult {
  ScanConfig config;
  std::vector<double> axis1_values, axis2_values;
  std::vector<std::optional<double>> g2;  // row-major: [j * n1 + i], i along axis1
  std::vector<std::string> status;        // "ok" or the mask reason
  std::vector<std::vector<ScanPoint>> contour;  // g2 = 1 polylines
};

inline const std::vector<std::string>& scan_parameter_names() {
  static const std::vector<std::string> names{"nbar", "alpha_abs", "alpha_re", "alpha_im", "b",
                                              "w",    "nbar_r",    "nbar_i",   "r"};
  return names;
}

/// Builds the single-puncture spec of `family` from named parameters;
/// the weight follows `rule`.
inline PuncturedStateSpec spec_from_parameters(Family family, const std::map<std::string, double>& p,
                                               WeightRule rule) {
  auto get = [&](const std::string& k, double def) {
    auto it = p.find(k);
    return it == p.end() ? def : it->second;
  };
  Complex center(get("alpha_re", 0.0), get("alpha_im", 0.0));
  if (p.count("alpha_abs")) {
    const double phase = std::abs(center) > 0.0 ? std::arg(center) : 0.0;
    center = std::polar(p.at("alpha_abs"), phase);
  }
  PuncturedStateSpec s;
  const bool squeezed = family == Family::DeltaSqueezed || family == Family::GaussianSqueezed ||
                        family == Family::SqueezedThermal;
  if (squeezed) {
    if (p.count("nbar_r") || p.count("nbar_i")) {
      s.base = squeezing_from_widths({get("nbar_r", 1.0), get("nbar_i", 1.0)});
    } else {
      s.base = SqueezedThermal{get("nbar", 1.0), get("r", 0.0)};
    }
  } else {
    s.base = Thermal{get("nbar", 1.0)};
  }
  switch (family) {
    case Family::DeltaThermal:
    case Family::DeltaSqueezed:
      s.punctures.push_back(Puncture::delta(center, 0.0));
      break;
    case Family::GaussianThermal:
    case Family::GaussianSqueezed:
      s.punctures.push_back(Puncture::gaussian(get("b", 0.5), center, 0.0));
      break;
    case Family::Thermal:
    case Family::SqueezedThermal:
      return s;
    case Family::MultiPuncture:
      throw InvalidInput("scans take single-puncture families");
  }
  if (rule == WeightRule::Fixed) {
    s.punctures[0].weight = get("w", 0.0);
  } else {
    PuncturedStateSpec probe = s;
    validate(probe);
    const auto bound = analytic_nc_bound(probe);
    if (!bound) throw InvalidInput("weight rule 'max' needs a family with an analytic bound");
    s.punctures[0].weight = bound->value;
  }
  return s;
}

namespace detail {

struct Segment {
  long a_key, b_key;  // edge identifiers
  ScanPoint a, b;
};

/// Marching squares on f = g2 - 1; cells with a masked corner are skipped.
/// Edge keys: horizontal edge (i,j)-(i+1,j) -> 2*(j*n1+i), vertical (i,j)-(i,j+1) -> 2*(j*n1+i)+1.
inline std::vector<std::vector<ScanPoint>> marching_squares(const ScanResult& r) {
  const int n1 = static_cast<int>(r.axis1_values.size());
  const int n2 = static_cast<int>(r.axis2_values.size());
  auto val = [&](int i, int j) -> std::optional<double> {
    const auto& g = r.g2[static_cast<std::size_t>(j * n1 + i)];
    if (!g) return std::nullopt;
    return *g - 1.0;
  };
  auto interp = [&](int i0, int j0, int i1, int j1, double f0, double f1) {
    const double t = f0 / (f0 - f1);
    return ScanPoint{r.axis1_values[i0] + t * (r.axis1_values[i1] - r.axis1_values[i0]),
                     r.axis2_values[j0] + t * (r.axis2_values[j1] - r.axis2_values[j0])};
  };
  std::vector<Segment> segs;
  for (int j = 0; j + 1 < n2; ++j) {
    for (int i = 0; i + 1 < n1; ++i) {
      const auto f00 = val(i, j), f10 = val(i + 1, j), f11 = val(i + 1, j + 1), f01 = val(i, j + 1);
      if (!f00 || !f10 || !f11 || !f01) continue;
      // corners in order 00, 10, 11, 01; edges: bottom, right, top, left
      const std::array<double, 4> f{*f00, *f10, *f11, *f01};
      struct Edge { long key; ScanPoint p; bool crossed; };
      auto make = [&](long key, int ia, int ja, int ib, int jb, double fa, double fb) {
        const bool c = (fa < 0.0) != (fb < 0.0);
        return Edge{key, c ? interp(ia, ja, ib, jb, fa, fb) : ScanPoint{0, 0}, c};
      };
      const long base = 2L * (long(j) * n1 + i);
      const std::array<Edge, 4> e{
          make(base, i, j, i + 1, j, f[0], f[1]),
          make(2L * (long(j) * n1 + i + 1) + 1, i + 1, j, i + 1, j + 1, f[1], f[2]),
          make(2L * (long(j + 1) * n1 + i), i, j + 1, i + 1, j + 1, f[3], f[2]),
          make(base + 1, i, j, i, j + 1, f[0], f[3])};
      std::vector<int> crossed;
      for (int k = 0; k < 4; ++k) {
        if (e[k].crossed) crossed.push_back(k);
      }
      auto add = [&](int a, int b) { segs.push_back({e[a].key, e[b].key, e[a].p, e[b].p}); };
      if (crossed.size() == 2) {
        add(crossed[0], crossed[1]);
      } else if (crossed.size() == 4) {
        // saddle: decide with the cell-center average
        const double center = 0.25 * (f[0] + f[1] + f[2] + f[3]);
        if ((center < 0.0) == (f[0] < 0.0)) {
          add(0, 1);
          add(2, 3);
        } else {
          add(0, 3);
          add(1, 2);
        }
      }
    }
  }
  // Chain segments sharing edge keys into polylines.
  std::multimap<long, std::size_t> by_key;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    by_key.emplace(segs[k].a_key, k);
    by_key.emplace(segs[k].b_key, k);
  }
  std::vector<bool> used(segs.size(), false);
  std::vector<std::vector<ScanPoint>> lines;
  auto next_from = [&](long key) -> std::optional<std::size_t> {
    auto [lo, hi] = by_key.equal_range(key);
    for (auto it = lo; it != hi; ++it) {
      if (!used[it->second]) return it->second;
    }
    return std::nullopt;
  };
  for (std::size_t start = 0; start < segs.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    std::vector<ScanPoint> fwd{segs[start].a, segs[start].b};
    std::vector<long> ends{segs[start].a_key, segs[start].b_key};
    // extend at the back
    long key = ends[1];
    while (auto k = next_from(key)) {
      used[*k] = true;
      const Segment& s = segs[*k];
      if (s.a_key == key) { fwd.push_back(s.b); key = s.b_key; }
      else { fwd.push_back(s.a); key = s.a_key; }
    }
    // extend at the front
    std::vector<ScanPoint> back;
    key = ends[0];
    while (auto k = next_from(key)) {
      used[*k] = true;
      const Segment& s = segs[*k];
      if (s.a_key == key) { back.push_back(s.b); key = s.b_key; }
      else { back.push_back(s.a); key = s.a_key; }
    }
    std::reverse(back.begin(), back.end());
    back.insert(back.end(), fwd.begin(), fwd.end());
    lines.push_back(std::move(back));
  }
  return lines;
}

}  // namespace detail

inline void validate_scan(const ScanConfig& c) {
  const auto& names = scan_parameter_names();
  for (const ScanAxis* a : {&c.axis1, &c.axis2}) {
    if (std::find(names.begin(), names.end(), a->name) == names.end()) {
      throw InvalidInput("unknown scan parameter '" + a->name + "'");
    }
    if (a->steps < 2) throw InvalidInput("axis '" + a->name + "' needs at least 2 steps");
    if (!(std::isfinite(a->min) && std::isfinite(a->max))) throw InvalidInput("axis bounds must be finite");
    if (a->log && !(a->min > 0.0 && a->max > 0.0)) {
      throw InvalidInput("log axis '" + a->name + "' needs positive bounds");
    }
  }
  if (c.axis1.name == c.axis2.name) throw InvalidInput("scan axes must differ");
  if (c.weight_rule == WeightRule::Max && (c.axis1.name == "w" || c.axis2.name == "w")) {
    throw InvalidInput("axis 'w' requires the fixed weight rule");
  }
}

/// g2 over a two-parameter grid plus the g2 = 1 contour. Cells where the
/// spec is invalid, the weight exceeds a known NC bound, or g2 is undefined
/// are masked with the reason and never interpolated.
inline ScanResult antibunching_scan(const ScanConfig& c) {
  validate_scan(c);
  ScanResult r;
  r.config = c;
  for (int i = 0; i < c.axis1.steps; ++i) r.axis1_values.push_back(c.axis1.value(i));
  for (int j = 0; j < c.axis2.steps; ++j) r.axis2_values.push_back(c.axis2.value(j));
  for (int j = 0; j < c.axis2.steps; ++j) {
    for (int i = 0; i < c.axis1.steps; ++i) {
      auto params = c.fixed;
      params[c.axis1.name] = r.axis1_values[static_cast<std::size_t>(i)];
      params[c.axis2.name] = r.axis2_values[static_cast<std::size_t>(j)];
      std::optional<double> g;
      std::string status = "ok";
      try {
        const PuncturedStateSpec s = spec_from_parameters(c.family, params, c.weight_rule);
        validate(s);
        if (c.weight_rule == WeightRule::Fixed && !s.punctures.empty()) {
          if (const auto b = analytic_nc_bound(s); b && s.punctures[0].weight > b->value) {
            status = "unphysical: weight exceeds the NC bound";
          }
        }
        if (status == "ok") {
          const G2Report rep = g2_analytic(s);
          g = rep.g2;
          if (!g) status = "undefined: zero mean photon number";
        }
      } catch (const InvalidInput& e) {
        status = std::string("invalid: ") + e.what();
      }
      r.g2.push_back(status == "ok" ? g : std::nullopt);
      r.status.push_back(status);
    }
  }
  r.contour = detail::marching_squares(r);
  return r;
}

}  // namespace punctured
