// Acceptance run: one [PASS]/[FAIL] line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace punctured;
using testing_support::Gen;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& why) {
    if (!ok) {
      if (pass) detail.str("");
      pass = false;
      detail << why << "; ";
    }
  }
};

PuncturedStateSpec delta_thermal(double nbar, Complex a, double w = 0.0) {
  return {Thermal{nbar}, {Puncture::delta(a, w)}};
}
PuncturedStateSpec gauss_thermal(double nbar, double b, Complex a, double w = 0.0) {
  return {Thermal{nbar}, {Puncture::gaussian(b, a, w)}};
}
PuncturedStateSpec delta_squeezed(double nr, double ni, Complex a, double w = 0.0) {
  return {squeezing_from_widths({nr, ni}), {Puncture::delta(a, w)}};
}

std::string num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[std::size_t(i)] = a + (b - a) * i / (n - 1);
  return v;
}

const std::vector<double> kFig1Nbar{0.1, 0.5, 1.0, 2.0};
const std::vector<double> kAlphas = linspace(0.0, 1.5, 16);

// 1. tightness of the delta-thermal bound under the convergence policy
void criterion1(Check& v) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int unconverged = 0;
  for (double nbar : kFig1Nbar) {
    for (double a : kAlphas) {
      const auto r = numeric_wmax(delta_thermal(nbar, a));
      const double nc = nc_bound_delta_thermal(nbar, a).value;
      const double rel = std::abs(r.value - nc) / nc;
      worst = std::max(worst, rel);
      unconverged += !r.converged;
      if (rel > 1e-3) {
        std::ostringstream os;
        os << "nbar=" << nbar << " |a|=" << a << " rel err " << rel;
        v.require(false, os.str());
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < 60.0, "sweep took " + num(secs) + " s");
  v.require(unconverged == 0, std::to_string(unconverged) + " points not converged");
  if (v.pass) v.detail << "64 points, max rel err " << worst << ", " << secs << " s";
}

// 2. convergence in the cut-off at nbar = 0.1
void criterion2(Check& v) {
  double worst = 0.0;
  for (double a : kAlphas) {
    double prev = 2.0;
    for (int n : {2, 3, 4, 15}) {
      const double w = numeric_wmax_at(delta_thermal(0.1, a), n);
      if (w > prev) {
        std::ostringstream os;
        os << "|a|=" << a << " increases at n_max=" << n << " (" << prev << " -> " << w << ")";
        v.require(false, os.str());
      }
      prev = w;
    }
    const double err = std::abs(prev - nc_bound_delta_thermal(0.1, a).value);
    worst = std::max(worst, err);
    if (err > 1e-3) v.require(false, "|a|=" + num(a) + " level-15 abs err " + num(err));
  }
  if (v.pass) v.detail << "16 amplitudes nonincreasing over {2,3,4,15}; max abs err at 15: " << worst;
}

// 3. squeezed tightness at n_max = 25 and witness residual
void criterion3(Check& v) {
  std::ostringstream ok;
  for (double ni : {0.1, 0.5}) {
    double worst = 0.0, worst_res = 0.0;
    std::string witness_error;
    for (double a : kAlphas) {
      const double nc = nc_bound_delta_squeezed({1.0, ni}, a).value;
      const double w = numeric_wmax_at(delta_squeezed(1.0, ni, a), 25);
      worst = std::max(worst, std::abs(w - nc));
      try {
        worst_res = std::max(worst_res, zero_eigenvector_residual(delta_squeezed(1.0, ni, a, nc), 25));
      } catch (const InvalidInput& e) {
        witness_error = e.what();
      }
    }
    std::ostringstream tag;
    tag << "nbar_I=" << ni << ": ";
    v.require(worst <= 1e-3, tag.str() + "max abs err " + num(worst));
    if (!witness_error.empty()) {
      v.require(false, tag.str() + witness_error);
    } else {
      v.require(worst_res <= 1e-6, tag.str() + "witness residual " + num(worst_res));
    }
    ok << tag.str() << "max abs err " << worst << ", witness "
       << (witness_error.empty() ? "residual " + num(worst_res) : std::string("undefined")) << "; ";
  }
  if (!v.pass) v.detail << "| bounds: ";
  v.detail << ok.str();
}

// 4. Gaussian tightness at n_max = 40 and the exact vacuum-centered value
void criterion4(Check& v) {
  double worst = 0.0, worst_vac = 0.0;
  for (double nbar : {1.5, 2.0}) {
    for (double a : kAlphas) {
      const double nc = nc_bound_gaussian(nbar, 1.0, a).value;
      const double w = numeric_wmax_at(gauss_thermal(nbar, 1.0, a), 40);
      worst = std::max(worst, std::abs(w - nc));
    }
    // alpha = 0: both operators are diagonal, w_max = min_n p_n(nbar) / p_n(b)
    const double exact = (1.0 + 1.0) / (nbar + 1.0);
    const auto pb = thermal_populations(nbar, 41), pp = thermal_populations(1.0, 41);
    double diag = 1.0;
    for (std::size_t n = 0; n < pb.size(); ++n) diag = std::min(diag, pb[n] / pp[n]);
    const double w0 = numeric_wmax_at(gauss_thermal(nbar, 1.0, 0.0), 40, 1e-15, 1e-16);
    worst_vac = std::max({worst_vac, std::abs(diag - exact) / exact, std::abs(w0 - exact) / exact});
  }
  v.require(worst <= 1e-3, "max abs err " + num(worst));
  v.require(worst_vac <= 4 * std::numeric_limits<double>::epsilon(),
            "vacuum-centered rel err " + num(worst_vac));
  if (v.pass) v.detail << "max abs err " << worst << "; vacuum-centered rel err " << worst_vac;
}

// 5. SC <= NC and Gershgorin certification below the SC value
void criterion5(Check& v) {
  int cases = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (double nbar : kFig1Nbar) {
    for (double a : kAlphas) {
      const double sc = sc_bound_delta_thermal(nbar, a).value;
      const double nc = nc_bound_delta_thermal(nbar, a).value;
      if (sc > nc) v.require(false, "SC > NC at nbar=" + num(nbar) + " |a|=" + num(a));
      for (double f : {0.0, 0.25, 0.5, 0.9, 0.999}) {
        for (int n_max : {15, 40}) {
          const double m = gershgorin_margin(build_density(delta_thermal(nbar, a, f * sc), n_max));
          min_margin = std::min(min_margin, m);
          ++cases;
          if (m < 0.0) {
            std::ostringstream os;
            os << "margin " << m << " at nbar=" << nbar << " |a|=" << a << " w=" << f << "*SC";
            v.require(false, os.str());
          }
        }
      }
    }
  }
  if (v.pass) v.detail << cases << " certificates, min margin " << min_margin;
}

// 6. g2 anchors
void criterion6(Check& v) {
  const double th = *g2_analytic(delta_thermal(0.7, 0.4, 1e-15)).g2;
  v.require(std::abs(th - 2.0) <= 1e-12, "thermal limit g2 = " + num(th));
  Gen g(606);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double nbar = g.uniform(0.05, 3.0);
    const double rmax = 0.5 * std::atanh(nbar / (nbar + 1.0));
    const double r = g.uniform(-rmax, rmax);
    const auto w = squeezed_widths(nbar, r);
    const double R = w.nbar_r, I = w.nbar_i;
    const double g2 = *g2_analytic({SqueezedThermal{nbar, r}, {}}).g2;
    const double expect = (3 * R * R + 2 * R * I + 3 * I * I) / ((R + I) * (R + I));
    worst = std::max(worst, std::abs(g2 - expect));
    if (g2 < 2.0 - 1e-15) v.require(false, "squeezed g2 < 2");
  }
  v.require(worst <= 1e-12, "squeezed g2 formula err " + num(worst));
  const double d = *g2_analytic(delta_thermal(1.0, 0.0, 0.5)).g2;
  v.require(d == 1.0, "delta thermal anchor g2 = " + num(d));

  ScanConfig c;
  c.family = Family::GaussianThermal;
  c.fixed = {{"alpha_abs", 0.0}};
  c.axis1 = {"nbar", 0.02, 1.5, 75, false};
  c.axis2 = {"b", 0.01, 1.5, 75, false};
  const ScanResult r = antibunching_scan(c);
  const double h = std::max((1.5 - 0.02) / 74, (1.5 - 0.01) / 74);
  double worst_c = 0.0;
  int pts = 0;
  for (const auto& line : r.contour) {
    for (const auto& p : line) {
      if (p.p2 >= p.p1 - 2 * h) continue;  // b >= nbar: unphysical side
      worst_c = std::max(worst_c, std::abs(std::hypot(p.p1, p.p2) - 1.0));
      ++pts;
    }
  }
  v.require(pts > 10 && worst_c <= h, "contour off the unit circle by " + num(worst_c));
  if (v.pass) {
    v.detail << "thermal " << th << ", squeezed max err " << worst << ", delta anchor " << d << ", " << pts
             << " contour points within " << worst_c << " (grid step " << h << ") of nbar^2+b^2=1";
  }
}

// 7. Jensen: nonnegative smooth P, no deltas => g2 >= 1
void criterion7(Check& v) {
  Gen g(707);
  int classical = 0, attempts = 0;
  double min_g2 = std::numeric_limits<double>::infinity();
  while (classical < 300 && attempts < 5000) {
    ++attempts;
    PuncturedStateSpec s = testing_support::random_spec(g, 3, /*allow_delta=*/false);
    for (auto& p : s.punctures) p.b = std::min(p.b, 0.9 * std::min(base_mean_photons(s.base), 1.0) * g.uniform(0.1, 1.0));
    auto j = jensen_classicality_check(s);
    for (int k = 0; k < 60 && !j.classical_p; ++k) {
      for (auto& p : s.punctures) p.weight *= 0.7;
      j = jensen_classicality_check(s);
    }
    if (!j.classical_p || !j.g2) continue;
    // independent sampling of the smooth P over the recommended region
    const Region box = recommended_region(s);
    bool sampled_ok = true;
    for (int i = 0; i <= 40 && sampled_ok; ++i) {
      for (int k = 0; k <= 40; ++k) {
        const Complex a(box.re_min + i * (box.re_max - box.re_min) / 40, box.im_min + k * (box.im_max - box.im_min) / 40);
        if (eval_P(s, a).smooth < -1e-12) { sampled_ok = false; break; }
      }
    }
    if (!sampled_ok) {
      v.require(false, "classical verdict contradicted by sampled P: " + to_json(s).dump());
      continue;
    }
    ++classical;
    min_g2 = std::min(min_g2, *j.g2);
    if (*j.g2 < 1.0 - 1e-9) v.require(false, "g2 = " + num(*j.g2) + " for " + to_json(s).dump());
  }
  v.require(classical == 300, "only " + std::to_string(classical) + " classical specs generated");
  if (v.pass) v.detail << "300 specs, min g2 " << min_g2;
}

// 8. analytic W vs convolution of P; sign flips at the W thresholds
void criterion8(Check& v) {
  Gen g(808);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 3);
    const Complex a = g.in_disk(2.5);
    const double d = std::abs(eval_W(s, a) - wigner_by_convolution(s, a));
    worst = std::max(worst, d);
    if (d > 1e-6) v.require(false, "W mismatch " + num(d) + " for " + to_json(s).dump());
  }
  int flips = 0;
  for (int t = 0; t < 80; ++t) {
    PuncturedStateSpec s;
    switch (t % 4) {
      case 0: s = delta_thermal(g.uniform(0.1, 2.0), g.in_disk(1.2)); break;
      case 1: {
        const double nbar = g.uniform(0.3, 2.0);
        s = gauss_thermal(nbar, g.uniform(0.05, 0.9) * nbar, 0.0);
        break;
      }
      case 2: {
        const double nbar = g.uniform(0.3, 2.0);
        s = gauss_thermal(nbar, g.uniform(0.05, 0.9) * nbar, g.in_disk(1.0));
        break;
      }
      default: {
        const double nbar = g.uniform(0.5, 2.0);
        const double rmax = 0.5 * std::atanh(nbar / (nbar + 1.0));
        s = {SqueezedThermal{nbar, g.uniform(-rmax, rmax)}, {Puncture::delta(g.in_disk(1.0), 0.0)}};
      }
    }
    const double thr = wigner_negativity_threshold(s);
    if (thr + 1e-3 >= 1.0) continue;
    const Region region = recommended_region(s);
    s.punctures[0].weight = thr + 1e-3;
    const double above = min_wigner(s, region).value;
    s.punctures[0].weight = std::max(0.0, thr - 1e-3);
    const double below = min_wigner(s, region).value;
    if (!(above < 0.0 && below >= -1e-12)) {
      std::ostringstream os;
      os << "no sign flip (min W " << below << " / " << above << ") for " << to_json(s).dump();
      v.require(false, os.str());
    }
    ++flips;
  }
  v.require(flips >= 60, "only " + std::to_string(flips) + " threshold cases");
  if (v.pass) v.detail << "200 specs, max |W - P*kernel| " << worst << "; " << flips << " sign flips at +-1e-3";
}

// 9. g2 by P moments vs by trace over the density matrix
void criterion9(Check& v) {
  Gen g(909);
  int compared = 0;
  double worst = 0.0;
  while (compared < 300) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 3);
    const auto a = g2_analytic(s);
    if (!a.g2 || std::abs(a.mean_n) < 1e-3) continue;
    int n = suggested_n_max(s);
    FockOperator rho = build_density(s, n);
    while (std::abs(1.0 - rho.trace()) > 1e-14 && n < 400) {
      n = n * 3 / 2;
      rho = build_density(s, n);
    }
    const auto tr = g2_trace(rho);
    const double rel = std::abs(*tr.g2 - *a.g2) / std::abs(*a.g2);
    worst = std::max(worst, rel);
    if (rel > 1e-6) v.require(false, "rel diff " + num(rel) + " for " + to_json(s).dump());
    ++compared;
  }
  if (v.pass) v.detail << "300 specs, max rel diff " << worst;
}

// 10. QND fidelity, Monte Carlo acceptance, cascade enumeration
void criterion10(Check& v) {
  const double want[] = {2.0 / 3.0, 14.0 / 15.0, 254.0 / 255.0};
  for (int l = 1; l <= 3; ++l) {
    const double f = fidelity_closed_form(1.0, l);
    v.require(std::abs(f - want[l - 1]) <= 1e-12, "F(l=" + std::to_string(l) + ") = " + num(f));
    const int n = tail_cutoff(1.0, 1e-16);
    const double direct = diagonal_fidelity(vacuum_removed_state(1.0, n), realized_state(1.0, l, n));
    v.require(std::abs(f - direct) <= 1e-12, "closed form vs diagonal_fidelity at l=" + std::to_string(l));
  }
  const auto r = simulate_qnd(QndConfig{1.0, 2, 32, 1000000, 20240601, 4});
  const double p = acceptance_probability(1.0, 2);
  const double sigma = std::sqrt(p * (1.0 - p) / 1e6);
  const double z = (*r.acceptance_empirical - p) / sigma;
  v.require(std::abs(z) <= 3.0, "Monte Carlo acceptance off by " + num(z) + " sigma");
  Xoshiro256ss rng(1, 0);
  int mismatches = 0;
  for (int l_max = 1; l_max <= 6; ++l_max) {
    for (std::uint64_t n = 0; n <= 1024; ++n) {
      const auto o = run_cascade(n, l_max, rng);
      if (o.accepted != (n % (std::uint64_t{1} << l_max) != 0) || o.anomalies != 0) ++mismatches;
    }
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " cascade mismatches");
  if (v.pass) {
    v.detail << "F = 2/3, 14/15, 254/255; MC acceptance " << *r.acceptance_empirical << " vs " << p << " (" << z
             << " sigma); 6150 cascade cases exact";
  }
}

// 11. antibunching region structure of the delta-thermal family at w_max
void criterion11(Check& v) {
  ScanConfig c;
  c.family = Family::DeltaThermal;
  c.axis1 = {"alpha_abs", 0.0, 1.5, 31, false};
  c.axis2 = {"nbar", 0.05, 2.0, 40, false};
  const ScanResult r = antibunching_scan(c);
  double lo = std::numeric_limits<double>::infinity();
  std::size_t below = 0;
  for (const auto& g : r.g2) {
    if (!g) continue;
    lo = std::min(lo, *g);
    below += *g < 1.0;
  }
  v.require(below > 0, "no g2 < 1 cell");
  // the g2 > 2 feature near (nbar, |a|) = (0.1, 0.5)
  double hi = 0.0, at_n = 0.0, at_a = 0.0;
  for (double nbar : linspace(0.05, 0.15, 11)) {
    for (double a : linspace(0.4, 0.6, 11)) {
      const double g2 = *g2_analytic(delta_thermal(nbar, a, nc_bound_delta_thermal(nbar, a).value)).g2;
      if (g2 > hi) { hi = g2; at_n = nbar; at_a = a; }
    }
  }
  v.require(hi > 2.0, "max g2 near (0.1, 0.5) is " + num(hi));
  v.require(!r.contour.empty(), "no g2 = 1 contour");
  if (v.pass) {
    v.detail << below << " of " << r.g2.size() << " cells below 1 (min " << lo << "); g2 = " << hi << " at (nbar "
             << at_n << ", |a| " << at_a << ")";
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"delta-thermal bound tightness under the convergence policy", criterion1},
      {"cut-off convergence at nbar = 0.1", criterion2},
      {"squeezed bound tightness and witness residual", criterion3},
      {"Gaussian bound tightness and exact vacuum-centered value", criterion4},
      {"SC <= NC ordering and Gershgorin certification", criterion5},
      {"g2 anchors", criterion6},
      {"Jensen property on 300 classical specs", criterion7},
      {"phase-space consistency and Wigner sign flips", criterion8},
      {"moment route agreement", criterion9},
      {"QND fidelity, Monte Carlo and cascade enumeration", criterion10},
      {"antibunching region structure", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("[%s] %zu %s -- %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
