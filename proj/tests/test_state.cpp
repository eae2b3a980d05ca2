#include <gtest/gtest.h>

#include "support.hpp"

using namespace punctured;
using testing_support::Gen;
using testing_support::max_abs_diff;

namespace {

PuncturedStateSpec thermal(double nbar) { return {Thermal{nbar}, {}}; }

}  // namespace

TEST(Normalization, Examples) {
  EXPECT_EQ(normalization(thermal(1.0)), 1.0);
  EXPECT_EQ(normalization({Thermal{1.0}, {Puncture::delta(0.0, 0.5)}}), 2.0);
  EXPECT_DOUBLE_EQ(normalization({Thermal{1.0}, {Puncture::delta(0.0, 0.2), Puncture::delta(1.0, 0.3)}}), 2.0);
}

TEST(Normalization, RejectsWeightSumAtOrAboveOne) {
  PuncturedStateSpec s{Thermal{1.0}, {Puncture::delta(0.0, 0.6), Puncture::delta(0.5, 0.4)}};
  EXPECT_THROW(normalization(s), InvalidInput);
  try {
    validate(s);
    FAIL() << "validate accepted an unnormalizable spec";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("normalization"), std::string::npos);
  }
}

TEST(Validate, RejectsBadFields) {
  EXPECT_THROW(validate(thermal(-0.1)), InvalidInput);
  EXPECT_THROW(validate({Thermal{1.0}, {Puncture::delta(0.0, -0.1)}}), InvalidInput);
  EXPECT_THROW(validate({Thermal{1.0}, {Puncture::gaussian(0.0, 0.0, 0.1)}}), InvalidInput);
  EXPECT_THROW(validate({Thermal{1.0}, {Puncture::delta(Complex(NAN, 0.0), 0.1)}}), InvalidInput);
  EXPECT_THROW(validate({SqueezedThermal{0.1, 0.5}, {}}), InvalidInput);
}

TEST(Classify, Families) {
  EXPECT_EQ(classify(thermal(1.0)), Family::Thermal);
  EXPECT_EQ(classify({SqueezedThermal{1.0, 0.1}, {}}), Family::SqueezedThermal);
  EXPECT_EQ(classify({Thermal{1.0}, {Puncture::delta(0.1, 0.1)}}), Family::DeltaThermal);
  EXPECT_EQ(classify({SqueezedThermal{1.0, 0.1}, {Puncture::delta(0.1, 0.1)}}), Family::DeltaSqueezed);
  EXPECT_EQ(classify({Thermal{1.0}, {Puncture::gaussian(0.2, 0.1, 0.1)}}), Family::GaussianThermal);
  EXPECT_EQ(classify({Thermal{1.0}, {Puncture::delta(0.1, 0.1), Puncture::delta(0.2, 0.1)}}),
            Family::MultiPuncture);
  for (Family f : {Family::Thermal, Family::DeltaSqueezed, Family::MultiPuncture}) {
    EXPECT_EQ(family_from_name(family_name(f)), f);
  }
  EXPECT_THROW(family_from_name("coherent"), InvalidInput);
}

TEST(SqueezedWidths, NoSqueezingIsIsotropic) {
  const auto w = squeezed_widths(0.7, 0.0);
  EXPECT_EQ(w.nbar_r, 0.7);
  EXPECT_EQ(w.nbar_i, 0.7);
}

TEST(SqueezedWidths, ScalarEvaluation) {
  const auto w = squeezed_widths(1.0, 0.5);
  EXPECT_NEAR(w.nbar_r, std::exp(-1.0) - std::exp(-0.5) * std::sinh(0.5), 1e-15);
  EXPECT_NEAR(w.nbar_r, 0.051819, 1e-6);
  // n_I = e^{2r} nbar + e^{r} sinh r
  EXPECT_NEAR(w.nbar_i, 3.577423, 1e-6);
  EXPECT_TRUE(w.valid());
}

TEST(SqueezedWidths, InvalidPairReportsCondition) {
  const auto w = squeezed_widths(0.1, 0.5);
  EXPECT_FALSE(w.valid());
  try {
    require_valid(w);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("sinh"), std::string::npos);
  }
}

TEST(SqueezedWidths, InverseRoundTrip) {
  Gen g(4);
  for (int t = 0; t < 100; ++t) {
    const double nbar = g.uniform(0.05, 3.0);
    const double rmax = 0.5 * std::atanh(nbar / (nbar + 1.0));
    const double r = g.uniform(-0.99 * rmax, 0.99 * rmax);
    const auto back = squeezing_from_widths(squeezed_widths(nbar, r));
    EXPECT_NEAR(back.nbar, nbar, 1e-11);
    EXPECT_NEAR(back.r, r, 1e-11);
  }
}

TEST(SqueezedWidths, MeanPhotonNumberMatchesOperator) {
  // <n> = nbar cosh 2r + sinh^2 r
  const SqueezedThermal s{0.8, 0.3};
  EXPECT_NEAR(base_mean_photons(s), 0.8 * std::cosh(0.6) + std::pow(std::sinh(0.3), 2), 1e-14);
}

TEST(BuildDensity, ThermalDiagonal) {
  const FockOperator rho = build_density(thermal(1.0), 20);
  EXPECT_TRUE(rho.is_diagonal(0.0));
  for (int n = 0; n <= 20; ++n) EXPECT_DOUBLE_EQ(rho(n, n).real(), std::pow(0.5, n + 1));
}

TEST(BuildDensity, VacuumRemovedDeltaPuncture) {
  const double nbar = 1.0;
  const FockOperator rho = build_density({Thermal{nbar}, {Puncture::delta(0.0, 1.0 / (nbar + 1.0))}}, 30);
  EXPECT_NEAR(std::abs(rho(0, 0)), 0.0, 1e-16);
  for (int n = 1; n <= 30; ++n) EXPECT_NEAR(rho(n, n).real(), 2.0 * std::pow(0.5, n + 1), 1e-15);
  EXPECT_LE(rho.max_abs() - rho.diagonal_values()[1], 0.0);
}

TEST(BuildDensity, GaussianVacuumPunctureDiagonal) {
  const double nbar = 1.0, b = 0.5, w = 0.3, norm = 1.0 / 0.7;
  const FockOperator rho = build_density({Thermal{nbar}, {Puncture::gaussian(b, 0.0, w)}}, 30);
  EXPECT_TRUE(rho.is_diagonal(0.0));
  for (int n = 0; n <= 30; ++n) {
    const double expected = norm * (std::pow(nbar, n) / std::pow(nbar + 1, n + 1) - w * std::pow(b, n) / std::pow(b + 1, n + 1));
    EXPECT_NEAR(rho(n, n).real(), expected, 1e-15);
  }
}

TEST(BuildDensity, SqueezedVacuumIsPureSqueezedState) {
  // the squeezed vacuum has no regular P function, so go through the base operator
  const CMatrix rho = base_operator(SqueezedThermal{0.0, 0.4}, 30);
  const CVector col = squeeze_matrix(0.4, 30).entries().col(0);
  EXPECT_LE(max_abs_diff(rho, col * col.adjoint()), 1e-12);
}

TEST(BuildDensity, SqueezedZeroEqualsThermal) {
  for (double nbar : {0.1, 0.6, 2.0}) {
    EXPECT_LE(max_abs_diff(build_density({SqueezedThermal{nbar, 0.0}, {}}, 25).entries(),
                           build_density(thermal(nbar), 25).entries()),
              1e-10);
  }
}

TEST(BuildDensity, SqueezedThermalMatchesExplicitConjugation) {
  const double nbar = 0.6, r = 0.25;
  const int n = 20, dim = 120;
  const CMatrix a = testing_support::annihilation(dim).cast<Complex>();
  const CMatrix gen = 0.5 * r * (a * a - a.adjoint() * a.adjoint());
  const CMatrix s = gen.exp();
  const auto p = thermal_populations(nbar, dim);
  CVector pv(dim);
  for (int k = 0; k < dim; ++k) pv(k) = p[std::size_t(k)];
  const CMatrix ref = (s * pv.asDiagonal() * s.adjoint()).topLeftCorner(n + 1, n + 1);
  EXPECT_LE(max_abs_diff(build_density({SqueezedThermal{nbar, r}, {}}, n).entries(), ref), 1e-11);
}

TEST(BuildDensity, DeltaIsZeroWidthLimitOfGaussian) {
  const FockOperator d = build_density({Thermal{1.0}, {Puncture::delta(0.3, 0.2)}}, 40);
  const FockOperator g = build_density({Thermal{1.0}, {Puncture::gaussian(1e-4, 0.3, 0.2)}}, 40);
  EXPECT_LE(max_abs_diff(d.entries(), g.entries()), 1e-4);
}

TEST(BuildDensity, LinearInPunctureList) {
  Gen g(31);
  for (int t = 0; t < 30; ++t) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 3);
    const int n = 18;
    CMatrix m = base_operator(s.base, n);
    for (const auto& p : s.punctures) m -= p.weight * puncture_operator(p, n);
    m *= normalization(s);
    EXPECT_LE(max_abs_diff(build_density(s, n).entries(), m), 1e-15);
  }
}

TEST(BuildDensity, TraceIncreasesToOneFromBelow) {
  // holds whenever the populations are nonnegative (every physical state)
  Gen g(32);
  int checked = 0;
  for (int t = 0; t < 80; ++t) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 2);
    const auto pops = build_density(s, 80).diagonal_values();
    if (*std::min_element(pops.begin(), pops.end()) < 0.0) continue;
    ++checked;
    double prev = -1.0;
    for (int n : {5, 10, 20, 40, 80}) {
      const double tr = build_density(s, n).trace();
      EXPECT_GE(tr, prev - 1e-13);
      EXPECT_LE(tr, 1.0 + 1e-12);
      prev = tr;
    }
    EXPECT_NEAR(prev, 1.0, 1e-6);
  }
  EXPECT_GE(checked, 20);
}

TEST(BuildDensity, HermitianOnRandomSpecs) {
  Gen g(33);
  for (int t = 0; t < 60; ++t) {
    const FockOperator rho = build_density(testing_support::random_spec(g, 3), 25);
    EXPECT_EQ(rho.hermiticity_residual(), 0.0);
  }
}

TEST(BuildDensity, RejectsInvalidSpec) {
  EXPECT_THROW(build_density({Thermal{1.0}, {Puncture::delta(0.0, 1.0)}}, 10), InvalidInput);
  EXPECT_THROW(build_density(thermal(1.0), -1), InvalidInput);
}

TEST(CheckedBuildDensity, TruncationTooSmallSuggestsLarger) {
  const PuncturedStateSpec s = thermal(2.0);
  try {
    checked_build_density(s, 10);
    FAIL() << "trace deficit not reported";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.suggested_n_max(), 10);
    EXPECT_NO_THROW(checked_build_density(s, e.suggested_n_max() * 2));
  }
}

TEST(PQuadrature, ThermalMatchesBuild) {
  const auto q = density_from_P_quadrature(thermal(0.5), 15);
  EXPECT_LE(max_abs_diff(q.rho.entries(), build_density(thermal(0.5), 15).entries()), 1e-8);
  EXPECT_LE(q.residual, 1e-8);
}

TEST(PQuadrature, GaussianPunctureMatchesBuild) {
  const PuncturedStateSpec s{Thermal{1.0}, {Puncture::gaussian(0.3, 0.4, 0.1)}};
  const auto q = density_from_P_quadrature(s, 15);
  EXPECT_LE(max_abs_diff(q.rho.entries(), build_density(s, 15).entries()), 1e-7);
}

TEST(PQuadrature, NearVacuumLimit) {
  const auto q = density_from_P_quadrature(thermal(1e-6), 10);
  CMatrix vac = CMatrix::Zero(11, 11);
  vac(0, 0) = 1.0;
  EXPECT_LE(max_abs_diff(q.rho.entries(), vac), 1e-5);
}

TEST(PQuadrature, AgreesWithBuildOnRandomSpecs) {
  Gen g(34);
  for (int t = 0; t < 12; ++t) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 2);
    const auto q = density_from_P_quadrature(s, 12);
    EXPECT_LE(max_abs_diff(q.rho.entries(), build_density(s, 12).entries()), 1e-7) << to_json(s).dump();
  }
}

TEST(PQuadrature, RejectsVacuumBase) {
  EXPECT_THROW(density_from_P_quadrature(thermal(0.0), 5), InvalidInput);
}

TEST(SpecJson, RoundTripIsLossless) {
  Gen g(35);
  for (int t = 0; t < 100; ++t) {
    const PuncturedStateSpec s = testing_support::random_spec(g, 3);
    const json j = to_json(s);
    const PuncturedStateSpec back = spec_from_json(json::parse(j.dump()));
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(max_abs_diff(build_density(back, 8).entries(), build_density(s, 8).entries()), 0.0);
  }
}

TEST(SpecJson, AcceptsWidthParametrization) {
  const json j = json::parse(R"({"base":{"type":"squeezed_thermal","nbar_r":1.0,"nbar_i":0.5},"punctures":[]})");
  const auto s = spec_from_json(j);
  const auto w = widths_of(std::get<SqueezedThermal>(s.base));
  EXPECT_NEAR(w.nbar_r, 1.0, 1e-12);
  EXPECT_NEAR(w.nbar_i, 0.5, 1e-12);
}

TEST(SpecJson, RejectsMalformed) {
  EXPECT_THROW(spec_from_json(json::parse(R"({"punctures":[]})")), InvalidInput);
  EXPECT_THROW(spec_from_json(json::parse(R"({"base":{"type":"coherent","nbar":1}})")), InvalidInput);
  EXPECT_THROW(spec_from_json(json::parse(R"({"base":{"type":"thermal","nbar":1},"punctures":[{"shape":"delta","alpha":[0],"weight":0.1}]})")),
               InvalidInput);
}

TEST(SpecJson, ParseErrorReportsLineAndColumn) {
  try {
    parse_json_text("{\n  \"base\": ,\n}", "spec.json");
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("spec.json:2:"), std::string::npos) << e.what();
  }
}
