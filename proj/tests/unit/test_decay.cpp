#include <cmath>

#include <gtest/gtest.h>

#include "maxdamp/decay.hpp"
#include "maxdamp/errors.hpp"
#include "maxdamp/initial_data.hpp"

using namespace maxdamp;

namespace
{

struct Fixture
{
  DeRhamComplex cx;
  MaterialAssembly as;
};

Fixture make(int n, double sigma0, double a = 0.25)
{
  Fixture f{assemble_complex(build_grid(n)), {}};
  MaterialSpec s;
  s.sigma.sigma0 = sigma0;
  s.sigma.a = a;
  f.as = sample_materials(f.cx, s);
  return f;
}

FieldState axpy(double a, const FieldState &x, const FieldState &y)
{
  return {a * x.e + y.e, a * x.b + y.b, 0.0};
}

} // namespace

TEST(Fit, RecoversASyntheticRate)
{
  std::vector<double> t, E;
  for (int i = 0; i <= 400; ++i)
  {
    t.push_back(0.1 * i);
    E.push_back(std::exp(-t.back()));
  }
  const auto fit = fit_decay(t, E, 10.0, 36.0);
  EXPECT_NEAR(fit.omega_fit, 0.5, 1e-6);
  EXPECT_GE(fit.M_fit, 1.0);
  EXPECT_LE(fit.M_fit, 1.001);
  EXPECT_TRUE(fit.dominated);
  EXPECT_FALSE(fit.full_decay);
  EXPECT_THROW(fit_decay(t, E, 10.0, 60.0), Error);
}

TEST(Fit, DetectsFullDecay)
{
  std::vector<double> t{0, 1, 2, 3, 4}, E{1.0, 0.5, 0.0, 0.0, 0.0};
  const auto fit = fit_decay(t, E, 0.0, 4.0);
  EXPECT_TRUE(fit.full_decay);
}

TEST(Decay, UndampedHasNoRateAndUnitContraction)
{
  const auto f = make(6, 0.0);
  DecayOptions o;
  o.T = 10.0;
  o.horizons = {5.0, 10.0};
  const auto r = analyze_decay(random_charge_free(f.cx, f.as, 1), f.cx, f.as, o);
  EXPECT_LE(std::abs(r.fit.omega_fit), 1e-9);
  for (double g : r.gamma)
    EXPECT_NEAR(g, 1.0, 1e-9);
}

TEST(Decay, DampedContractionIsMonotone)
{
  const auto f = make(8, 1.0);
  DecayOptions o;
  o.T = 20.0;
  o.horizons = {5.0, 10.0, 20.0};
  const auto r = analyze_decay(random_charge_free(f.cx, f.as, 2), f.cx, f.as, o);
  EXPECT_GT(r.fit.omega_fit, 0.0);
  ASSERT_EQ(r.gamma.size(), 3u);
  EXPECT_LT(r.gamma[0], 1.0);
  EXPECT_LT(r.gamma[1], r.gamma[0]);
  EXPECT_LT(r.gamma[2], r.gamma[1]);
  EXPECT_DOUBLE_EQ(r.gamma_T, r.gamma[2]);
  EXPECT_TRUE(r.ratio_ED.finite);
  EXPECT_FALSE(r.ratio_ED.outside_X);
  EXPECT_TRUE(std::isfinite(r.dtH.constant));
  EXPECT_GT(r.dtH.constant, 0.0);
}

TEST(Decay, ZeroDataAreReported)
{
  const auto f = make(5, 1.0);
  DecayOptions o;
  o.T = 2.0;
  o.horizons = {2.0};
  const auto r = analyze_decay(FieldState::zero(f.cx.grid), f.cx, f.as, o);
  EXPECT_TRUE(r.dtH.zero_data);
  EXPECT_EQ(r.dtH.lhs, 0.0);
}

TEST(Decay, StationaryDatumIsOutsideX)
{
  const auto f = make(8, 1.0);
  Vec p = Vec::Zero(f.cx.grid.nodes);
  for (std::size_t v = 0; v < f.as.free_node_mask.size(); ++v)
    if (f.as.free_node_mask[v])
      p[static_cast<Eigen::Index>(v)] = 1.0 + 0.1 * static_cast<double>(v % 5);
  DecayOptions o;
  o.T = 2.0;
  o.horizons = {2.0};
  const auto r = analyze_decay(gradient_state(f.cx, p), f.cx, f.as, o);
  EXPECT_TRUE(r.ratio_ED.outside_X);
  EXPECT_FALSE(r.ratio_ED.finite);
  EXPECT_NEAR(r.run.series.energy.back(), r.run.series.energy.front(), 1e-12 * r.run.series.energy.front());
}

TEST(Decay, SyntheticSeriesRatio)
{
  TimeSeries s;
  for (int i = 0; i < 5; ++i)
  {
    s.t.push_back(i);
    s.energy.push_back(2.0 * std::exp(-i));
    s.denergy.push_back(std::exp(-i));
  }
  const auto r = check_E_dominated_by_D(s);
  EXPECT_TRUE(r.finite);
  EXPECT_NEAR(r.ratio, 2.0, 1e-14);
  const auto g = check_contraction(s, {2.0, 4.0});
  EXPECT_NEAR(g[0], std::exp(-2.0), 1e-14);
  EXPECT_NEAR(g[1], std::exp(-4.0), 1e-14);
}

TEST(Projection, SymmetricIdempotentAndCurlFree)
{
  const auto f = make(8, 1.0);
  const auto u = random_state(f.cx, f.as, 1);
  const auto v = random_state(f.cx, f.as, 2);
  const auto Pu = project_equilibrium(u, f.cx, f.as);
  const auto Pv = project_equilibrium(v, f.cx, f.as);
  const double a = state_inner(f.as, Pu.projected, v);
  const double b = state_inner(f.as, u, Pv.projected);
  EXPECT_NEAR(a, b, 1e-9 * std::abs(a) + 1e-14);
  const auto PPu = project_equilibrium(Pu.projected, f.cx, f.as);
  EXPECT_LE(std::sqrt(energy(f.as, axpy(-1.0, PPu.projected, Pu.projected))),
            1e-9 * std::sqrt(energy(f.as, Pu.projected)));
  EXPECT_EQ(Pu.curl_e_part, 0.0);
  EXPECT_EQ(Pu.collar_e_part, 0.0);
  EXPECT_LE(Pu.ampere_b_part, 1e-9);
  EXPECT_EQ(Pu.kernel_dimension, predicted_kernel_dimension(f.cx, f.as));
}

TEST(Projection, AnnihilatesChargeFreeData)
{
  const auto f = make(8, 1.0);
  for (std::uint64_t s = 0; s < 3; ++s)
  {
    const auto z = random_charge_free(f.cx, f.as, s);
    const auto P = project_equilibrium(z, f.cx, f.as);
    EXPECT_LE(std::sqrt(energy(f.as, P.projected)), 1e-9);
  }
}

TEST(Projection, TrajectoryApproachesTheProjection)
{
  const auto f = make(8, 4.0, 0.3);
  DecayOptions o;
  o.T = 10.0;
  const auto r = check_convergence_to_P(random_state(f.cx, f.as, 3), f.cx, f.as, o);
  EXPECT_GT(r.fit.omega_fit, 0.0);
  EXPECT_LT(r.final_gap, 1e-2 * r.gap.front());
  EXPECT_GT(r.projected_norm, 0.0);
}
