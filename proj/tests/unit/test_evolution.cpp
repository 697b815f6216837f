#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "maxdamp/errors.hpp"
#include "maxdamp/evolution.hpp"
#include "maxdamp/helmholtz.hpp"
#include "maxdamp/initial_data.hpp"

using namespace maxdamp;

namespace
{

struct Fixture
{
  DeRhamComplex cx;
  MaterialAssembly as;
};

Fixture make(int n, double sigma0, MaterialSpec spec = {})
{
  Fixture f{assemble_complex(build_grid(n)), {}};
  spec.sigma.sigma0 = sigma0;
  spec.sigma.a = 0.25;
  f.as = sample_materials(f.cx, spec);
  return f;
}

SimulationOptions midpoint(double dt, double T)
{
  SimulationOptions o;
  o.dt = dt;
  o.T = T;
  return o;
}

double max_abs(const Vec &x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

TEST(Energy, ZeroAndUnitEntries)
{
  const auto f = make(4, 0.0);
  EXPECT_EQ(energy(f.as, FieldState::zero(f.cx.grid)), 0.0);
  auto z = FieldState::zero(f.cx.grid);
  const auto e = f.cx.grid.edge_index(0, 1, 2, 2);
  z.e[e] = 1.0;
  EXPECT_DOUBLE_EQ(energy(f.as, z), f.as.edge_weight[e]);
  z.e *= 2.0;
  EXPECT_DOUBLE_EQ(energy(f.as, z), 4.0 * f.as.edge_weight[e]);
}

TEST(Energy, AmpereIsTheAdjointOfFaraday)
{
  const auto f = make(5, 0.0, {MaterialPreset(PresetKind::rotated_aniso, {}),
                               MaterialPreset(PresetKind::radial_growth, {}), {0.5, 0.5, 0.5}, {}});
  const auto z = random_state(f.cx, f.as, 3);
  const auto w = random_state(f.cx, f.as, 4);
  // <M_eps^{-1} ampere(b), e>_eps = <b, faraday(e)>_{mu^{-1}}
  const double lhs = ampere(f.cx, f.as, w.b).dot(z.e);
  const double rhs = magnetic_field(f.as, w.b).dot(faraday(f.cx, f.as, z.e));
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs) + 1e-14);
}

TEST(Midpoint, ConservesEnergyWithoutDamping)
{
  const auto f = make(8, 0.0);
  const auto z0 = random_charge_free(f.cx, f.as, 11);
  const auto r = simulate(z0, f.cx, f.as, midpoint(f.cx.grid.h / 2, 6.25));
  EXPECT_EQ(r.diagnostics.steps, 100);
  const auto [lo, hi] = std::minmax_element(r.series.energy.begin(), r.series.energy.end());
  EXPECT_LE((*hi - *lo) / r.series.energy.front(), 1e-10);
  const auto [dlo, dhi] = std::minmax_element(r.series.denergy.begin(), r.series.denergy.end());
  EXPECT_LE((*dhi - *dlo) / r.series.denergy.front(), 1e-10);
}

TEST(Midpoint, ZeroStaysZero)
{
  const auto f = make(6, 1.0);
  const auto r = simulate(FieldState::zero(f.cx.grid), f.cx, f.as, midpoint(f.cx.grid.h / 2, 1.0));
  EXPECT_EQ(max_abs(r.final_state.e), 0.0);
  EXPECT_EQ(max_abs(r.final_state.b), 0.0);
  EXPECT_EQ(r.series.energy.back(), 0.0);
}

TEST(Midpoint, DampedBalanceAndDissipation)
{
  const auto f = make(8, 1.0);
  const auto z0 = random_charge_free(f.cx, f.as, 5);
  auto o = midpoint(f.cx.grid.h / 2, 20.0);
  const auto r = simulate(z0, f.cx, f.as, o);
  EXPECT_LE(r.diagnostics.energy_balance_max, 1e-10);
  EXPECT_LE(r.diagnostics.denergy_balance_max, 1e-10);
  EXPECT_LE(r.diagnostics.energy_increase_max, 1e-12);
  EXPECT_TRUE(r.diagnostics.magnetic_constraints_exact);
  const double lost = r.series.energy.front() - r.series.energy.back();
  EXPECT_NEAR(r.series.dissipation_cum.back(), lost, 1e-9);
}

TEST(Midpoint, RecordedEnergyMatchesStates)
{
  const auto f = make(6, 1.0);
  auto o = midpoint(f.cx.grid.h / 2, 2.0);
  o.keep_states = true;
  o.record_every = 2;
  const auto r = simulate(random_state(f.cx, f.as, 2), f.cx, f.as, o);
  ASSERT_EQ(r.states.size(), r.series.size());
  for (std::size_t i = 0; i < r.states.size(); ++i)
  {
    EXPECT_EQ(r.series.energy[i], energy(f.as, r.states[i]));
    EXPECT_EQ(r.series.t[i], r.states[i].t);
  }
}

TEST(Midpoint, EffectiveStepDividesTheHorizon)
{
  EXPECT_EQ(step_count(1.0, 0.3), 4);
  EXPECT_EQ(step_count(1.0, 0.25), 4);
  EXPECT_THROW(step_count(1.0, 0.0), Error);
  EXPECT_THROW(step_count(-1.0, 0.1), Error);
}

TEST(Midpoint, BackwardStepInvertsForwardStep)
{
  const auto f = make(5, 0.0);
  const MidpointStepper st(f.cx, f.as, 0.05, {1e-14, 10000});
  const auto z0 = random_state(f.cx, f.as, 8);
  Vec e = z0.e, b = z0.b;
  st.step(e, b);
  st.step_backward(e, b);
  EXPECT_LE((e - z0.e).norm(), 1e-11 * z0.e.norm());
  EXPECT_LE((b - z0.b).norm(), 1e-11 * z0.b.norm());

  const auto g = make(5, 1.0);
  const MidpointStepper damped(g.cx, g.as, 0.05);
  EXPECT_THROW(damped.step_backward(e, b), Error);
}

TEST(Midpoint, MagneticConstraintsAreBitwise)
{
  const auto f = make(6, 1.0, {MaterialPreset(PresetKind::rotated_aniso, {}),
                               MaterialPreset(PresetKind::diag_aniso, {}), {0.5, 0.5, 0.5}, {}});
  const auto z0 = random_state(f.cx, f.as, 21);
  auto o = midpoint(f.cx.grid.h / 2, 3.0);
  o.keep_states = true;
  const auto r = simulate(z0, f.cx, f.as, o);
  EXPECT_TRUE(r.diagnostics.magnetic_constraints_exact);
  const Vec d0 = f.cx.D_inc * r.states.front().b;
  for (const auto &z : r.states)
  {
    EXPECT_TRUE(f.cx.D_inc * z.b == d0);
    for (std::size_t i = 0; i < f.cx.boundary_face_mask.size(); ++i)
      EXPECT_TRUE(!f.cx.boundary_face_mask[i] || z.b[static_cast<Eigen::Index>(i)] == r.states.front().b[static_cast<Eigen::Index>(i)]);
  }
}

TEST(Charge, ConservedWithoutDampingAndBalancedWithIt)
{
  const auto f = make(6, 0.0);
  const auto z0 = random_state(f.cx, f.as, 4);
  auto r = simulate(z0, f.cx, f.as, midpoint(f.cx.grid.h / 2, 2.0));
  EXPECT_LE(r.diagnostics.charge_law_max, 1e-12);
  const Vec rho0 = charge(f.cx, f.as, z0.e);
  const Vec rho1 = charge(f.cx, f.as, r.final_state.e);
  EXPECT_LE(max_abs(rho1 - rho0), 1e-10 * max_abs(rho0));

  const auto g = make(6, 1.0);
  r = simulate(random_state(g.cx, g.as, 4), g.cx, g.as, midpoint(g.cx.grid.h / 2, 2.0));
  EXPECT_LE(r.diagnostics.charge_law_max, 1e-10);
}

TEST(Charge, ChargeFreeDataStayChargeFreeOutsideTheCollar)
{
  const auto f = make(8, 1.0);
  const auto r = simulate(random_charge_free(f.cx, f.as, 9), f.cx, f.as, midpoint(f.cx.grid.h / 2, 5.0));
  for (double q : r.series.charge_upsilon)
    EXPECT_LE(q, 1e-10);
}

TEST(Charge, GradientDatumCarriesItsPotentialCharge)
{
  const auto f = make(6, 0.0);
  const Vec p0 = random_potential(f.cx, 6);
  const auto z = gradient_state(f.cx, p0);
  const Vec rho = charge(f.cx, f.as, z.e);
  const Vec lap = potential_operator(f.cx, f.as, p0);
  Vec diff = rho - lap;
  apply_mask(f.cx.interior_node_mask, diff);
  EXPECT_LE(max_abs(diff), 1e-14 * max_abs(rho));
}

TEST(Leapfrog, RejectsUnsupportedConfigurations)
{
  const auto f = make(6, 0.0, {MaterialPreset(PresetKind::rotated_aniso, {}), MaterialPreset::identity(),
                               {0.5, 0.5, 0.5}, {}});
  try
  {
    LeapfrogStepper(f.cx, f.as, 0.01);
    FAIL() << "non-diagonal mass accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_scheme);
  }
  const auto g = make(6, 0.0);
  const double cfl = LeapfrogStepper::cfl_limit(g.cx, g.as);
  try
  {
    LeapfrogStepper(g.cx, g.as, 1.01 * cfl);
    FAIL() << "step above the CFL bound accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::stability);
  }
}

TEST(Leapfrog, StaggeredEnergyDecreasesStrictly)
{
  const auto f = make(8, 1.0);
  auto o = midpoint(0.5 * LeapfrogStepper::cfl_limit(f.cx, f.as), 1.0);
  o.scheme = Scheme::leapfrog;
  o.T = 500 * o.dt;
  const auto r = simulate(random_charge_free(f.cx, f.as, 3), f.cx, f.as, o);
  EXPECT_TRUE(r.diagnostics.staggered_energy_strictly_decreasing);
  EXPECT_LE(r.diagnostics.energy_balance_max, 1e-10);
}

TEST(Leapfrog, StandingWaveHasNoDrift)
{
  const auto f = make(16, 0.0);
  auto o = midpoint(0.5 * LeapfrogStepper::cfl_limit(f.cx, f.as), 1.0);
  o.scheme = Scheme::leapfrog;
  o.T = 10000 * o.dt;
  o.track_derivative = false;
  o.record_every = 10;
  const auto r = simulate(standing_wave(f.cx), f.cx, f.as, o);
  const auto &W = r.series.staggered_energy;
  const auto [wlo, whi] = std::minmax_element(W.begin(), W.end());
  EXPECT_LE((*whi - *wlo) / W.front(), 1e-10);
  // The synchronous energy oscillates in an O(dt^2) band around W.
  const double omega = std::numbers::pi * std::sqrt(2.0);
  const double band = (omega * r.diagnostics.dt) * (omega * r.diagnostics.dt);
  for (double E : r.series.energy)
    EXPECT_LE(std::abs(E - W.front()) / W.front(), band);
}
