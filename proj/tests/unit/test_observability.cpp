#include <cmath>

#include <gtest/gtest.h>

#include "maxdamp/errors.hpp"
#include "maxdamp/initial_data.hpp"
#include "maxdamp/observability.hpp"

using namespace maxdamp;

namespace
{

struct Fixture
{
  DeRhamComplex cx;
  MaterialAssembly as;
};

Fixture make(int n, MaterialSpec spec = {})
{
  Fixture f{assemble_complex(build_grid(n)), {}};
  f.as = sample_materials(f.cx, spec);
  return f;
}

GramianOptions gramian(double T, double a = 0.25)
{
  GramianOptions o;
  o.T = T;
  o.a = a;
  return o;
}

} // namespace

TEST(Gramian, ZeroMapsToZero)
{
  const auto f = make(6);
  const Gramian G(f.cx, f.as, gramian(2.0));
  const auto z = G.apply(FieldState::zero(f.cx.grid));
  EXPECT_EQ(z.e.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(z.b.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gramian, SymmetricAndPositive)
{
  const auto f = make(6);
  const Gramian G(f.cx, f.as, gramian(2.0));
  const auto u = random_charge_free(f.cx, f.as, 1);
  const auto v = random_charge_free(f.cx, f.as, 2);
  const double uv = G.inner(G.apply(u), v);
  const double vu = G.inner(u, G.apply(v));
  EXPECT_NEAR(uv, vu, 1e-9 * std::abs(uv) + 1e-14);
  EXPECT_GT(G.inner(G.apply(u), u), 0.0);
}

TEST(Gramian, QuadraticFormIsTheObservedEnergy)
{
  const auto f = make(6);
  const Gramian G(f.cx, f.as, gramian(2.0));
  const auto z = random_charge_free(f.cx, f.as, 3);
  const double q = G.inner(G.apply(z), z);
  EXPECT_NEAR(q, G.observed_energy(z), 1e-10 * q);
}

TEST(Gramian, ObservedEnergyGrowsWithTheHorizon)
{
  const auto f = make(6);
  const auto z = random_charge_free(f.cx, f.as, 4);
  double last = 0.0;
  for (double T : {1.0, 2.0, 4.0})
  {
    const double q = Gramian(f.cx, f.as, gramian(T)).observed_energy(z);
    EXPECT_GT(q, last);
    last = q;
  }
}

TEST(Gramian, QuotientIsScaleInvariant)
{
  const auto f = make(6);
  const auto z = random_charge_free(f.cx, f.as, 5);
  FieldState z3{3.0 * z.e, 3.0 * z.b, 0.0};
  const double q1 = observation_quotient(z, f.cx, f.as, gramian(2.0));
  const double q3 = observation_quotient(z3, f.cx, f.as, gramian(2.0));
  EXPECT_NEAR(q1, q3, 1e-10 * q1);
}

TEST(Gramian, RejectsChargedData)
{
  const auto f = make(6);
  const Gramian G(f.cx, f.as, gramian(2.0));
  try
  {
    G.apply(random_state(f.cx, f.as, 1));
    FAIL() << "charged datum accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::consistency);
  }
}

TEST(ObsConstant, FiniteAndNonincreasingInT)
{
  const auto f = make(6);
  double last = std::numeric_limits<double>::infinity();
  for (double T : {2.0, 4.0, 8.0})
  {
    ObserveOptions o;
    o.gramian = gramian(T);
    o.iterations = 40;
    const auto r = estimate_obs_constant(f.cx, f.as, o);
    EXPECT_TRUE(r.observable) << r.status;
    EXPECT_TRUE(std::isfinite(r.c_obs));
    EXPECT_GE(r.c_obs, r.floor * (1.0 - 1e-9));
    EXPECT_LE(r.c_obs, last * (1.0 + 1e-6));
    last = r.c_obs;
  }
}

TEST(ObsConstant, FullCollarScalesLikeOneOverT)
{
  const auto f = make(8);
  const double a = 0.5 - f.cx.grid.h / 4;
  std::vector<double> cT;
  for (double T : {1.0, 2.0})
  {
    ObserveOptions o;
    o.gramian = gramian(T, a);
    o.iterations = 30;
    cT.push_back(estimate_obs_constant(f.cx, f.as, o).c_obs * T);
  }
  EXPECT_NEAR(cT[0] / cT[1], 1.0, 0.05);
}

TEST(Hum, ZeroTargetNeedsNoControl)
{
  const auto f = make(6);
  ControlOptions o;
  o.T = 3.0;
  const auto zero = FieldState::zero(f.cx.grid);
  const auto c = hum_control(zero, zero, f.cx, f.as, o);
  EXPECT_EQ(c.control_norm, 0.0);
  EXPECT_EQ(c.miss, 0.0);
}

TEST(Hum, ReachesAChargeFreeTarget)
{
  const auto f = make(6);
  ControlOptions o;
  o.T = 4.0;
  const auto target = random_charge_free(f.cx, f.as, 8);
  const auto c = hum_control(FieldState::zero(f.cx.grid), target, f.cx, f.as, o);
  EXPECT_LE(c.miss, 1e-6);
  EXPECT_EQ(c.support_leak, 0.0);
  EXPECT_LE(c.divergence_max, 1e-10);
  EXPECT_GT(c.control_norm, 0.0);
}

TEST(Hum, RequiresDiagonalPermittivity)
{
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::rotated_aniso, {});
  const auto f = make(5, s);
  ControlOptions o;
  o.T = 2.0;
  const auto zero = FieldState::zero(f.cx.grid);
  EXPECT_THROW(hum_control(zero, zero, f.cx, f.as, o), Error);
}
