#include <cmath>

#include <gtest/gtest.h>

#include "maxdamp/errors.hpp"
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

double max_abs(const Vec &x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

MaterialSpec anisotropic()
{
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::diag_aniso, {1.0, 2.0, 4.0});
  s.mu = MaterialPreset(PresetKind::radial_growth, {});
  return s;
}

} // namespace

TEST(Potential, RecoversAGradient)
{
  const auto f = make(6, 0.0, anisotropic());
  const Vec p0 = random_potential(f.cx, 3);
  const auto ps = solve_p(f.cx.grad(p0), f.cx, f.as, {1e-14, 10000});
  EXPECT_LE(max_abs(ps.p - p0), 1e-10 * max_abs(p0));
  EXPECT_LE(max_abs(ps.v), 1e-9 * max_abs(ps.field));
}

TEST(Potential, DivergenceFreeFieldHasZeroPotential)
{
  const auto f = make(6, 0.0, anisotropic());
  const auto z = random_charge_free(f.cx, f.as, 5);
  const auto ps = solve_p(z.e, f.cx, f.as);
  EXPECT_LE(max_abs(ps.gradient), 1e-9 * max_abs(z.e));
}

TEST(Potential, SplitIsChargeFreeAndKeepsTheCurl)
{
  const auto f = make(8, 1.0, anisotropic());
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    const auto z = random_state(f.cx, f.as, s);
    const auto ps = solve_p(z.e, f.cx, f.as);
    EXPECT_TRUE(f.cx.C_inc * ps.v == f.cx.C_inc * ps.field);
    EXPECT_LE(max_abs(ps.field - z.e), ps.quantum);
    const Vec q = charge(f.cx, f.as, ps.v);
    EXPECT_LE(max_abs(q), 1e-10 * max_abs(charge(f.cx, f.as, z.e)));
  }
}

TEST(Potential, DotVanishesWithoutDampingOrOutsideTheCollar)
{
  const auto f = make(6, 0.0);
  const auto z = random_state(f.cx, f.as, 1);
  EXPECT_EQ(max_abs(solve_p_dot(z.e, f.cx, f.as)), 0.0);

  const auto g = make(8, 1.0);
  Vec e = Vec::Zero(g.cx.grid.num_edges());
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (!g.as.collar_edge_mask[static_cast<std::size_t>(i)])
      e[i] = 1.0;
  EXPECT_EQ(max_abs(solve_p_dot(e, g.cx, g.as)), 0.0);
}

TEST(Potential, DotConstantIsFinite)
{
  const auto f = make(8, 1.0);
  const auto b = estimate_pdot_constant(f.cx, f.as, 20, 1);
  EXPECT_EQ(b.samples, 20);
  EXPECT_TRUE(std::isfinite(b.constant));
  EXPECT_GT(b.constant, 0.0);
}

TEST(FluxSplit, SeparatesStationaryFluxes)
{
  const auto f = make(5, 0.0, anisotropic());
  const auto z = random_state(f.cx, f.as, 2);
  Vec b = z.b;
  for (std::size_t i = 0; i < f.cx.boundary_face_mask.size(); ++i)
    if (f.cx.boundary_face_mask[i])
      b[static_cast<Eigen::Index>(i)] += 0.1 * static_cast<double>(i % 7);
  const auto s = split_flux(b, f.cx, f.as, {1e-14, 10000});
  EXPECT_LE((s.free + s.kernel - b).norm(), 1e-13 * b.norm());
  EXPECT_LE(max_abs(f.cx.div(s.free)), 1e-10 * max_abs(b) * f.cx.inv_h);
  for (std::size_t i = 0; i < f.cx.boundary_face_mask.size(); ++i)
    EXPECT_LE(f.cx.boundary_face_mask[i] ? std::abs(s.free[static_cast<Eigen::Index>(i)]) : 0.0, 1e-10 * max_abs(b));
  // Orthogonal in the M_mu^{-1} pairing.
  EXPECT_NEAR(magnetic_field(f.as, s.free).dot(s.kernel), 0.0, 1e-10 * b.dot(magnetic_field(f.as, b)));
}

TEST(ChargeFreeProjection, IsIdempotent)
{
  const auto f = make(6, 1.0, anisotropic());
  const auto z = random_state(f.cx, f.as, 7);
  const auto p1 = project_charge_free(f.cx, f.as, z);
  const auto p2 = project_charge_free(f.cx, f.as, p1);
  EXPECT_LE((p2.e - p1.e).norm(), 1e-9 * p1.e.norm());
  EXPECT_LE((p2.b - p1.b).norm(), 1e-9 * p1.b.norm());
}

TEST(Wi0, VanishesWithoutDampingOrData)
{
  const auto f = make(6, 0.0);
  const auto z = random_state(f.cx, f.as, 1);
  EXPECT_EQ(max_abs(build_Wi0(z.e, f.cx, f.as).b), 0.0);
  const auto g = make(6, 1.0);
  EXPECT_EQ(max_abs(build_Wi0(Vec::Zero(g.cx.grid.num_edges()), g.cx, g.as).b), 0.0);
}

TEST(Wi0, SolvesTheInitialCompatibility)
{
  const auto f = make(8, 1.0);
  const auto z = random_state(f.cx, f.as, 4);
  const auto w = build_Wi0(z.e, f.cx, f.as);
  EXPECT_LE(w.residual, 1e-9);
  EXPECT_LE(w.compatibility, 1e-9);
  EXPECT_LE(w.kernel_defect, 1e-9);
}

TEST(Split, UndampedChargeFreeDataAreHomogeneous)
{
  const auto f = make(6, 0.0);
  SplitOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 2.0;
  const auto s = split_run(random_charge_free(f.cx, f.as, 3), f.cx, f.as, o);
  EXPECT_LE(s.residual_max, 1e-10);
  EXPECT_LE(s.duhamel_lhs, 1e-20);
  EXPECT_LE(s.homogeneous_drift, 1e-10);
}

TEST(Split, DampedReconstruction)
{
  const auto f = make(8, 1.0, anisotropic());
  SplitOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 4.0;
  const auto s = split_run(random_state(f.cx, f.as, 12), f.cx, f.as, o);
  EXPECT_LE(s.residual_max, 1e-8);
  EXPECT_LE(s.initial_derivative, 1e-9);
  EXPECT_LE(s.homogeneous_drift, 1e-10);
  EXPECT_LE(s.homogeneous_charge, 1e-10);
  EXPECT_EQ(s.full.size(), s.residual.size());
}

TEST(Split, PureGradientData)
{
  const auto f = make(6, 1.0);
  SplitOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 1.0;
  const auto s = split_run(gradient_state(f.cx, random_potential(f.cx, 2)), f.cx, f.as, o);
  EXPECT_LE(s.residual_max, 1e-8);
  EXPECT_LE(max_abs(s.homogeneous.front().e), 1e-9 * max_abs(s.full.front().e));
}

TEST(Split, IsLinearInTheData)
{
  const auto f = make(6, 1.0);
  SplitOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 1.0;
  const auto z1 = random_state(f.cx, f.as, 1);
  const auto z2 = random_state(f.cx, f.as, 2);
  FieldState sum{z1.e + 2.0 * z2.e, z1.b + 2.0 * z2.b, 0.0};
  const auto s1 = split_run(z1, f.cx, f.as, o);
  const auto s2 = split_run(z2, f.cx, f.as, o);
  const auto s = split_run(sum, f.cx, f.as, o);
  const Vec vh = s1.homogeneous.back().e + 2.0 * s2.homogeneous.back().e;
  EXPECT_LE((s.homogeneous.back().e - vh).norm(), 1e-8 * vh.norm());
  const Vec vi = s1.inhomogeneous.back().e + 2.0 * s2.inhomogeneous.back().e;
  EXPECT_LE((s.inhomogeneous.back().e - vi).norm(), 1e-8 * (vi.norm() + vh.norm()));
}

TEST(Split, HomogeneousRejectsChargedData)
{
  const auto f = make(6, 1.0);
  SimulationOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 0.5;
  try
  {
    evolve_homogeneous(random_state(f.cx, f.as, 1), f.cx, f.as, o);
    FAIL() << "charged data accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::consistency);
  }
}

TEST(Split, InhomogeneousChecksTheForcingLength)
{
  const auto f = make(6, 1.0);
  SimulationOptions o;
  o.dt = f.cx.grid.h / 2;
  o.T = 0.5;
  std::vector<Vec> forcing(3, Vec::Zero(f.cx.grid.num_edges()));
  try
  {
    evolve_inhomogeneous(Vec::Zero(f.cx.grid.num_faces()), forcing, f.cx, f.as, o);
    FAIL() << "short forcing list accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::interface);
  }
}

TEST(Duhamel, ConstantScalesLikeTSquared)
{
  const auto f = make(8, 1.0);
  const auto d = estimate_duhamel_constant(f.cx, f.as, {5.0, 10.0, 20.0}, f.cx.grid.h / 2, 3, 1);
  ASSERT_EQ(d.constants.size(), 3u);
  for (double c : d.constants)
  {
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_GT(c, 0.0);
  }
  EXPECT_LE(d.spread, 3.0);
}
