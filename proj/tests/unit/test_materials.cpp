#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "maxdamp/errors.hpp"
#include "maxdamp/materials.hpp"

using namespace maxdamp;

namespace
{

MaterialSpec damped(double sigma0, double a)
{
  MaterialSpec s;
  s.sigma.sigma0 = sigma0;
  s.sigma.a = a;
  return s;
}

} // namespace

TEST(Collar, CellCounts)
{
  const auto g = build_grid(8);
  EXPECT_EQ(count(collar_mask(g, 0.25).cells), 448u);
  EXPECT_EQ(count(collar_mask(g, 0.25).upsilon_cells), 64u);
  EXPECT_EQ(count(collar_mask(g, g.h / 2).cells), 512u - 216u);
  EXPECT_EQ(count(collar_mask(g, 0.5 - g.h / 4).cells), 512u);
}

TEST(Collar, RejectsWidthsOutsideTheBox)
{
  const auto g = build_grid(8);
  EXPECT_THROW(collar_mask(g, 0.0), Error);
  EXPECT_THROW(collar_mask(g, 0.5), Error);
  EXPECT_THROW(collar_mask(g, 0.9), Error);
}

TEST(Collar, FreeNodesAvoidCollarEdges)
{
  const auto g = build_grid(8);
  const auto m = collar_mask(g, 0.25);
  for (std::size_t v = 0; v < m.free_nodes.size(); ++v)
    EXPECT_TRUE(!m.free_nodes[v] || !m.nodes[v]);
  EXPECT_GT(count(m.free_nodes), 0u);
}

TEST(Materials, ConstantMassIsTheGeometricWeight)
{
  const auto cx = assemble_complex(build_grid(6));
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::constant, {3.0});
  const auto as = sample_materials(cx, s);
  EXPECT_TRUE(as.eps_diagonal);
  const Vec d = as.M_eps.diagonal();
  EXPECT_LE((d - 3.0 * as.edge_weight).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(asymmetry(as.M_eps), 0.0);
  EXPECT_EQ(asymmetry(as.M_mu), 0.0);
}

TEST(Materials, DiagonalAnisotropyRatios)
{
  const auto cx = assemble_complex(build_grid(4));
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::diag_aniso, {1.0, 2.0, 4.0});
  const auto as = sample_materials(cx, s);
  const auto &g = cx.grid;
  const double wx = as.M_eps.coeff(g.edge_index(0, 1, 2, 2), g.edge_index(0, 1, 2, 2));
  const double wy = as.M_eps.coeff(g.edge_index(1, 2, 1, 2), g.edge_index(1, 2, 1, 2));
  const double wz = as.M_eps.coeff(g.edge_index(2, 2, 2, 1), g.edge_index(2, 2, 2, 1));
  EXPECT_DOUBLE_EQ(wy / wx, 2.0);
  EXPECT_DOUBLE_EQ(wz / wx, 4.0);
}

TEST(Materials, RotatedAnisotropyIsSpdAndCoupled)
{
  const auto cx = assemble_complex(build_grid(4));
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::rotated_aniso, {45.0, 1.0, 4.0, 1.0});
  const auto as = sample_materials(cx, s);
  EXPECT_FALSE(as.eps_diagonal);
  EXPECT_TRUE(as.eps_spd.pass);
  EXPECT_GT(as.eps_spd.min_rayleigh, 0.0);
  EXPECT_LE(asymmetry(as.M_eps), 1e-15);
}

TEST(Materials, PresetParameterChecks)
{
  EXPECT_THROW(MaterialPreset(PresetKind::constant, {1.0, 2.0}), Error);
  EXPECT_THROW(MaterialPreset(PresetKind::diag_aniso, {1.0, NAN}), Error);
  EXPECT_THROW(parse_preset_kind("lorentz"), Error);
  EXPECT_EQ(parse_preset_kind("radial_decay"), PresetKind::radial_decay);
  EXPECT_THROW(parse_sigma_profile("tanh"), Error);
}

TEST(Materials, IndefiniteTensorIsRejected)
{
  const auto cx = assemble_complex(build_grid(4));
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::diag_aniso, {1.0, -1.0, 1.0});
  try
  {
    sample_materials(cx, s);
    FAIL() << "indefinite epsilon accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::material);
  }
}

TEST(Materials, RadialDerivativeMatchesFiniteDifferences)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Point x0{0.5, 0.5, 0.5};
  for (auto kind : {PresetKind::radial_growth, PresetKind::radial_decay, PresetKind::constant})
  {
    const MaterialPreset p(kind, {});
    for (int s = 0; s < 100; ++s)
    {
      const Point x{u(rng), u(rng), u(rng)};
      const double d = 1e-6;
      Point xp = x, xm = x;
      for (int c = 0; c < 3; ++c)
      {
        xp[c] = x0[c] + (1.0 + d) * (x[c] - x0[c]);
        xm[c] = x0[c] + (1.0 - d) * (x[c] - x0[c]);
      }
      const Eigen::Matrix3d fd = (p.eval(xp, x0) - p.eval(xm, x0)) / (2.0 * d);
      EXPECT_LE((fd - p.radial_derivative(x, x0)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Nontrapping, ConstantAndGrowthPass)
{
  const auto g = build_grid(8);
  MaterialSpec s;
  auto r = check_nontrapping(s, g);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.eta_eps, 1.0, 1e-14);
  s.epsilon = MaterialPreset(PresetKind::radial_growth, {1.0, 1.0});
  r = check_nontrapping(s, g);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.eta_eps, 1.0);
}

TEST(Nontrapping, RadialDecayFailsAtTheCorners)
{
  const auto g = build_grid(8);
  MaterialSpec s;
  s.mu = MaterialPreset(PresetKind::radial_decay, {1.0, 4.0});
  const auto r = check_nontrapping(s, g);
  EXPECT_FALSE(r.pass);
  EXPECT_LE(r.eta_mu, 0.0);
  double rr = 0.0;
  for (int c = 0; c < 3; ++c)
    rr += (r.worst_point[c] - 0.5) * (r.worst_point[c] - 0.5);
  EXPECT_GT(std::sqrt(rr), std::sqrt(1.0 / 8.0));
}

TEST(Nontrapping, InvariantUnderScaling)
{
  const auto g = build_grid(6);
  MaterialSpec s1, s2;
  s1.epsilon = MaterialPreset(PresetKind::radial_growth, {1.0, 2.0});
  s2.epsilon = MaterialPreset(PresetKind::radial_growth, {7.5, 2.0});
  EXPECT_NEAR(check_nontrapping(s1, g).eta_eps, check_nontrapping(s2, g).eta_eps, 1e-13);
}

TEST(SigmaGap, IndicatorPassesSmoothstepFails)
{
  const auto cx = assemble_complex(build_grid(8));
  auto as = sample_materials(cx, damped(1.0, 0.25));
  EXPECT_TRUE(check_sigma_gap(as, 1.0).pass);
  EXPECT_EQ(count(as.collar_edge_mask), static_cast<std::size_t>((as.M_sigma.diagonal().array() > 0).count()));

  auto spec = damped(1.0, 0.25);
  spec.sigma.profile = SigmaProfile::smoothstep;
  as = sample_materials(cx, spec);
  const auto rep = check_sigma_gap(as, 1.0);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.offending.empty());
}

TEST(SigmaGap, UndampedIsReported)
{
  const auto cx = assemble_complex(build_grid(4));
  const auto as = sample_materials(cx, MaterialSpec{});
  const auto rep = check_sigma_gap(as, 0.0);
  EXPECT_TRUE(rep.undamped);
  EXPECT_EQ(as.M_sigma.nonZeros(), 0);
  EXPECT_THROW(sample_materials(cx, damped(-1.0, 0.25)), Error);
}

TEST(MassInverse, SolvesOnRetainedEdges)
{
  const auto cx = assemble_complex(build_grid(4));
  MaterialSpec s;
  s.epsilon = MaterialPreset(PresetKind::rotated_aniso, {});
  const auto as = sample_materials(cx, s);
  Vec r = Vec::LinSpaced(cx.grid.num_edges(), -1.0, 1.0);
  apply_mask(cx.pec_edge_mask, r);
  const Vec x = as.eps_inverse.apply(r);
  EXPECT_LE((masked(cx.pec_edge_mask, as.M_eps * x) - r).norm(), 1e-12 * r.norm());
  for (std::size_t e = 0; e < cx.pec_edge_mask.size(); ++e)
    EXPECT_TRUE(cx.pec_edge_mask[e] || x[static_cast<Eigen::Index>(e)] == 0.0);
}
