#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "maxdamp/errors.hpp"
#include "maxdamp/mesh.hpp"

using namespace maxdamp;

namespace
{

Vec random_vec(Eigen::Index size, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vec x(size);
  for (auto &v : x)
    v = nd(rng);
  return x;
}

// Integer-valued entries keep every incidence product exact.
Vec random_integers(Eigen::Index size, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ud(-1000, 1000);
  Vec x(size);
  for (auto &v : x)
    v = ud(rng);
  return x;
}

double max_abs(const Vec &x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

TEST(Mesh, CountsMatchTheLattice)
{
  const auto g2 = build_grid(2);
  EXPECT_EQ(g2.nodes, 27);
  EXPECT_EQ(g2.num_edges(), 54);
  EXPECT_EQ(g2.num_faces(), 36);
  EXPECT_EQ(g2.cells, 8);

  const auto g4 = build_grid(4);
  EXPECT_EQ(g4.nodes, 125);
  EXPECT_EQ(g4.num_edges(), 300);
  EXPECT_EQ(g4.num_faces(), 240);
  EXPECT_EQ(g4.cells, 64);
  EXPECT_DOUBLE_EQ(g4.h, 0.25);
}

TEST(Mesh, RejectsDegenerateGrids)
{
  try
  {
    build_grid(1);
    FAIL() << "n = 1 accepted";
  }
  catch (const Error &e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_parameter);
  }
  EXPECT_THROW(build_grid(4, 0.0), Error);
}

TEST(Mesh, IndexRoundTrip)
{
  const auto g = build_grid(3);
  for (Eigen::Index e = 0; e < g.num_edges(); ++e)
  {
    const auto c = g.edge_coord(e);
    EXPECT_EQ(g.edge_index(c.axis, c.i, c.j, c.k), e);
  }
  for (Eigen::Index f = 0; f < g.num_faces(); ++f)
  {
    const auto c = g.face_coord(f);
    EXPECT_EQ(g.face_index(c.axis, c.i, c.j, c.k), f);
  }
}

TEST(Mesh, ComplexIsExactForSmallGrids)
{
  for (int n = 2; n <= 6; ++n)
  {
    const auto cx = assemble_complex(build_grid(n));
    EXPECT_EQ(cx.curl_grad().nonZeros(), 0) << "n = " << n;
    EXPECT_EQ(cx.div_curl().nonZeros(), 0) << "n = " << n;
  }
}

TEST(Mesh, CurlOfGradientIsBitwiseZero)
{
  const auto cx = assemble_complex(build_grid(6));
  for (std::uint64_t s = 0; s < 100; ++s)
  {
    const Vec p = random_integers(cx.grid.nodes, s);
    EXPECT_EQ(max_abs(cx.C_inc * (cx.G_inc * p)), 0.0);
    const Vec e = random_integers(cx.grid.num_edges(), 1000 + s);
    EXPECT_EQ(max_abs(cx.D_inc * (cx.C_inc * e)), 0.0);
  }
}

TEST(Mesh, CurlOfGradientVanishesToRoundoff)
{
  const auto cx = assemble_complex(build_grid(6));
  for (std::uint64_t s = 0; s < 20; ++s)
  {
    const Vec p = random_vec(cx.grid.nodes, s);
    const Vec g = cx.grad(p);
    EXPECT_LE(max_abs(cx.curl(g)), 1e-14 * cx.inv_h * max_abs(g));
    const Vec e = random_vec(cx.grid.num_edges(), 1000 + s);
    const Vec c = cx.curl(e);
    EXPECT_LE(max_abs(cx.div(c)), 1e-14 * cx.inv_h * max_abs(c));
  }
}

TEST(Mesh, SmoothGradientHasZeroCurl)
{
  const auto cx = assemble_complex(build_grid(4));
  Vec p(cx.grid.nodes);
  for (Eigen::Index i = 0; i < p.size(); ++i)
  {
    const auto x = cx.grid.node_position(i);
    p[i] = std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]) *
           std::sin(std::numbers::pi * x[2]);
  }
  const Vec g = cx.grad(p);
  EXPECT_LE(max_abs(cx.curl(g)), 1e-14 * cx.inv_h * max_abs(g));
}

TEST(Mesh, PecMask)
{
  const auto cx = assemble_complex(build_grid(4));
  const Vec ones = Vec::Ones(cx.grid.num_edges());
  const Vec masked = apply_pec(cx, ones);
  const auto retained = masked.sum();
  // Tangential boundary edges: 12 n (n + 1) total minus the interior ones.
  EXPECT_EQ(static_cast<long>(retained), 3L * 4 * 3 * 3);
  EXPECT_EQ(max_abs(apply_pec(cx, Vec::Zero(cx.grid.num_edges()))), 0.0);
  EXPECT_TRUE(apply_pec(cx, masked) == masked);
  EXPECT_THROW(apply_pec(cx, Vec::Ones(7)), Error);
}

TEST(Mesh, CurlIsSecondOrderAtFaceCentres)
{
  const double pi = std::numbers::pi;
  auto field = [&](const Point &x) {
    return std::array<double, 3>{std::sin(pi * x[1]) * std::cos(pi * x[2]),
                                 std::sin(pi * x[2]) * std::cos(pi * x[0]),
                                 std::sin(pi * x[0]) * std::cos(pi * x[1])};
  };
  auto curl = [&](const Point &x) {
    // (dy Ez - dz Ey, dz Ex - dx Ez, dx Ey - dy Ex)
    const double dyEz = -pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    const double dzEy = pi * std::cos(pi * x[2]) * std::cos(pi * x[0]);
    const double dzEx = -pi * std::sin(pi * x[1]) * std::sin(pi * x[2]);
    const double dxEz = pi * std::cos(pi * x[0]) * std::cos(pi * x[1]);
    const double dxEy = -pi * std::sin(pi * x[2]) * std::sin(pi * x[0]);
    const double dyEx = pi * std::cos(pi * x[1]) * std::cos(pi * x[2]);
    return std::array<double, 3>{dyEz - dzEy, dzEx - dxEz, dxEy - dyEx};
  };

  std::vector<double> errors;
  for (int n : {8, 16, 32})
  {
    const auto cx = assemble_complex(build_grid(n));
    Vec e(cx.grid.num_edges());
    for (Eigen::Index i = 0; i < e.size(); ++i)
      e[i] = field(cx.grid.edge_midpoint(i))[cx.grid.edge_coord(i).axis];
    const Vec b = cx.curl(e);
    double err = 0.0;
    for (Eigen::Index f = 0; f < b.size(); ++f)
      err = std::max(err, std::abs(b[f] - curl(cx.grid.face_center(f))[cx.grid.face_coord(f).axis]));
    errors.push_back(err);
  }
  for (std::size_t i = 1; i < errors.size(); ++i)
  {
    const double slope = std::log2(errors[i - 1] / errors[i]);
    EXPECT_GE(slope, 1.8);
    EXPECT_LE(slope, 2.2);
  }
}
