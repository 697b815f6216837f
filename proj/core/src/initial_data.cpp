#include "maxdamp/initial_data.hpp"

#include <cmath>
#include <random>

namespace maxdamp
{

namespace
{

constexpr double pi = 3.14159265358979323846;

Vec gaussian_vector(Eigen::Index n, std::mt19937_64 &rng)
{
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = g(rng);
  return v;
}

// b = C P a for a random edge vector a: divergence free, zero normal trace.
Vec random_flux(const DeRhamComplex &cx, std::mt19937_64 &rng)
{
  const Vec a = apply_pec(cx, gaussian_vector(cx.grid.num_edges(), rng));
  return cx.curl(a);
}

double gauss(const Point &x, const Point &c, double w)
{
  double r2 = 0.0;
  for (int d = 0; d < 3; ++d)
    r2 += (x[d] - c[d]) * (x[d] - c[d]);
  return std::exp(-0.5 * r2 / (w * w));
}

} // namespace

FieldState normalized(const MaterialAssembly &assembly, FieldState z)
{
  const double E = energy(assembly, z);
  if (E > 0.0)
  {
    const double s = 1.0 / std::sqrt(E);
    z.e *= s;
    z.b *= s;
  }
  return z;
}

FieldState random_charge_free(const DeRhamComplex &cx, const MaterialAssembly &as, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  FieldState z;
  const Vec g = gaussian_vector(cx.grid.num_faces(), rng);
  Vec r = cx.curl_t(g);
  apply_mask(cx.pec_edge_mask, r);
  z.e = as.eps_inverse.apply(r);
  z.b = random_flux(cx, rng);
  return normalized(as, z);
}

FieldState random_state(const DeRhamComplex &cx, const MaterialAssembly &as, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  FieldState z;
  z.e = apply_pec(cx, gaussian_vector(cx.grid.num_edges(), rng));
  z.b = random_flux(cx, rng);
  return normalized(as, z);
}

Vec random_potential(const DeRhamComplex &cx, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  return restrict_interior(cx, gaussian_vector(cx.grid.nodes, rng));
}

FieldState standing_wave(const DeRhamComplex &cx)
{
  const auto &g = cx.grid;
  FieldState z = FieldState::zero(g);
  for (Eigen::Index e = 0; e < g.edges_per_axis; ++e)
  {
    const Point x = g.edge_midpoint(e);
    z.e[e] = std::sin(pi * x[1] / g.length) * std::sin(pi * x[2] / g.length);
  }
  z.e = apply_pec(cx, z.e);
  return z;
}

FieldState centered_bump(const DeRhamComplex &cx, const MaterialAssembly &as, double width)
{
  const auto &g = cx.grid;
  const Point c{0.5 * g.length, 0.5 * g.length, 0.5 * g.length};
  Vec gf(g.num_faces());
  for (Eigen::Index f = 0; f < g.num_faces(); ++f)
    gf[f] = gauss(g.face_center(f), c, width) * (1.0 + 0.5 * g.face_coord(f).axis);
  Vec ae(g.num_edges());
  for (Eigen::Index e = 0; e < g.num_edges(); ++e)
    ae[e] = gauss(g.edge_midpoint(e), c, width) * (1.5 - 0.5 * g.edge_coord(e).axis);
  FieldState z;
  Vec r = cx.curl_t(gf);
  apply_mask(cx.pec_edge_mask, r);
  z.e = as.eps_inverse.apply(r);
  z.b = cx.curl(apply_pec(cx, ae));
  return normalized(as, z);
}

FieldState gradient_state(const DeRhamComplex &cx, const Vec &p)
{
  FieldState z = FieldState::zero(cx.grid);
  z.e = apply_pec(cx, cx.grad(restrict_interior(cx, p)));
  return z;
}

} // namespace maxdamp
