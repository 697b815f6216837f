#include "maxdamp/mesh.hpp"

#include <string>
#include <vector>

namespace maxdamp
{

namespace
{

Eigen::Index lin(const std::array<int, 3> &ext, int i, int j, int k)
{
  return static_cast<Eigen::Index>(i) +
         static_cast<Eigen::Index>(ext[0]) *
             (static_cast<Eigen::Index>(j) + static_cast<Eigen::Index>(ext[1]) * k);
}

DofCoord unlin(const std::array<int, 3> &ext, Eigen::Index local, int axis)
{
  DofCoord c;
  c.axis = axis;
  c.i = static_cast<int>(local % ext[0]);
  local /= ext[0];
  c.j = static_cast<int>(local % ext[1]);
  c.k = static_cast<int>(local / ext[1]);
  return c;
}

void check_range(Eigen::Index idx, Eigen::Index size, const char *what)
{
  if (idx < 0 || idx >= size)
    throw Error(ErrorKind::range, std::string(what) + " index " + std::to_string(idx) +
                                      " out of range");
}

} // namespace

std::array<int, 3> StaggeredGrid::edge_extent(int axis) const
{
  std::array<int, 3> ext{n + 1, n + 1, n + 1};
  ext[static_cast<std::size_t>(axis)] = n;
  return ext;
}

std::array<int, 3> StaggeredGrid::face_extent(int axis) const
{
  std::array<int, 3> ext{n, n, n};
  ext[static_cast<std::size_t>(axis)] = n + 1;
  return ext;
}

Eigen::Index StaggeredGrid::node_index(int i, int j, int k) const
{
  return lin({n + 1, n + 1, n + 1}, i, j, k);
}

Eigen::Index StaggeredGrid::edge_index(int axis, int i, int j, int k) const
{
  return axis * edges_per_axis + lin(edge_extent(axis), i, j, k);
}

Eigen::Index StaggeredGrid::face_index(int axis, int i, int j, int k) const
{
  return axis * faces_per_axis + lin(face_extent(axis), i, j, k);
}

Eigen::Index StaggeredGrid::cell_index(int i, int j, int k) const { return lin({n, n, n}, i, j, k); }

DofCoord StaggeredGrid::node_coord(Eigen::Index idx) const
{
  check_range(idx, nodes, "node");
  return unlin({n + 1, n + 1, n + 1}, idx, 0);
}

DofCoord StaggeredGrid::edge_coord(Eigen::Index idx) const
{
  check_range(idx, num_edges(), "edge");
  const int axis = static_cast<int>(idx / edges_per_axis);
  return unlin(edge_extent(axis), idx % edges_per_axis, axis);
}

DofCoord StaggeredGrid::face_coord(Eigen::Index idx) const
{
  check_range(idx, num_faces(), "face");
  const int axis = static_cast<int>(idx / faces_per_axis);
  return unlin(face_extent(axis), idx % faces_per_axis, axis);
}

DofCoord StaggeredGrid::cell_coord(Eigen::Index idx) const
{
  check_range(idx, cells, "cell");
  return unlin({n, n, n}, idx, 0);
}

Point StaggeredGrid::node_position(Eigen::Index idx) const
{
  const auto c = node_coord(idx);
  return {c.i * h, c.j * h, c.k * h};
}

Point StaggeredGrid::edge_midpoint(Eigen::Index idx) const
{
  const auto c = edge_coord(idx);
  Point p{c.i * h, c.j * h, c.k * h};
  p[static_cast<std::size_t>(c.axis)] += 0.5 * h;
  return p;
}

Point StaggeredGrid::face_center(Eigen::Index idx) const
{
  const auto c = face_coord(idx);
  Point p{(c.i + 0.5) * h, (c.j + 0.5) * h, (c.k + 0.5) * h};
  p[static_cast<std::size_t>(c.axis)] -= 0.5 * h;
  return p;
}

Point StaggeredGrid::cell_center(Eigen::Index idx) const
{
  const auto c = cell_coord(idx);
  return {(c.i + 0.5) * h, (c.j + 0.5) * h, (c.k + 0.5) * h};
}

StaggeredGrid build_grid(int n, double length)
{
  if (n < 2)
    throw Error(ErrorKind::invalid_parameter, "grid.n must be at least 2 (got " + std::to_string(n) + ")");
  if (!(length > 0.0) || !std::isfinite(length))
    throw Error(ErrorKind::invalid_parameter, "grid.length must be positive");
  StaggeredGrid g;
  g.n = n;
  g.length = length;
  g.h = length / n;
  const Eigen::Index m = n, m1 = n + 1;
  g.nodes = m1 * m1 * m1;
  g.edges_per_axis = m * m1 * m1;
  g.faces_per_axis = m * m * m1;
  g.cells = m * m * m;
  return g;
}

DeRhamComplex assemble_complex(const StaggeredGrid &grid)
{
  using Triplet = Eigen::Triplet<double, int>;
  DeRhamComplex cx;
  cx.grid = grid;
  cx.inv_h = 1.0 / grid.h;
  const int n = grid.n;

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(2 * grid.num_edges()));
  for (int a = 0; a < 3; ++a)
  {
    const auto ext = grid.edge_extent(a);
    for (int k = 0; k < ext[2]; ++k)
      for (int j = 0; j < ext[1]; ++j)
        for (int i = 0; i < ext[0]; ++i)
        {
          std::array<int, 3> head{i, j, k};
          head[static_cast<std::size_t>(a)] += 1;
          const auto row = static_cast<int>(grid.edge_index(a, i, j, k));
          trip.emplace_back(row, static_cast<int>(grid.node_index(i, j, k)), -1.0);
          trip.emplace_back(row, static_cast<int>(grid.node_index(head[0], head[1], head[2])), 1.0);
        }
  }
  cx.G_inc.resize(grid.num_edges(), grid.nodes);
  cx.G_inc.setFromTriplets(trip.begin(), trip.end());

  // (curl E)_a = d_b E_c - d_c E_b with (a, b, c) cyclic.
  trip.clear();
  for (int a = 0; a < 3; ++a)
  {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const auto ext = grid.face_extent(a);
    for (int k = 0; k < ext[2]; ++k)
      for (int j = 0; j < ext[1]; ++j)
        for (int i = 0; i < ext[0]; ++i)
        {
          const auto row = static_cast<int>(grid.face_index(a, i, j, k));
          const std::array<int, 3> base{i, j, k};
          auto shifted = [&](int dir) {
            auto p = base;
            p[static_cast<std::size_t>(dir)] += 1;
            return p;
          };
          const auto pb = shifted(b), pc = shifted(c);
          trip.emplace_back(row, static_cast<int>(grid.edge_index(c, pb[0], pb[1], pb[2])), 1.0);
          trip.emplace_back(row, static_cast<int>(grid.edge_index(c, i, j, k)), -1.0);
          trip.emplace_back(row, static_cast<int>(grid.edge_index(b, pc[0], pc[1], pc[2])), -1.0);
          trip.emplace_back(row, static_cast<int>(grid.edge_index(b, i, j, k)), 1.0);
        }
  }
  cx.C_inc.resize(grid.num_faces(), grid.num_edges());
  cx.C_inc.setFromTriplets(trip.begin(), trip.end());

  trip.clear();
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
      {
        const auto row = static_cast<int>(grid.cell_index(i, j, k));
        for (int a = 0; a < 3; ++a)
        {
          std::array<int, 3> up{i, j, k};
          up[static_cast<std::size_t>(a)] += 1;
          trip.emplace_back(row, static_cast<int>(grid.face_index(a, up[0], up[1], up[2])), 1.0);
          trip.emplace_back(row, static_cast<int>(grid.face_index(a, i, j, k)), -1.0);
        }
      }
  cx.D_inc.resize(grid.cells, grid.num_faces());
  cx.D_inc.setFromTriplets(trip.begin(), trip.end());

  cx.pec_edge_mask.assign(static_cast<std::size_t>(grid.num_edges()), 1);
  for (Eigen::Index e = 0; e < grid.num_edges(); ++e)
  {
    const auto c = grid.edge_coord(e);
    const std::array<int, 3> idx{c.i, c.j, c.k};
    for (int d = 0; d < 3; ++d)
      if (d != c.axis && (idx[static_cast<std::size_t>(d)] == 0 || idx[static_cast<std::size_t>(d)] == n))
        cx.pec_edge_mask[static_cast<std::size_t>(e)] = 0;
  }
  cx.boundary_face_mask.assign(static_cast<std::size_t>(grid.num_faces()), 0);
  for (Eigen::Index f = 0; f < grid.num_faces(); ++f)
  {
    const auto c = grid.face_coord(f);
    const std::array<int, 3> idx{c.i, c.j, c.k};
    const int along = idx[static_cast<std::size_t>(c.axis)];
    if (along == 0 || along == n)
      cx.boundary_face_mask[static_cast<std::size_t>(f)] = 1;
  }
  cx.interior_node_mask.assign(static_cast<std::size_t>(grid.nodes), 0);
  for (Eigen::Index v = 0; v < grid.nodes; ++v)
  {
    const auto c = grid.node_coord(v);
    const bool inside = c.i > 0 && c.i < n && c.j > 0 && c.j < n && c.k > 0 && c.k < n;
    cx.interior_node_mask[static_cast<std::size_t>(v)] = inside ? 1 : 0;
  }
  return cx;
}

Vec DeRhamComplex::grad(const Vec &p) const { return inv_h * (G_inc * p); }
Vec DeRhamComplex::grad_t(const Vec &e) const { return inv_h * (G_inc.transpose() * e); }
Vec DeRhamComplex::curl(const Vec &e) const { return inv_h * (C_inc * e); }
Vec DeRhamComplex::curl_t(const Vec &b) const { return inv_h * (C_inc.transpose() * b); }
Vec DeRhamComplex::div(const Vec &b) const { return inv_h * (D_inc * b); }
Vec DeRhamComplex::div_t(const Vec &c) const { return inv_h * (D_inc.transpose() * c); }

SpMat DeRhamComplex::curl_grad() const
{
  SpMat P = C_inc * G_inc;
  P.prune(0.0, 0.0);
  return P;
}

SpMat DeRhamComplex::div_curl() const
{
  SpMat P = D_inc * C_inc;
  P.prune(0.0, 0.0);
  return P;
}

Vec apply_pec(const DeRhamComplex &complex, const Vec &e)
{
  if (e.size() != complex.grid.num_edges())
    throw Error(ErrorKind::shape, "edge vector has length " + std::to_string(e.size()) +
                                      ", expected " + std::to_string(complex.grid.num_edges()));
  return masked(complex.pec_edge_mask, e);
}

Vec restrict_interior(const DeRhamComplex &complex, const Vec &p)
{
  if (p.size() != complex.grid.nodes)
    throw Error(ErrorKind::shape, "node vector has wrong length");
  return masked(complex.interior_node_mask, p);
}

} // namespace maxdamp
