#pragma once

#include <array>
#include <cstddef>

#include "maxdamp/linalg.hpp"

namespace maxdamp
{

using Point = std::array<double, 3>;

/// Lattice coordinates of a degree of freedom. `axis` is the edge direction
/// for edges and the normal direction for faces; it is 0 for nodes and cells.
struct DofCoord
{
  int axis = 0;
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Uniform staggered grid on [0, length]^3 with n cells per axis.
/// Flat ordering is axis-major, then k, j, i with i fastest.
struct StaggeredGrid
{
  int n = 0;
  double length = 1.0;
  double h = 0.0;

  Eigen::Index nodes = 0;
  Eigen::Index edges_per_axis = 0;
  Eigen::Index faces_per_axis = 0;
  Eigen::Index cells = 0;

  Eigen::Index num_edges() const { return 3 * edges_per_axis; }
  Eigen::Index num_faces() const { return 3 * faces_per_axis; }

  Eigen::Index node_index(int i, int j, int k) const;
  Eigen::Index edge_index(int axis, int i, int j, int k) const;
  Eigen::Index face_index(int axis, int i, int j, int k) const;
  Eigen::Index cell_index(int i, int j, int k) const;

  DofCoord node_coord(Eigen::Index idx) const;
  DofCoord edge_coord(Eigen::Index idx) const;
  DofCoord face_coord(Eigen::Index idx) const;
  DofCoord cell_coord(Eigen::Index idx) const;

  Point node_position(Eigen::Index idx) const;
  Point edge_midpoint(Eigen::Index idx) const;
  Point face_center(Eigen::Index idx) const;
  Point cell_center(Eigen::Index idx) const;

  /// Extents of the (axis)-oriented edge or face lattice along x, y, z.
  std::array<int, 3> edge_extent(int axis) const;
  std::array<int, 3> face_extent(int axis) const;
};

/// Throws invalid_parameter for n < 2 or length <= 0.
StaggeredGrid build_grid(int n, double length = 1.0);

/// Incidence matrices with entries in {-1, 0, 1}; the metric factor 1/h is
/// applied separately so that compositions are integer products.
struct DeRhamComplex
{
  StaggeredGrid grid;
  SpMat G_inc; // nodes -> edges
  SpMat C_inc; // edges -> faces
  SpMat D_inc; // faces -> cells
  double inv_h = 0.0;

  Mask pec_edge_mask;      // 1 = retained (not tangential to the boundary)
  Mask boundary_face_mask; // 1 = face lies in the boundary
  Mask interior_node_mask; // 1 = node not on the boundary

  Vec grad(const Vec &p) const;
  Vec grad_t(const Vec &e) const;
  Vec curl(const Vec &e) const;
  Vec curl_t(const Vec &b) const;
  Vec div(const Vec &b) const;
  Vec div_t(const Vec &c) const;

  /// Integer products C_inc*G_inc and D_inc*C_inc; both are structurally
  /// empty after pruning exact zeros.
  SpMat curl_grad() const;
  SpMat div_curl() const;
};

DeRhamComplex assemble_complex(const StaggeredGrid &grid);

/// Zero the tangential boundary edges. Throws shape on size mismatch.
Vec apply_pec(const DeRhamComplex &complex, const Vec &e);

/// Node vector with boundary entries forced to zero.
Vec restrict_interior(const DeRhamComplex &complex, const Vec &p);

} // namespace maxdamp
