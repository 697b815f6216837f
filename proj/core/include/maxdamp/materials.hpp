#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maxdamp/linalg.hpp"
#include "maxdamp/mesh.hpp"

namespace maxdamp
{

enum class PresetKind
{
  constant,
  radial_growth,
  radial_decay,
  diag_aniso,
  rotated_aniso,
};

PresetKind parse_preset_kind(const std::string &name);
std::string to_string(PresetKind kind);

/// Closed-form material tensor field.
///
///   constant       [c]                  c I
///   radial_growth  [c, alpha]           c (1 + alpha r^2) I
///   radial_decay   [c, beta]            c exp(-beta r^2) I
///   diag_aniso     [d1, d2, d3]         diag(d1, d2, d3)
///   rotated_aniso  [deg, d1, d2, d3]    R_z(deg) diag(d1, d2, d3) R_z(deg)^T
///
/// with r = |x - x0|. Missing trailing parameters take the defaults
/// c = 1, alpha = 1, beta = 4, deg = 45, d = (1, 4, 1).
class MaterialPreset
{
public:
  MaterialPreset() = default;
  MaterialPreset(PresetKind kind, std::vector<double> params);

  static MaterialPreset identity() { return MaterialPreset(PresetKind::constant, {1.0}); }

  PresetKind kind() const noexcept { return kind_; }
  const std::vector<double> &params() const noexcept { return params_; }

  Eigen::Matrix3d eval(const Point &x, const Point &x0) const;
  /// (m . grad) of the tensor with m = x - x0, evaluated analytically.
  Eigen::Matrix3d radial_derivative(const Point &x, const Point &x0) const;
  /// Constant tensors give constant-coefficient mass matrices.
  bool is_uniform() const noexcept;
  bool is_diagonal() const noexcept;

private:
  PresetKind kind_ = PresetKind::constant;
  std::vector<double> params_{1.0};
};

enum class SigmaProfile
{
  indicator,
  smoothstep,
};

SigmaProfile parse_sigma_profile(const std::string &name);
std::string to_string(SigmaProfile profile);

struct SigmaSpec
{
  double sigma0 = 0.0;
  double a = 0.25;
  SigmaProfile profile = SigmaProfile::indicator;
};

struct MaterialSpec
{
  MaterialPreset epsilon = MaterialPreset::identity();
  MaterialPreset mu = MaterialPreset::identity();
  Point x0{0.5, 0.5, 0.5};
  SigmaSpec sigma;
};

/// Collar N_a classification. An element belongs to the collar iff its
/// closest point lies at sup-norm distance < a from the box boundary.
struct CollarMasks
{
  Mask edges;
  Mask cells;
  Mask upsilon_cells; // cells outside the collar
  Mask nodes;         // nodes incident to a collar edge
  Mask free_nodes;    // interior nodes with no incident collar edge
};

CollarMasks collar_mask(const StaggeredGrid &grid, double a);

/// Sup-norm distance from the axis-aligned element [lo, hi] to the box boundary.
double boundary_distance(const StaggeredGrid &grid, const Point &lo, const Point &hi);

struct SpdReport
{
  double min_rayleigh = 0.0;
  double ritz_min = 0.0;
  double ritz_max = 0.0;
  bool pass = false;
};

/// 200 random Rayleigh quotients and the extreme Ritz values of 50 Lanczos steps.
SpdReport check_spd(const SpMat &M, std::uint64_t seed = 20240607);

/// Inverse of a mass matrix restricted to a retained index set. The masked
/// block is treated as identity so solutions vanish there.
class MassInverse
{
public:
  MassInverse() = default;
  MassInverse(const SpMat &M, const Mask &retain);

  Vec apply(const Vec &r) const;
  bool diagonal() const noexcept { return diagonal_; }

private:
  bool diagonal_ = true;
  Vec inv_diag_;
  Mask retain_;
  struct Factor;
  std::shared_ptr<const Factor> factor_;
};

struct MaterialAssembly
{
  MaterialSpec spec;
  SpMat M_eps;
  SpMat M_mu;
  SpMat M_sigma;

  Vec edge_weight; // quadrature weight h^3 * (1, 1/2, 1/4) by boundary multiplicity
  Vec face_weight; // h^3 * (1, 1/2)
  double curl_weight = 0.0; // h^3, quadrature weight of the curl coupling
  Vec sigma_profile; // per-edge profile value in [0, 1]

  Mask collar_edge_mask;
  Mask collar_cell_mask;
  Mask upsilon_cell_mask;
  Mask collar_node_mask;
  Mask free_node_mask;

  bool eps_diagonal = false;
  bool mu_diagonal = false;
  double eps_lower = 0.0; // certified lower bound on the spectrum of M_eps
  double mu_upper = 0.0;  // Gershgorin bound on the spectrum of M_mu
  double eps_min_value = 0.0; // min over sample points of lambda_min(eps)
  double mu_min_value = 0.0;

  SpdReport eps_spd;
  SpdReport mu_spd;

  MassInverse eps_inverse; // on PEC-retained edges
  MassInverse mu_inverse;  // on all faces

  bool damped() const { return spec.sigma.sigma0 > 0.0; }
};

/// Sample the tensors at cell centres and assemble the mass matrices.
/// Throws material if a tensor is not positive definite somewhere.
MaterialAssembly sample_materials(const DeRhamComplex &complex, const MaterialSpec &spec,
                                  bool verify_spd = true);

struct NonTrapReport
{
  double eta_eps = 0.0;
  double eta_mu = 0.0;
  Point worst_point_eps{};
  Point worst_point_mu{};
  Point worst_point{};
  bool pass = false;
};

NonTrapReport check_nontrapping(const MaterialSpec &spec, const StaggeredGrid &grid);

struct SigmaGapReport
{
  bool pass = false;
  bool undamped = false;
  std::vector<Eigen::Index> offending; // collar edges with weight below sigma0 * weight
};

SigmaGapReport check_sigma_gap(const MaterialAssembly &assembly, double sigma0);

} // namespace maxdamp
