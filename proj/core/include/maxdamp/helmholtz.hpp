#pragma once

#include <vector>

#include "maxdamp/evolution.hpp"

namespace maxdamp
{

/// Discrete Helmholtz split e = v + G p of an edge field.
///
/// The field and the gradient are stored on a common dyadic lattice so that
/// `curl(v) == curl(field)` holds bitwise; `field` equals `e` up to one
/// lattice quantum per entry.
struct PotentialSolve
{
  Vec p;        // node potential, zero on boundary nodes
  Vec gradient; // G p
  Vec field;    // e on the lattice
  Vec v;        // field - gradient, weakly eps-divergence free
  double quantum = 0.0;
  double residual = 0.0; // relative CG residual of the potential equation
  int iterations = 0;
};

/// (G^T P M_eps G) applied to a node vector; boundary rows are identity.
Vec potential_operator(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &p);

/// Solve (G^T P M_eps G) p = G^T P M_eps e on interior nodes.
PotentialSolve solve_p(const Vec &e, const DeRhamComplex &complex,
                       const MaterialAssembly &assembly, const SolverOptions &opts = {});

/// Solve (G^T P M_eps G) pdot = -G^T P M_sigma e. Applied to the time
/// derivative of e it yields the second derivative of p.
Vec solve_p_dot(const Vec &e, const DeRhamComplex &complex, const MaterialAssembly &assembly,
                const SolverOptions &opts = {}, CgResult *info = nullptr);

/// Flux split b = free + kernel. `kernel` = M_mu Z c with Z = [D^T | boundary
/// unit vectors] is the M_mu^{-1}-orthogonal projection onto stationary
/// magnetic states; `free` is divergence free with zero boundary flux.
struct FluxSplit
{
  Vec free;
  Vec kernel;
  Vec cells;    // coefficients on cells
  Vec boundary; // coefficients on boundary faces (zero elsewhere)
  double residual = 0.0;
  int iterations = 0;
};

FluxSplit split_flux(const Vec &b, const DeRhamComplex &complex, const MaterialAssembly &assembly,
                     const SolverOptions &opts = {});

/// Orthogonal projection of a state onto the charge-free subspace X_h:
/// (e - G p, free part of b).
FieldState project_charge_free(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                               const FieldState &z, const SolverOptions &opts = {});

/// sqrt(sum_k (M_sigma e)_k^2 / w_k): the discrete L2 norm of sigma e.
double sigma_field_norm(const MaterialAssembly &assembly, const Vec &e);

struct PdotBound
{
  double constant = 0.0; // max ||G pdot||_eps / ||sigma e||
  int samples = 0;
};

/// Largest observed ratio ||G pdot||_eps / ||sigma e|| over random fields.
PdotBound estimate_pdot_constant(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                                 int samples, std::uint64_t seed, const SolverOptions &opts = {});

struct Wi0Solve
{
  Vec b;      // face flux M_mu W_i0
  Vec h;      // W_i0
  Vec rhs;    // P (M_sigma e0 + M_eps G pdot(0))
  double compatibility = 0.0; // |G^T rhs| / |rhs|
  double residual = 0.0;      // |ampere(b) - rhs| / |rhs|
  double kernel_defect = 0.0; // |D b| / |b|, orthogonality to the kernel of C^T
  int iterations = 0;
};

/// Minimal M_mu-norm solution of P w C^T W = M_sigma e0 + M_eps G pdot(0).
/// Throws consistency when the right side is not weakly divergence free.
Wi0Solve build_Wi0(const Vec &e0, const DeRhamComplex &complex, const MaterialAssembly &assembly,
                   const SolverOptions &opts = {});

/// Edge forcing of the inhomogeneous system at the electric field e.
Vec inhomogeneous_forcing(const Vec &e, const DeRhamComplex &complex,
                          const MaterialAssembly &assembly, const SolverOptions &opts = {});

struct SplitOptions
{
  double dt = 0.0;
  double T = 0.0;
  SolverOptions solver;
};

/// All three trajectories on one time grid plus the reconstruction check.
struct SplitTrajectory
{
  std::vector<FieldState> full;
  std::vector<FieldState> homogeneous;
  std::vector<FieldState> inhomogeneous;
  std::vector<Vec> p;
  std::vector<Vec> p_dot; // at the midpoint times
  std::vector<double> residual; // ||V_h + V_i + G p - e|| + ||W_h + W_i - h||, relative
  double residual_max = 0.0;

  double initial_derivative = 0.0; // ||dt V_i(0)|| + ||dt W_i(0)||, relative to ||M_eps^{-1} rhs||
  double homogeneous_drift = 0.0;  // derivative-energy drift of the homogeneous system
  double homogeneous_charge = 0.0; // max |G^T P M_eps V_h| relative to the charge scale
  double duhamel_lhs = 0.0;        // int ||dt V_i||^2 + ||dt W_i||^2
  double duhamel_rhs = 0.0;        // int ||sigma dt e||^2
  double dt = 0.0;
  RunDiagnostics full_diagnostics;
  Wi0Solve wi0;
  PotentialSolve p0;
};

/// Run the full damped system and both subsystems from (e0, b0).
SplitTrajectory split_run(const FieldState &initial, const DeRhamComplex &complex,
                          const MaterialAssembly &assembly, const SplitOptions &options);

/// sigma-free evolution of (V_h0, W_h0); throws consistency if the data carry charge.
SimulationResult evolve_homogeneous(const FieldState &initial, const DeRhamComplex &complex,
                                    const MaterialAssembly &assembly, const SimulationOptions &opts);

/// sigma-free evolution from (0, W_i0) driven by the supplied per-step forcing.
/// Throws interface when the forcing list does not match the time grid.
SimulationResult evolve_inhomogeneous(const Vec &b_wi0, const std::vector<Vec> &forcing,
                                      const DeRhamComplex &complex,
                                      const MaterialAssembly &assembly,
                                      const SimulationOptions &opts);

/// Residual series of V_h + V_i + G p against the full trajectory.
std::vector<double> verify_splitting(const std::vector<FieldState> &full,
                                     const std::vector<FieldState> &homogeneous,
                                     const std::vector<FieldState> &inhomogeneous,
                                     const std::vector<Vec> &gradients,
                                     const MaterialAssembly &assembly);

struct DuhamelReport
{
  std::vector<double> horizons;
  std::vector<double> constants; // per horizon, max over samples of lhs / (T^2 rhs)
  double spread = 0.0;           // max / min of the constants
};

DuhamelReport estimate_duhamel_constant(const DeRhamComplex &complex,
                                        const MaterialAssembly &assembly,
                                        const std::vector<double> &horizons, double dt,
                                        int samples, std::uint64_t seed,
                                        const SolverOptions &opts = {});

} // namespace maxdamp
