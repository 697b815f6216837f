#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maxdamp/evolution.hpp"
#include "maxdamp/helmholtz.hpp"

namespace maxdamp
{

enum class ObservedQuantity
{
  field,      // V_h
  derivative, // d/dt V_h
};

ObservedQuantity parse_observed_quantity(const std::string &name);
std::string to_string(ObservedQuantity q);

/// Pack (e, b) into one vector [e; b] and back.
Vec pack(const FieldState &z);
FieldState unpack(const StaggeredGrid &grid, const Vec &x);

struct GramianOptions
{
  double T = 1.0;
  double dt = 0.0; // 0 selects h/2
  double a = 0.25; // observation collar width
  ObservedQuantity quantity = ObservedQuantity::field;
  SolverOptions solver;
};

/// Observability Gramian of the sigma-free system on X_h,
///   Lambda z = sum_k dt S_{k+1/2}^* chi* chi S_{k+1/2} z,
/// with S_{k+1/2} the midpoint state of step k and chi the restriction of
/// the electric component to the collar edges.
class Gramian
{
public:
  Gramian(const DeRhamComplex &complex, const MaterialAssembly &assembly, const GramianOptions &opts);

  FieldState apply(const FieldState &z) const;
  /// int_0^T of the observed collar energy, computed by forward simulation only.
  double observed_energy(const FieldState &z) const;
  /// X inner product.
  double inner(const FieldState &u, const FieldState &v) const;

  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double T() const noexcept { return opts_.T; }
  const Mask &collar_edges() const noexcept { return collar_; }
  /// Largest generalized eigenvalue of (K, M_eps) on diagonal masses; a
  /// bound for the observation density.
  double density_bound() const noexcept { return density_bound_; }

private:
  FieldState observe(const FieldState &z) const; // (M_eps^{-1} K e, 0)
  void check_charge_free(const FieldState &z) const;

  const DeRhamComplex *cx_;
  const MaterialAssembly *as_;
  GramianOptions opts_;
  int steps_ = 0;
  double dt_ = 0.0;
  Mask collar_;
  Vec weight_; // K diagonal: geometric weight on collar edges
  double density_bound_ = 0.0;
  MidpointStepper stepper_;
};

struct ObserveOptions
{
  GramianOptions gramian;
  int iterations = 60; // Lanczos steps
  std::uint64_t seed = 1;
};

struct ObservabilityReport
{
  double T = 0.0;
  double a = 0.0;
  ObservedQuantity quantity = ObservedQuantity::field;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double ritz_residual = 0.0;
  double c_obs = 0.0; // infinity when not observable
  double floor = 0.0; // 1 / (T * density bound), a lower bound for c_obs
  bool observable = false;
  std::string status;
  int iterations = 0;
  int steps = 0;
  FieldState worst; // Ritz vector of lambda_min, unit X norm
};

/// Smallest eigenvalue of the Gramian on X_h by Lanczos in the X inner
/// product; c_obs = 1 / lambda_min.
ObservabilityReport estimate_obs_constant(const DeRhamComplex &complex,
                                          const MaterialAssembly &assembly,
                                          const ObserveOptions &opts);

/// ||z||_X^2 / <Lambda z, z> for one datum.
double observation_quotient(const FieldState &z, const DeRhamComplex &complex,
                            const MaterialAssembly &assembly, const GramianOptions &opts);

struct ControlOptions
{
  double T = 6.0;
  double dt = 0.0; // 0 selects h/2
  double a = 0.25;
  double tol = 1e-6;
  int max_iter = 2000;
  SolverOptions solver;
};

struct ControlSolve
{
  std::vector<Vec> J; // per step, constant on [t_k, t_k + dt]
  FieldState target;
  FieldState achieved;
  double miss = 0.0;            // ||achieved - target||_X / ||target||_X
  double divergence_max = 0.0;  // max_k |G^T P M_eps J_k| relative to inv_h max |M_eps J_k|
  double support_leak = 0.0;    // max |J_k| off the collar (exactly zero)
  double control_norm = 0.0;    // (sum dt J.M_eps.J)^(1/2)
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double condition_estimate = 0.0;
  double dt = 0.0;
  int steps = 0;
};

/// Edge forcing of the controlled system for a control value: -M_eps J.
Vec control_forcing(const MaterialAssembly &assembly, const Vec &J);

/// HUM control steering `initial` to `target` at time T with currents
/// supported on the collar and weakly eps-divergence free. Requires diagonal
/// M_eps. Throws ControlInfeasibleError when the Gramian solve fails.
ControlSolve hum_control(const FieldState &initial, const FieldState &target,
                         const DeRhamComplex &complex, const MaterialAssembly &assembly,
                         const ControlOptions &opts);

} // namespace maxdamp
