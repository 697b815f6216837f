#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "maxdamp/lattice.hpp"
#include "maxdamp/linalg.hpp"
#include "maxdamp/materials.hpp"
#include "maxdamp/mesh.hpp"

namespace maxdamp
{

/// Electric edge vector e and magnetic face flux b = M_mu h.
struct FieldState
{
  Vec e;
  Vec b;
  double t = 0.0;

  static FieldState zero(const StaggeredGrid &grid);
};

/// h = M_mu^{-1} b.
Vec magnetic_field(const MaterialAssembly &assembly, const Vec &b);
/// b = M_mu h.
FieldState from_fields(const MaterialAssembly &assembly, const Vec &e, const Vec &h, double t = 0.0);

/// e.M_eps.e + b.M_mu^{-1}.b, no factor one half.
double energy(const MaterialAssembly &assembly, const Vec &e, const Vec &b);
double energy(const MaterialAssembly &assembly, const FieldState &z);

struct EnergyPair
{
  double energy = 0.0;
  double denergy = 0.0;
};

EnergyPair energies(const FieldState &state, const FieldState &derivative,
                    const MaterialAssembly &assembly);

/// X inner product of two states.
double state_inner(const MaterialAssembly &assembly, const FieldState &u, const FieldState &v);

/// Faraday coupling w C e with w the curl quadrature weight; db/dt = -faraday(e).
Vec faraday(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &e);
/// Ampere coupling P w C^T M_mu^{-1} b, the adjoint of `faraday` in the X pairing.
Vec ampere(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &b);

/// The semi-discrete generator: (M_eps^{-1} (ampere(b) - P M_sigma e + P f), -faraday(e)).
FieldState apply_generator(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                           const FieldState &z, const Vec *forcing = nullptr,
                           bool with_sigma = true);

/// Weak epsilon-divergence G^T P M_eps e at every node (zero on boundary nodes).
Vec charge(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &e);

enum class Scheme
{
  midpoint,
  leapfrog,
};

Scheme parse_scheme(const std::string &name);
std::string to_string(Scheme scheme);

/// Implicit midpoint rule. The update for the midpoint value solves
///   [(2/dt) M_eps + M_sigma + (dt/2) w^2 C^T M_mu^{-1} C] e_m = (2/dt) M_eps e_0 + w C^T h_0 + f
/// in correction form by preconditioned CG.
class MidpointStepper
{
public:
  MidpointStepper(const DeRhamComplex &complex, const MaterialAssembly &assembly, double dt,
                  const SolverOptions &opts = {}, bool with_sigma = true);

  double dt() const noexcept { return dt_; }
  bool damped() const noexcept { return with_sigma_; }

  /// Advance (e, b) in place; returns the midpoint electric field.
  Vec step(Vec &e, Vec &b, const Vec *forcing = nullptr, const FluxLattice *lattice = nullptr,
           CgResult *info = nullptr) const;

  /// Inverse step of the undamped scheme via time reversal.
  Vec step_backward(Vec &e, Vec &b, CgResult *info = nullptr) const;

  Vec apply_system(const Vec &x) const;

private:
  const DeRhamComplex *cx_;
  const MaterialAssembly *as_;
  double dt_;
  SolverOptions opts_;
  bool with_sigma_;
  bool assembled_ = false;
  SpMat system_;
  MassInverse precond_;
};

/// Velocity-Verlet form of the Yee scheme with trapezoidal conductivity.
class LeapfrogStepper
{
public:
  LeapfrogStepper(const DeRhamComplex &complex, const MaterialAssembly &assembly, double dt);

  static double cfl_limit(const DeRhamComplex &complex, const MaterialAssembly &assembly);

  /// Advance (e, b); returns (e_0 + e_1)/2 and stores b_{n+1/2} in `b_half`.
  Vec step(Vec &e, Vec &b, Vec &b_half, const FluxLattice *lattice = nullptr) const;

  /// b_{n+1/2} from the synchronous state.
  Vec half_flux(const Vec &e, const Vec &b, double sign) const;

private:
  const DeRhamComplex *cx_;
  const MaterialAssembly *as_;
  double dt_;
  Vec lhs_inv_;
  Vec rhs_diag_;
};

struct TimeSeries
{
  std::vector<double> t;
  std::vector<double> energy;
  std::vector<double> denergy;
  std::vector<double> dissipation_cum;
  std::vector<double> charge_upsilon;
  std::vector<double> charge_total;
  std::vector<double> split_residual;
  std::vector<double> staggered_energy;

  std::size_t size() const { return t.size(); }
};

/// Per-step diagnostics of one run.
struct RunDiagnostics
{
  int steps = 0;
  double dt = 0.0;
  Scheme scheme = Scheme::midpoint;
  double energy0 = 0.0;
  double denergy0 = 0.0;
  double energy_balance_max = 0.0;  // |E_n - E_{n+1} - 2dt(e_m.M_s.e_m - f.e_m)| / E(0)
  double denergy_balance_max = 0.0; // same for the derivative pair
  double energy_increase_max = 0.0; // max (E_{n+1} - E_n)/E(0), unforced runs
  double charge_law_max = 0.0;      // relative to the charge scale
  double charge_law_abs = 0.0;
  double charge_scale = 0.0;
  double dissipation_total = 0.0;
  double work_total = 0.0;
  bool magnetic_constraints_exact = true;
  double flux_quantum = 0.0;
  int cg_iterations_max = 0;
  long cg_iterations_total = 0;
  double cg_residual_max = 0.0;
  bool staggered_energy_strictly_decreasing = true;
};

struct StepView
{
  int step = 0;
  double t0 = 0.0;
  double dt = 0.0;
  const Vec *e0 = nullptr;
  const Vec *b0 = nullptr;
  const Vec *e1 = nullptr;
  const Vec *b1 = nullptr;
  const Vec *e_mid = nullptr;
  const Vec *forcing = nullptr;
};

struct SimulationOptions
{
  double dt = 0.0;
  double T = 0.0;
  Scheme scheme = Scheme::midpoint;
  int record_every = 1;
  SolverOptions solver;
  bool with_sigma = true;
  bool track_derivative = true;
  bool keep_states = false;
  bool flux_lattice = true;
  /// Edge-space right-hand side used on step n (midpoint time t_n + dt/2).
  std::function<Vec(int step, double t_mid)> forcing;
  std::function<void(const StepView &)> observer;
};

struct SimulationResult
{
  TimeSeries series;
  RunDiagnostics diagnostics;
  FieldState final_state;
  FieldState final_derivative;
  std::vector<FieldState> states; // recorded states when keep_states is set
};

/// Number of steps and the effective step: dt_eff = T / ceil(T / dt).
int step_count(double T, double dt);

SimulationResult simulate(const FieldState &initial, const DeRhamComplex &complex,
                          const MaterialAssembly &assembly, const SimulationOptions &options);

struct ChargeSeries
{
  std::vector<Vec> rho;       // G^T P M_eps e_n on interior nodes
  std::vector<Vec> predicted; // rho_0 - sum dt G^T P (M_sigma e_mid - f)
  double max_residual = 0.0;
  double scale = 0.0;
};

/// Charge law check from stored states and midpoint fields.
ChargeSeries charge_trace(const std::vector<Vec> &e_states, const std::vector<Vec> &e_mids,
                          const std::vector<Vec> &forcings, double dt,
                          const DeRhamComplex &complex, const MaterialAssembly &assembly);

} // namespace maxdamp
