#pragma once

#include <vector>

#include "maxdamp/evolution.hpp"
#include "maxdamp/helmholtz.hpp"

namespace maxdamp
{

/// Least-squares fit of log E(t) = c - 2 omega t over a window, plus the
/// smallest envelope M E(0) exp(-2 omega t) that dominates E on the window.
struct DecayFit
{
  double omega_fit = 0.0;
  double M_fit = 1.0;
  double intercept = 0.0; // of log E
  double t1 = 0.0;
  double t2 = 0.0;
  std::size_t points = 0;
  bool full_decay = false; // E hit zero inside the window
  bool dominated = false;  // envelope >= E on the window
};

/// Throws range when the window is not covered by the series.
DecayFit fit_decay(const std::vector<double> &t, const std::vector<double> &E, double t1, double t2);

struct DecayOptions
{
  double T = 40.0;
  double dt = 0.0; // 0 selects h/2
  double t1 = -1.0; // negative selects 0.25 T
  double t2 = -1.0; // negative selects 0.9 T
  std::vector<double> horizons; // contraction horizons, each <= T
  SolverOptions solver;
};

struct RatioED
{
  double ratio = 0.0; // max over recorded t of E(t) / D(t)
  bool finite = true;
  bool outside_X = false; // D vanished while E did not
};

struct DtHBound
{
  double lhs = 0.0;      // int ||dt h||_mu^2
  double dE = 0.0;       // int ||dt e||_eps^2
  double dissipation = 0.0; // int e.M_sigma.e
  double constant = 0.0; // lhs / ((1 + T) dE + dissipation)
  bool zero_data = false;
};

struct DecayReport
{
  DecayFit fit;
  std::vector<double> horizons;
  std::vector<double> gamma; // (E + D)(T) / (E + D)(0) per horizon
  double gamma_T = 0.0;      // at the final horizon
  RatioED ratio_ED;
  DtHBound dtH;
  SimulationResult run;
};

/// One damped midpoint run of length T with every decay measurement taken on it.
DecayReport analyze_decay(const FieldState &initial, const DeRhamComplex &complex,
                          const MaterialAssembly &assembly, const DecayOptions &opts);

RatioED check_E_dominated_by_D(const TimeSeries &series, double tol = 1e-12);

/// gamma_T for every horizon, read off one trajectory.
std::vector<double> check_contraction(const TimeSeries &series, const std::vector<double> &horizons);

/// Orthogonal X projection onto the kernel of the generator.
///   e-part: G phi with phi supported on the free nodes (zero on collar nodes)
///   b-part: M_mu Z c, the stationary magnetic fluxes
struct EquilibriumProjection
{
  FieldState projected;
  Vec phi;            // h-scaled node potential on the lattice; e-part = G_inc phi
  FluxSplit flux;
  double e_residual = 0.0; // CG residual of the constrained normal equations
  int e_iterations = 0;
  double curl_e_part = 0.0;   // max |C e-part|, exactly zero
  double collar_e_part = 0.0; // max |e-part| on collar edges, exactly zero
  double ampere_b_part = 0.0; // |ampere(b-part)| relative to |ampere| of its size
  std::size_t free_nodes = 0;
  std::size_t kernel_dimension = 0; // free nodes + cells + boundary faces - 1
};

EquilibriumProjection project_equilibrium(const FieldState &z, const DeRhamComplex &complex,
                                          const MaterialAssembly &assembly,
                                          const SolverOptions &opts = {});

/// Kernel dimension predicted by the constrained-gradient parametrization.
std::size_t predicted_kernel_dimension(const DeRhamComplex &complex, const MaterialAssembly &assembly);

struct ConvergenceReport
{
  std::vector<double> t;
  std::vector<double> gap; // ||z(t) - P z0||_X
  double data_norm = 0.0;
  double projected_norm = 0.0;
  DecayFit fit; // of gap^2
  double final_gap = 0.0;
  double envelope_final = 0.0; // sqrt(M') e^{-omega T} gap(0)
  bool converged = false;      // omega > 0 and final gap <= envelope
};

ConvergenceReport check_convergence_to_P(const FieldState &initial, const DeRhamComplex &complex,
                                         const MaterialAssembly &assembly, const DecayOptions &opts);

} // namespace maxdamp
