#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "maxdamp/evolution.hpp"

namespace maxdamp
{

using Matrix = Eigen::MatrixXd;

/// Dense generator on the retained state space [e on PEC-retained edges; b].
/// `A` acts on state coordinates; `Ahat = L^T A L^{-T}` acts on coordinates
/// orthonormal for the X inner product (M = L L^T = diag(M_eps, M_mu^{-1})).
struct DenseSystem
{
  Matrix A;
  Matrix Ahat;
  Matrix L;
  std::vector<Eigen::Index> edges; // retained edge ids
  Eigen::Index num_faces = 0;

  Eigen::Index dim() const { return A.rows(); }
  Vec pack(const FieldState &z) const;
  FieldState unpack(const Vec &x, const StaggeredGrid &grid) const;
};

/// Refuses (budget error) when the state dimension exceeds `max_dofs`.
DenseSystem assemble_dense(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                           bool with_sigma = true, Eigen::Index max_dofs = 1500);

/// Eigenvalues by Householder reduction to Hessenberg form and the Francis
/// double-shift QR iteration.
std::vector<std::complex<double>> eigenvalues(const Matrix &A);

/// Numerical rank from Householder QR with column pivoting; a pivot counts
/// when it exceeds rtol times the first one.
Eigen::Index numerical_rank(const Matrix &A, double rtol = 1e-10);

/// Matrix exponential by scaling and squaring with the degree 13 Pade approximant.
Matrix expm(const Matrix &A);

struct DenseSpectrum
{
  std::vector<std::complex<double>> eigenvalues;
  Eigen::Index dim = 0;
  Eigen::Index kernel_dimension = 0;
  double abscissa = 0.0;        // max Re over eigenvalues off the kernel
  double max_abs_real = 0.0;    // max |Re| over all eigenvalues
  double smallest_nonzero = 0.0; // min |lambda| off the kernel
};

DenseSpectrum dense_spectrum(const DenseSystem &system, double rank_tol = 1e-10);

struct OracleComparison
{
  std::vector<double> dts;
  std::vector<double> errors; // max_n ||x_n - exp(t_n A) x_0||_X / ||x_0||_X
  std::vector<double> slopes; // log2 of successive error ratios
  double cayley_defect = 0.0; // max per-step deviation from the Cayley transform, relative
};

/// Midpoint trajectories on [0, T] against the matrix exponential. `dts` are
/// expected to halve successively.
OracleComparison compare_midpoint(const FieldState &initial, const DeRhamComplex &complex,
                                  const MaterialAssembly &assembly, double T,
                                  const std::vector<double> &dts, const SolverOptions &opts = {1e-14, 10000});

} // namespace maxdamp
