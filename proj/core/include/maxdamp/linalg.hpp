#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "maxdamp/errors.hpp"

namespace maxdamp
{

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Mask = std::vector<std::uint8_t>;

struct SolverOptions
{
  double tol = 1e-12;
  int max_iter = 10000;
};

/// Neumaier-compensated running sum.
class KahanSum
{
public:
  void add(double x) noexcept
  {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double euclidean_dot(const Vec &a, const Vec &b) { return a.dot(b); }

/// x := x with entries where mask == 0 set to zero.
void apply_mask(const Mask &mask, Vec &x);
Vec masked(const Mask &mask, const Vec &x);
std::size_t count(const Mask &mask);

/// Quadratic form x^T A y for symmetric sparse A.
double form(const SpMat &A, const Vec &x, const Vec &y);

bool is_diagonal(const SpMat &A);
Vec diagonal_of(const SpMat &A);

/// Largest absolute row sum; an upper bound for the spectral radius.
double gershgorin_bound(const SpMat &A);

/// max |A_ij - A_ji|, zero for bitwise-symmetric storage.
double asymmetry(const SpMat &A);

struct CgResult
{
  int iterations = 0;
  double residual = 0.0; // relative, in the norm induced by the inner product
  bool converged = false;
  // CG step coefficients; they define the Lanczos tridiagonal of the
  // (preconditioned) operator and give a cheap spectrum estimate.
  std::vector<double> alphas;
  std::vector<double> betas;
};

/// Extreme eigenvalue estimates of the operator seen by a CG run.
struct SpectrumEstimate
{
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double condition() const
  {
    return lambda_min > 0.0 ? lambda_max / lambda_min : std::numeric_limits<double>::infinity();
  }
};

SpectrumEstimate spectrum_from_cg(const CgResult &result);

/// Conjugate gradients for an operator that is self-adjoint and positive
/// (semi)definite in `inner`. Starts from the content of `x`. Throws
/// SolverError on non-convergence when `throw_on_failure` is set.
template <typename Apply, typename Inner = decltype(&euclidean_dot),
          typename Precond = std::nullptr_t>
CgResult conjugate_gradient(Apply &&apply, const Vec &b, Vec &x, const SolverOptions &opts,
                            Inner inner = &euclidean_dot, Precond precond = nullptr,
                            bool throw_on_failure = true, bool record = false)
{
  CgResult out;
  const double bnorm = std::sqrt(std::max(inner(b, b), 0.0));
  if (bnorm == 0.0)
  {
    x.setZero();
    out.converged = true;
    return out;
  }

  Vec r = b - apply(x);
  Vec z;
  if constexpr (std::is_same_v<Precond, std::nullptr_t>)
    z = r;
  else
    z = precond(r);
  Vec p = z;
  double rz = inner(r, z);
  double rnorm = std::sqrt(std::max(inner(r, r), 0.0));
  out.residual = rnorm / bnorm;

  for (int it = 0; it < opts.max_iter; ++it)
  {
    if (out.residual <= opts.tol)
    {
      out.converged = true;
      break;
    }
    const Vec Ap = apply(p);
    const double pAp = inner(p, Ap);
    if (!(pAp > 0.0))
      break; // breakdown: operator not positive on the Krylov space
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if constexpr (std::is_same_v<Precond, std::nullptr_t>)
      z = r;
    else
      z = precond(r);
    const double rz_new = inner(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    p = z + beta * p;
    rnorm = std::sqrt(std::max(inner(r, r), 0.0));
    out.residual = rnorm / bnorm;
    out.iterations = it + 1;
    if (record)
    {
      out.alphas.push_back(alpha);
      out.betas.push_back(beta);
    }
  }
  if (out.residual <= opts.tol)
    out.converged = true;

  if (!out.converged && throw_on_failure)
    throw SolverError("conjugate gradient did not converge: relative residual " +
                          std::to_string(out.residual) + " after " +
                          std::to_string(out.iterations) + " iterations",
                      out.residual, out.iterations);
  return out;
}

/// Jacobi preconditioner; entries with zero diagonal are passed through.
class JacobiPreconditioner
{
public:
  explicit JacobiPreconditioner(const Vec &diag);
  Vec operator()(const Vec &r) const { return inv_.cwiseProduct(r); }

private:
  Vec inv_;
};

struct LanczosResult
{
  std::vector<double> alphas; // tridiagonal diagonal
  std::vector<double> betas;  // tridiagonal off-diagonal (size = alphas.size() - 1)
  std::vector<Vec> basis;     // orthonormal Lanczos vectors (kept for Ritz vectors)
  double last_beta = 0.0;     // residual norm coefficient after the final step
  bool invariant = false;     // Krylov space became invariant (exact breakdown)
};

using LinearOperator = std::function<Vec(const Vec &)>;
using InnerProduct = std::function<double(const Vec &, const Vec &)>;

/// Symmetric Lanczos with full reorthogonalization in the given inner product.
/// `project` (optional) is applied to every new direction, e.g. to stay inside
/// a constrained subspace.
LanczosResult lanczos(const LinearOperator &apply, const Vec &start, int steps,
                      const InnerProduct &inner, const LinearOperator &project = {});

/// k-th smallest (0-based) eigenvalue of a symmetric tridiagonal matrix by
/// Sturm-sequence bisection.
double tridiagonal_eigenvalue(const std::vector<double> &diag, const std::vector<double> &off,
                              std::size_t k);

/// Unit eigenvector of the tridiagonal matrix for an (accurate) eigenvalue.
std::vector<double> tridiagonal_eigenvector(const std::vector<double> &diag,
                                            const std::vector<double> &off, double lambda);

struct RitzPair
{
  double value = 0.0;
  double residual = 0.0; // |beta_k * s_k|, the Lanczos residual bound
  Vec vector;
};

/// Smallest Ritz pair of a finished Lanczos run.
RitzPair smallest_ritz(const LanczosResult &run);
RitzPair largest_ritz(const LanczosResult &run);

} // namespace maxdamp
