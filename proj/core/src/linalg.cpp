#include "maxdamp/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace maxdamp
{

void apply_mask(const Mask &mask, Vec &x)
{
  if (static_cast<std::size_t>(x.size()) != mask.size())
    throw Error(ErrorKind::shape, "mask length does not match vector length");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!mask[static_cast<std::size_t>(i)])
      x[i] = 0.0;
}

Vec masked(const Mask &mask, const Vec &x)
{
  Vec y = x;
  apply_mask(mask, y);
  return y;
}

std::size_t count(const Mask &mask)
{
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

double form(const SpMat &A, const Vec &x, const Vec &y) { return x.dot(A * y); }

bool is_diagonal(const SpMat &A)
{
  for (int r = 0; r < A.outerSize(); ++r)
    for (SpMat::InnerIterator it(A, r); it; ++it)
      if (it.col() != r && it.value() != 0.0)
        return false;
  return true;
}

Vec diagonal_of(const SpMat &A) { return A.diagonal(); }

double gershgorin_bound(const SpMat &A)
{
  double best = 0.0;
  for (int r = 0; r < A.outerSize(); ++r)
  {
    double s = 0.0;
    for (SpMat::InnerIterator it(A, r); it; ++it)
      s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

double asymmetry(const SpMat &A)
{
  const SpMat T = A.transpose();
  const SpMat D = A - T;
  double worst = 0.0;
  for (int r = 0; r < D.outerSize(); ++r)
    for (SpMat::InnerIterator it(D, r); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  return worst;
}

JacobiPreconditioner::JacobiPreconditioner(const Vec &diag) : inv_(diag.size())
{
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    inv_[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
}

SpectrumEstimate spectrum_from_cg(const CgResult &result)
{
  // Lanczos tridiagonal from the CG coefficients:
  //   T_jj = 1/alpha_j + beta_{j-1}/alpha_{j-1},  T_{j,j+1} = sqrt(beta_j)/alpha_j
  const std::size_t k = result.alphas.size();
  SpectrumEstimate est;
  if (k == 0)
    return est;
  std::vector<double> diag(k), off(k > 0 ? k - 1 : 0);
  for (std::size_t j = 0; j < k; ++j)
  {
    diag[j] = 1.0 / result.alphas[j];
    if (j > 0)
      diag[j] += result.betas[j - 1] / result.alphas[j - 1];
    if (j + 1 < k)
      off[j] = std::sqrt(std::max(result.betas[j], 0.0)) / result.alphas[j];
  }
  est.lambda_min = tridiagonal_eigenvalue(diag, off, 0);
  est.lambda_max = tridiagonal_eigenvalue(diag, off, k - 1);
  return est;
}

LanczosResult lanczos(const LinearOperator &apply, const Vec &start, int steps,
                      const InnerProduct &inner, const LinearOperator &project)
{
  LanczosResult out;
  Vec v = project ? project(start) : start;
  double nrm = std::sqrt(std::max(inner(v, v), 0.0));
  if (!(nrm > 0.0))
    throw Error(ErrorKind::invalid_parameter, "lanczos start vector is zero");
  v /= nrm;
  out.basis.push_back(v);

  double scale = 0.0;
  for (int j = 0; j < steps; ++j)
  {
    Vec w = apply(out.basis.back());
    if (project)
      w = project(w);
    const double a = inner(w, out.basis.back());
    out.alphas.push_back(a);
    scale = std::max(scale, std::abs(a));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec &q : out.basis)
        w -= inner(w, q) * q;
    // The remainder can be small next to the projection error of w.
    if (project)
    {
      w = project(w);
      for (const Vec &q : out.basis)
        w -= inner(w, q) * q;
    }
    const double b = std::sqrt(std::max(inner(w, w), 0.0));
    out.last_beta = b;
    if (b <= 1e-13 * std::max(scale, 1e-300) || j + 1 == steps)
    {
      out.invariant = b <= 1e-13 * std::max(scale, 1e-300);
      break;
    }
    out.betas.push_back(b);
    scale = std::max(scale, b);
    out.basis.push_back(w / b);
  }
  return out;
}

namespace
{

// Number of eigenvalues of the tridiagonal matrix strictly below x.
std::size_t sturm_count(const std::vector<double> &diag, const std::vector<double> &off, double x)
{
  std::size_t negatives = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i)
  {
    const double b2 = i > 0 ? off[i - 1] * off[i - 1] : 0.0;
    q = diag[i] - x - (i > 0 ? b2 / q : 0.0);
    if (q == 0.0)
      q = -1e-300;
    if (q < 0.0)
      ++negatives;
  }
  return negatives;
}

} // namespace

double tridiagonal_eigenvalue(const std::vector<double> &diag, const std::vector<double> &off,
                              std::size_t k)
{
  const std::size_t n = diag.size();
  if (k >= n)
    throw Error(ErrorKind::range, "tridiagonal eigenvalue index out of range");
  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < n; ++i)
  {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double span = std::max(hi - lo, 1e-300);
  lo -= 1e-12 * span;
  hi += 1e-12 * span;
  for (int it = 0; it < 200; ++it)
  {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    if (sturm_count(diag, off, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> tridiagonal_eigenvector(const std::vector<double> &diag,
                                            const std::vector<double> &off, double lambda)
{
  const std::size_t n = diag.size();
  if (n == 1)
    return {1.0};

  // LU with partial pivoting of T - shift*I; U has two superdiagonals.
  double scale = 0.0;
  for (double d : diag)
    scale = std::max(scale, std::abs(d));
  for (double o : off)
    scale = std::max(scale, std::abs(o));
  const double shift = lambda + 1e-14 * std::max(scale, 1e-300);

  std::vector<double> d(n), du(n - 1), dl(n - 1), du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<double> mult(n - 1, 0.0);
  std::vector<char> swapped(n - 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = diag[i] - shift;
  for (std::size_t i = 0; i + 1 < n; ++i)
    du[i] = dl[i] = off[i];

  for (std::size_t i = 0; i + 1 < n; ++i)
  {
    if (std::abs(d[i]) >= std::abs(dl[i]))
    {
      const double f = d[i] != 0.0 ? dl[i] / d[i] : 0.0;
      mult[i] = f;
      d[i + 1] -= f * du[i];
    }
    else
    {
      const double f = d[i] / dl[i];
      mult[i] = f;
      swapped[i] = 1;
      d[i] = dl[i];
      const double tmp = d[i + 1];
      d[i + 1] = du[i] - f * tmp;
      du[i] = tmp;
      if (i + 2 < n)
      {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du[i + 1];
      }
    }
  }
  const double tiny = 1e-300 + 1e-16 * std::max(scale, 1e-300);
  for (auto &x : d)
    if (std::abs(x) < tiny)
      x = x < 0.0 ? -tiny : tiny;

  std::vector<double> x(n, 1.0);
  for (int iter = 0; iter < 4; ++iter)
  {
    // Forward substitution with the row interchanges.
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
      if (swapped[i])
      {
        const double t = x[i];
        x[i] = x[i + 1];
        x[i + 1] = t - mult[i] * x[i];
      }
      else
        x[i + 1] -= mult[i] * x[i];
    }
    // Back substitution.
    for (std::size_t ii = n; ii-- > 0;)
    {
      double s = x[ii];
      if (ii + 1 < n)
        s -= du[ii] * x[ii + 1];
      if (ii + 2 < n)
        s -= du2[ii] * x[ii + 2];
      x[ii] = s / d[ii];
    }
    double nrm = 0.0;
    for (double v : x)
      nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double &v : x)
      v /= nrm;
  }
  return x;
}

namespace
{

RitzPair ritz(const LanczosResult &run, std::size_t index)
{
  RitzPair out;
  const std::size_t k = run.alphas.size();
  std::vector<double> off(run.betas.begin(), run.betas.begin() + static_cast<long>(k - 1));
  out.value = tridiagonal_eigenvalue(run.alphas, off, index);
  const auto s = tridiagonal_eigenvector(run.alphas, off, out.value);
  out.residual = std::abs(run.last_beta * s.back());
  out.vector = Vec::Zero(run.basis.front().size());
  for (std::size_t j = 0; j < k; ++j)
    out.vector += s[j] * run.basis[j];
  return out;
}

} // namespace

RitzPair smallest_ritz(const LanczosResult &run) { return ritz(run, 0); }

RitzPair largest_ritz(const LanczosResult &run) { return ritz(run, run.alphas.size() - 1); }

} // namespace maxdamp
