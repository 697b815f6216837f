#include "maxdamp/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maxdamp
{

namespace
{

Matrix to_dense(const SpMat &m) { return Matrix(m); }

double x_norm(const Matrix &M, const Vec &x) { return std::sqrt(std::max(x.dot(M * x), 0.0)); }

// In-place Householder reduction to upper Hessenberg form.
void hessenberg(Matrix &a)
{
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k)
  {
    const Eigen::Index m = n - k - 1;
    Vec v = a.col(k).tail(m);
    const double alpha = v.norm();
    if (alpha == 0.0)
      continue;
    const double s = v[0] >= 0.0 ? -alpha : alpha;
    v[0] -= s;
    const double vn = v.squaredNorm();
    if (vn == 0.0)
      continue;
    // a := (I - 2 v v^T / vn) a (I - 2 v v^T / vn)
    Eigen::RowVectorXd r = v.transpose() * a.bottomRows(m);
    a.bottomRows(m).noalias() -= (2.0 / vn) * v * r;
    Vec c = a.rightCols(m) * v;
    a.rightCols(m).noalias() -= (2.0 / vn) * c * v.transpose();
    a(k + 1, k) = s;
    a.col(k).tail(m - 1).setZero();
  }
}

double sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (destroys a).
std::vector<std::complex<double>> hqr(Matrix &a)
{
  const int n = static_cast<int>(a.rows());
  std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
  const double eps = std::numeric_limits<double>::epsilon();
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j)
      anorm += std::abs(a(i, j));

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0)
  {
    int its = 0;
    int l = 0;
    do
    {
      for (l = nn; l > 0; --l)
      {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0)
          s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s)
        {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn)
      {
        w[static_cast<std::size_t>(nn--)] = x + t;
      }
      else
      {
        double y = a(nn - 1, nn - 1);
        double ww = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1)
        {
          const double p = 0.5 * (y - x);
          const double q = p * p + ww;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0)
          {
            z = p + sign(z, p);
            w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
            if (z != 0.0)
              w[static_cast<std::size_t>(nn)] = x - ww / z;
          }
          else
          {
            w[static_cast<std::size_t>(nn)] = {x + p, -z};
            w[static_cast<std::size_t>(nn - 1)] = {x + p, z};
          }
          nn -= 2;
        }
        else
        {
          if (its == 60)
            throw Error(ErrorKind::solver, "QR iteration did not converge");
          if (its % 10 == 0 && its > 0)
          {
            // Exceptional shift.
            t += x;
            for (int i = 0; i <= nn; ++i)
              a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            ww = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m)
          {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l)
              break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v)
              break;
          }
          for (int i = m; i < nn - 1; ++i)
          {
            a(i + 2, i) = 0.0;
            if (i != m)
              a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k)
          {
            if (k != m)
            {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn)
                r = a(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0)
              {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0)
              continue;
            if (k == m)
            {
              if (l != m)
                a(k, k - 1) = -a(k, k - 1);
            }
            else
              a(k, k - 1) = -s * x;
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j)
            {
              p = a(k, j) + q * a(k + 1, j);
              if (k + 1 != nn)
              {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i)
            {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k + 1 != nn)
              {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return w;
}

} // namespace

Vec DenseSystem::pack(const FieldState &z) const
{
  Vec x(dim());
  const Eigen::Index r = static_cast<Eigen::Index>(edges.size());
  for (Eigen::Index i = 0; i < r; ++i)
    x[i] = z.e[edges[static_cast<std::size_t>(i)]];
  x.tail(num_faces) = z.b;
  return x;
}

FieldState DenseSystem::unpack(const Vec &x, const StaggeredGrid &grid) const
{
  FieldState z = FieldState::zero(grid);
  const Eigen::Index r = static_cast<Eigen::Index>(edges.size());
  for (Eigen::Index i = 0; i < r; ++i)
    z.e[edges[static_cast<std::size_t>(i)]] = x[i];
  z.b = x.tail(num_faces);
  return z;
}

DenseSystem assemble_dense(const DeRhamComplex &cx, const MaterialAssembly &as, bool with_sigma,
                           Eigen::Index max_dofs)
{
  DenseSystem sys;
  for (Eigen::Index i = 0; i < cx.grid.num_edges(); ++i)
    if (cx.pec_edge_mask[static_cast<std::size_t>(i)])
      sys.edges.push_back(i);
  sys.num_faces = cx.grid.num_faces();
  const Eigen::Index r = static_cast<Eigen::Index>(sys.edges.size());
  const Eigen::Index nf = sys.num_faces;
  const Eigen::Index N = r + nf;
  if (N > max_dofs)
    throw Error(ErrorKind::budget, "dense oracle refuses " + std::to_string(N) +
                                       " degrees of freedom (budget " + std::to_string(max_dofs) + ")");

  const Matrix Meps = to_dense(as.M_eps);
  const Matrix Msig = to_dense(as.M_sigma);
  const Matrix C = to_dense(cx.C_inc);
  Matrix Me(r, r), Ms(r, r), Kc(nf, r);
  for (Eigen::Index j = 0; j < r; ++j)
  {
    const Eigen::Index ej = sys.edges[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < r; ++i)
    {
      const Eigen::Index ei = sys.edges[static_cast<std::size_t>(i)];
      Me(i, j) = Meps(ei, ej);
      Ms(i, j) = with_sigma ? Msig(ei, ej) : 0.0;
    }
    Kc.col(j) = (as.curl_weight * cx.inv_h) * C.col(ej);
  }
  const Matrix Mmu = to_dense(as.M_mu);
  const Matrix Mmi = Mmu.llt().solve(Matrix::Identity(nf, nf));

  // M A = [[-Ms, Kc^T Mmi], [-Mmi Kc, 0]]
  Matrix MA = Matrix::Zero(N, N);
  MA.topLeftCorner(r, r) = -Ms;
  MA.topRightCorner(r, nf) = Kc.transpose() * Mmi;
  MA.bottomLeftCorner(nf, r) = -Mmi * Kc;

  Matrix M = Matrix::Zero(N, N);
  M.topLeftCorner(r, r) = Me;
  M.bottomRightCorner(nf, nf) = Mmi;
  M = 0.5 * (M + M.transpose());
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::material, "dense mass matrix is not positive definite");
  sys.L = llt.matrixL();
  sys.A = llt.solve(MA);
  const Matrix Linv = sys.L.triangularView<Eigen::Lower>().solve(Matrix::Identity(N, N));
  sys.Ahat = Linv * MA * Linv.transpose();
  return sys;
}

std::vector<std::complex<double>> eigenvalues(const Matrix &A)
{
  if (A.rows() != A.cols())
    throw Error(ErrorKind::shape, "eigenvalues need a square matrix");
  if (A.rows() == 0)
    return {};
  Matrix H = A;
  hessenberg(H);
  for (Eigen::Index j = 0; j < H.cols(); ++j)
    for (Eigen::Index i = j + 2; i < H.rows(); ++i)
      H(i, j) = 0.0;
  return hqr(H);
}

Eigen::Index numerical_rank(const Matrix &A, double rtol)
{
  Matrix R = A;
  const Eigen::Index m = R.rows(), n = R.cols();
  Vec norms(n);
  for (Eigen::Index j = 0; j < n; ++j)
    norms[j] = R.col(j).squaredNorm();
  double first = -1.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < std::min(m, n); ++k)
  {
    Eigen::Index p = k;
    for (Eigen::Index j = k; j < n; ++j)
    {
      norms[j] = R.col(j).tail(m - k).squaredNorm();
      if (norms[j] > norms[p])
        p = j;
    }
    R.col(k).swap(R.col(p));
    std::swap(norms[k], norms[p]);
    Vec v = R.col(k).tail(m - k);
    const double alpha = v.norm();
    if (first < 0.0)
      first = alpha;
    if (!(alpha > rtol * first) || alpha == 0.0)
      break;
    ++rank;
    const double s = v[0] >= 0.0 ? -alpha : alpha;
    v[0] -= s;
    const double vn = v.squaredNorm();
    if (vn > 0.0)
    {
      Eigen::RowVectorXd row = v.transpose() * R.bottomRightCorner(m - k, n - k);
      R.bottomRightCorner(m - k, n - k).noalias() -= (2.0 / vn) * v * row;
    }
  }
  return rank;
}

Matrix expm(const Matrix &A)
{
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;
  const Eigen::Index n = A.rows();
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13)
    s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix X = A / std::ldexp(1.0, s);
  const Matrix I = Matrix::Identity(n, n);
  const Matrix X2 = X * X, X4 = X2 * X2, X6 = X4 * X2;
  const Matrix U = X * (X6 * (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 +
                        b[3] * X2 + b[1] * I);
  const Matrix V = X6 * (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 +
                   b[2] * X2 + b[0] * I;
  Matrix R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k)
    R = R * R;
  return R;
}

DenseSpectrum dense_spectrum(const DenseSystem &sys, double rank_tol)
{
  DenseSpectrum out;
  out.dim = sys.dim();
  out.eigenvalues = eigenvalues(sys.Ahat);
  out.kernel_dimension = out.dim - numerical_rank(sys.Ahat, rank_tol);
  std::vector<std::complex<double>> sorted = out.eigenvalues;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto &x, const auto &y) { return std::abs(x) < std::abs(y); });
  out.abscissa = -std::numeric_limits<double>::infinity();
  out.smallest_nonzero = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sorted.size(); ++i)
  {
    out.max_abs_real = std::max(out.max_abs_real, std::abs(sorted[i].real()));
    if (static_cast<Eigen::Index>(i) < out.kernel_dimension)
      continue;
    out.abscissa = std::max(out.abscissa, sorted[i].real());
    out.smallest_nonzero = std::min(out.smallest_nonzero, std::abs(sorted[i]));
  }
  return out;
}

OracleComparison compare_midpoint(const FieldState &initial, const DeRhamComplex &cx,
                                  const MaterialAssembly &as, double T,
                                  const std::vector<double> &dts, const SolverOptions &opts)
{
  const DenseSystem sys = assemble_dense(cx, as, true);
  const Matrix M = sys.L * sys.L.transpose();
  const Vec x0 = sys.pack(initial);
  const double n0 = x_norm(M, x0);
  if (!(n0 > 0.0))
    throw Error(ErrorKind::invalid_parameter, "oracle comparison needs nonzero data");
  const Eigen::Index N = sys.dim();
  const Matrix I = Matrix::Identity(N, N);

  OracleComparison out;
  for (double dt_req : dts)
  {
    SimulationOptions so;
    so.T = T;
    so.dt = dt_req;
    so.solver = opts;
    so.keep_states = true;
    so.track_derivative = false;
    const SimulationResult run = simulate(initial, cx, as, so);
    const double dt = run.diagnostics.dt;
    const Matrix step = expm(dt * sys.A);
    const auto cay = (I - 0.5 * dt * sys.A).partialPivLu();
    const Matrix cayley = cay.solve(I + 0.5 * dt * sys.A);

    Vec exact = x0;
    Vec prev = x0;
    double err = 0.0;
    for (std::size_t k = 1; k < run.states.size(); ++k)
    {
      exact = step * exact;
      const Vec xk = sys.pack(run.states[k]);
      err = std::max(err, x_norm(M, xk - exact) / n0);
      const Vec pred = cayley * prev;
      out.cayley_defect = std::max(out.cayley_defect, x_norm(M, xk - pred) / std::max(x_norm(M, prev), 1e-300));
      prev = xk;
    }
    out.dts.push_back(dt);
    out.errors.push_back(err);
  }
  for (std::size_t i = 1; i < out.errors.size(); ++i)
    out.slopes.push_back(std::log2(out.errors[i - 1] / out.errors[i]) /
                         std::log2(out.dts[i - 1] / out.dts[i]));
  return out;
}

} // namespace maxdamp
