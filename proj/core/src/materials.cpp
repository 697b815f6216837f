#include "maxdamp/materials.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

namespace maxdamp
{

namespace
{

constexpr double pi = 3.14159265358979323846;

double radius2(const Point &x, const Point &x0)
{
  double r2 = 0.0;
  for (int d = 0; d < 3; ++d)
    r2 += (x[d] - x0[d]) * (x[d] - x0[d]);
  return r2;
}

std::string point_string(const Point &p)
{
  std::ostringstream os;
  os.precision(6);
  os << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

std::vector<double> with_defaults(PresetKind kind, std::vector<double> p)
{
  std::vector<double> defaults;
  switch (kind)
  {
  case PresetKind::constant: defaults = {1.0}; break;
  case PresetKind::radial_growth: defaults = {1.0, 1.0}; break;
  case PresetKind::radial_decay: defaults = {1.0, 4.0}; break;
  case PresetKind::diag_aniso: defaults = {1.0, 4.0, 1.0}; break;
  case PresetKind::rotated_aniso: defaults = {45.0, 1.0, 4.0, 1.0}; break;
  }
  if (p.size() > defaults.size())
    throw Error(ErrorKind::invalid_parameter, "preset " + to_string(kind) + " takes at most " +
                                                  std::to_string(defaults.size()) + " parameters");
  for (std::size_t i = p.size(); i < defaults.size(); ++i)
    p.push_back(defaults[i]);
  for (double v : p)
    if (!std::isfinite(v))
      throw Error(ErrorKind::invalid_parameter, "preset parameter is not finite");
  return p;
}

double min_eig(const Eigen::Matrix3d &A)
{
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Smallest eigenvalue of the pencil (A, B) with B positive definite.
double min_generalized_eig(const Eigen::Matrix3d &A, const Eigen::Matrix3d &B)
{
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(A, B, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

} // namespace

PresetKind parse_preset_kind(const std::string &name)
{
  if (name == "constant") return PresetKind::constant;
  if (name == "radial_growth") return PresetKind::radial_growth;
  if (name == "radial_decay") return PresetKind::radial_decay;
  if (name == "diag_aniso") return PresetKind::diag_aniso;
  if (name == "rotated_aniso") return PresetKind::rotated_aniso;
  throw Error(ErrorKind::invalid_parameter, "unknown material preset '" + name + "'");
}

std::string to_string(PresetKind kind)
{
  switch (kind)
  {
  case PresetKind::constant: return "constant";
  case PresetKind::radial_growth: return "radial_growth";
  case PresetKind::radial_decay: return "radial_decay";
  case PresetKind::diag_aniso: return "diag_aniso";
  case PresetKind::rotated_aniso: return "rotated_aniso";
  }
  return "unknown";
}

SigmaProfile parse_sigma_profile(const std::string &name)
{
  if (name == "indicator") return SigmaProfile::indicator;
  if (name == "smoothstep") return SigmaProfile::smoothstep;
  throw Error(ErrorKind::invalid_parameter, "unknown sigma profile '" + name + "'");
}

std::string to_string(SigmaProfile profile)
{
  return profile == SigmaProfile::indicator ? "indicator" : "smoothstep";
}

MaterialPreset::MaterialPreset(PresetKind kind, std::vector<double> params)
    : kind_(kind), params_(with_defaults(kind, std::move(params)))
{
}

Eigen::Matrix3d MaterialPreset::eval(const Point &x, const Point &x0) const
{
  const auto &p = params_;
  switch (kind_)
  {
  case PresetKind::constant: return p[0] * Eigen::Matrix3d::Identity();
  case PresetKind::radial_growth:
    return p[0] * (1.0 + p[1] * radius2(x, x0)) * Eigen::Matrix3d::Identity();
  case PresetKind::radial_decay:
    return p[0] * std::exp(-p[1] * radius2(x, x0)) * Eigen::Matrix3d::Identity();
  case PresetKind::diag_aniso: return Eigen::Vector3d(p[0], p[1], p[2]).asDiagonal();
  case PresetKind::rotated_aniso:
  {
    const double th = p[0] * pi / 180.0;
    Eigen::Matrix3d R;
    R << std::cos(th), -std::sin(th), 0.0, std::sin(th), std::cos(th), 0.0, 0.0, 0.0, 1.0;
    const Eigen::Matrix3d D = Eigen::Vector3d(p[1], p[2], p[3]).asDiagonal();
    Eigen::Matrix3d A = R * D * R.transpose();
    return 0.5 * (A + A.transpose());
  }
  }
  return Eigen::Matrix3d::Identity();
}

Eigen::Matrix3d MaterialPreset::radial_derivative(const Point &x, const Point &x0) const
{
  const auto &p = params_;
  const double r2 = radius2(x, x0);
  switch (kind_)
  {
  case PresetKind::radial_growth: return 2.0 * p[0] * p[1] * r2 * Eigen::Matrix3d::Identity();
  case PresetKind::radial_decay:
    return -2.0 * p[1] * r2 * p[0] * std::exp(-p[1] * r2) * Eigen::Matrix3d::Identity();
  default: return Eigen::Matrix3d::Zero();
  }
}

bool MaterialPreset::is_uniform() const noexcept
{
  return kind_ == PresetKind::constant || kind_ == PresetKind::diag_aniso ||
         kind_ == PresetKind::rotated_aniso;
}

bool MaterialPreset::is_diagonal() const noexcept
{
  if (kind_ != PresetKind::rotated_aniso)
    return true;
  const double s = std::sin(params_[0] * pi / 180.0);
  return s == 0.0 || params_[1] == params_[2];
}

double boundary_distance(const StaggeredGrid &grid, const Point &lo, const Point &hi)
{
  double d = grid.length;
  for (int a = 0; a < 3; ++a)
    d = std::min({d, lo[a], grid.length - hi[a]});
  return std::max(d, 0.0);
}

CollarMasks collar_mask(const StaggeredGrid &grid, double a)
{
  if (!(a > 0.0) || !(a < 0.5 * grid.length))
    throw Error(ErrorKind::invalid_parameter, "collar width must satisfy 0 < a < length/2 (got " +
                                                  std::to_string(a) + ")");
  const double h = grid.h;
  CollarMasks m;
  m.cells.assign(static_cast<std::size_t>(grid.cells), 0);
  m.upsilon_cells.assign(static_cast<std::size_t>(grid.cells), 0);
  for (Eigen::Index c = 0; c < grid.cells; ++c)
  {
    const auto q = grid.cell_coord(c);
    const Point lo{q.i * h, q.j * h, q.k * h};
    const Point hi{(q.i + 1) * h, (q.j + 1) * h, (q.k + 1) * h};
    const bool in = boundary_distance(grid, lo, hi) < a;
    m.cells[static_cast<std::size_t>(c)] = in;
    m.upsilon_cells[static_cast<std::size_t>(c)] = !in;
  }
  m.edges.assign(static_cast<std::size_t>(grid.num_edges()), 0);
  m.nodes.assign(static_cast<std::size_t>(grid.nodes), 0);
  for (Eigen::Index e = 0; e < grid.num_edges(); ++e)
  {
    const auto q = grid.edge_coord(e);
    const Point lo{q.i * h, q.j * h, q.k * h};
    Point hi = lo;
    hi[q.axis] += h;
    if (boundary_distance(grid, lo, hi) < a)
    {
      m.edges[static_cast<std::size_t>(e)] = 1;
      std::array<int, 3> head{q.i, q.j, q.k};
      head[static_cast<std::size_t>(q.axis)] += 1;
      m.nodes[static_cast<std::size_t>(grid.node_index(q.i, q.j, q.k))] = 1;
      m.nodes[static_cast<std::size_t>(grid.node_index(head[0], head[1], head[2]))] = 1;
    }
  }
  m.free_nodes.assign(static_cast<std::size_t>(grid.nodes), 0);
  const int n = grid.n;
  for (Eigen::Index v = 0; v < grid.nodes; ++v)
  {
    const auto q = grid.node_coord(v);
    const bool interior = q.i > 0 && q.i < n && q.j > 0 && q.j < n && q.k > 0 && q.k < n;
    m.free_nodes[static_cast<std::size_t>(v)] = interior && !m.nodes[static_cast<std::size_t>(v)];
  }
  return m;
}

SpdReport check_spd(const SpMat &M, std::uint64_t seed)
{
  SpdReport rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index n = M.rows();
  rep.min_rayleigh = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 200; ++t)
  {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i)
      x[i] = gauss(rng);
    rep.min_rayleigh = std::min(rep.min_rayleigh, x.dot(M * x) / x.squaredNorm());
  }
  Vec start(n);
  for (Eigen::Index i = 0; i < n; ++i)
    start[i] = gauss(rng);
  const auto run = lanczos([&](const Vec &v) -> Vec { return M * v; }, start,
                           static_cast<int>(std::min<Eigen::Index>(50, n)),
                           [](const Vec &a, const Vec &b) { return a.dot(b); });
  rep.ritz_min = smallest_ritz(run).value;
  rep.ritz_max = largest_ritz(run).value;
  rep.pass = rep.min_rayleigh > 0.0 && rep.ritz_min > 0.0;
  return rep;
}

struct MassInverse::Factor
{
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

MassInverse::MassInverse(const SpMat &M, const Mask &retain) : retain_(retain)
{
  const Eigen::Index n = M.rows();
  diagonal_ = maxdamp::is_diagonal(M);
  if (diagonal_)
  {
    inv_diag_ = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (retain_[static_cast<std::size_t>(i)])
        inv_diag_[i] = 1.0 / M.coeff(i, i);
    return;
  }
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trip;
  for (int r = 0; r < M.outerSize(); ++r)
  {
    if (!retain_[static_cast<std::size_t>(r)])
    {
      trip.emplace_back(r, r, 1.0);
      continue;
    }
    for (SpMat::InnerIterator it(M, r); it; ++it)
      if (retain_[static_cast<std::size_t>(it.col())])
        trip.emplace_back(r, static_cast<int>(it.col()), it.value());
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  auto f = std::make_shared<Factor>();
  f->ldlt.compute(A);
  if (f->ldlt.info() != Eigen::Success)
    throw Error(ErrorKind::material, "mass matrix factorization failed");
  factor_ = f;
}

Vec MassInverse::apply(const Vec &r) const
{
  if (diagonal_)
    return inv_diag_.cwiseProduct(r);
  Vec x = factor_->ldlt.solve(masked(retain_, r));
  apply_mask(retain_, x);
  return x;
}

MaterialAssembly sample_materials(const DeRhamComplex &complex, const MaterialSpec &spec,
                                  bool verify_spd)
{
  const StaggeredGrid &grid = complex.grid;
  const double h = grid.h, h3 = h * h * h;
  const int n = grid.n;
  const double a = spec.sigma.a;
  if (!(spec.sigma.sigma0 >= 0.0) || !std::isfinite(spec.sigma.sigma0))
    throw Error(ErrorKind::invalid_parameter, "sigma0 must be a finite value >= 0");

  MaterialAssembly out;
  out.spec = spec;
  const CollarMasks collar = collar_mask(grid, a);
  out.collar_edge_mask = collar.edges;
  out.collar_cell_mask = collar.cells;
  out.upsilon_cell_mask = collar.upsilon_cells;
  out.collar_node_mask = collar.nodes;
  out.free_node_mask = collar.free_nodes;

  using Triplet = Eigen::Triplet<double, int>;
  std::vector<Triplet> te, tm;
  te.reserve(static_cast<std::size_t>(grid.cells) * 60);
  tm.reserve(static_cast<std::size_t>(grid.cells) * 18);
  out.eps_min_value = std::numeric_limits<double>::infinity();
  out.mu_min_value = std::numeric_limits<double>::infinity();

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
      {
        const Point x{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
        const Eigen::Matrix3d eps = spec.epsilon.eval(x, spec.x0);
        const Eigen::Matrix3d mu = spec.mu.eval(x, spec.x0);
        const double le = min_eig(eps), lm = min_eig(mu);
        if (!(le > 0.0))
          throw Error(ErrorKind::material, "epsilon is not positive definite at " + point_string(x));
        if (!(lm > 0.0))
          throw Error(ErrorKind::material, "mu is not positive definite at " + point_string(x));
        out.eps_min_value = std::min(out.eps_min_value, le);
        out.mu_min_value = std::min(out.mu_min_value, lm);

        // Edges of this cell along each axis, faces normal to each axis.
        std::array<std::array<int, 4>, 3> edges{};
        std::array<std::array<int, 2>, 3> faces{};
        for (int ax = 0; ax < 3; ++ax)
        {
          const int b = (ax + 1) % 3, c = (ax + 2) % 3;
          int slot = 0;
          for (int oc = 0; oc < 2; ++oc)
            for (int ob = 0; ob < 2; ++ob)
            {
              std::array<int, 3> p{i, j, k};
              p[static_cast<std::size_t>(b)] += ob;
              p[static_cast<std::size_t>(c)] += oc;
              edges[ax][slot++] = static_cast<int>(grid.edge_index(ax, p[0], p[1], p[2]));
            }
          std::array<int, 3> up{i, j, k};
          up[static_cast<std::size_t>(ax)] += 1;
          faces[ax][0] = static_cast<int>(grid.face_index(ax, i, j, k));
          faces[ax][1] = static_cast<int>(grid.face_index(ax, up[0], up[1], up[2]));
        }

        for (int ax = 0; ax < 3; ++ax)
        {
          for (int e : edges[ax])
            te.emplace_back(e, e, 0.25 * h3 * eps(ax, ax));
          for (int f : faces[ax])
            tm.emplace_back(f, f, 0.5 * h3 * mu(ax, ax));
        }
        for (int ax = 0; ax < 3; ++ax)
          for (int bx = 0; bx < 3; ++bx)
          {
            if (ax == bx)
              continue;
            if (eps(ax, bx) != 0.0)
              for (int ea : edges[ax])
                for (int eb : edges[bx])
                  te.emplace_back(ea, eb, h3 * eps(ax, bx) / 16.0);
            if (mu(ax, bx) != 0.0)
              for (int fa : faces[ax])
                for (int fb : faces[bx])
                  tm.emplace_back(fa, fb, h3 * mu(ax, bx) / 4.0);
          }
      }

  out.M_eps.resize(grid.num_edges(), grid.num_edges());
  out.M_eps.setFromTriplets(te.begin(), te.end());
  out.M_mu.resize(grid.num_faces(), grid.num_faces());
  out.M_mu.setFromTriplets(tm.begin(), tm.end());

  // Geometric quadrature weights: number of adjacent cells times h^3/4 (edges) or h^3/2 (faces).
  out.edge_weight = Vec::Zero(grid.num_edges());
  for (Eigen::Index e = 0; e < grid.num_edges(); ++e)
  {
    const auto q = grid.edge_coord(e);
    const std::array<int, 3> idx{q.i, q.j, q.k};
    double w = h3;
    for (int d = 0; d < 3; ++d)
      if (d != q.axis && (idx[d] == 0 || idx[d] == n))
        w *= 0.5;
    out.edge_weight[e] = w;
  }
  out.curl_weight = h3;
  out.face_weight = Vec::Zero(grid.num_faces());
  for (Eigen::Index f = 0; f < grid.num_faces(); ++f)
    out.face_weight[f] = complex.boundary_face_mask[static_cast<std::size_t>(f)] ? 0.5 * h3 : h3;

  out.sigma_profile = Vec::Zero(grid.num_edges());
  std::vector<Triplet> ts;
  const double s0 = spec.sigma.sigma0;
  for (Eigen::Index e = 0; e < grid.num_edges(); ++e)
  {
    if (!out.collar_edge_mask[static_cast<std::size_t>(e)])
      continue;
    double prof = 1.0;
    if (spec.sigma.profile == SigmaProfile::smoothstep)
    {
      const Point mid = grid.edge_midpoint(e);
      const double d = boundary_distance(grid, mid, mid);
      const double t = std::clamp((a - d) / (0.5 * a), 0.0, 1.0);
      prof = t * t * (3.0 - 2.0 * t);
    }
    out.sigma_profile[e] = prof;
    const double w = s0 * prof * out.edge_weight[e];
    if (w != 0.0)
      ts.emplace_back(static_cast<int>(e), static_cast<int>(e), w);
  }
  out.M_sigma.resize(grid.num_edges(), grid.num_edges());
  out.M_sigma.setFromTriplets(ts.begin(), ts.end());

  out.eps_diagonal = maxdamp::is_diagonal(out.M_eps);
  out.mu_diagonal = maxdamp::is_diagonal(out.M_mu);
  out.eps_lower = 0.25 * h3 * out.eps_min_value;
  out.mu_upper = gershgorin_bound(out.M_mu);

  if (verify_spd)
  {
    out.eps_spd = check_spd(out.M_eps);
    out.mu_spd = check_spd(out.M_mu);
    if (!out.eps_spd.pass)
      throw Error(ErrorKind::material, "M_eps failed the positive definiteness check");
    if (!out.mu_spd.pass)
      throw Error(ErrorKind::material, "M_mu failed the positive definiteness check");
  }

  out.eps_inverse = MassInverse(out.M_eps, complex.pec_edge_mask);
  out.mu_inverse = MassInverse(out.M_mu, Mask(static_cast<std::size_t>(grid.num_faces()), 1));
  return out;
}

NonTrapReport check_nontrapping(const MaterialSpec &spec, const StaggeredGrid &grid)
{
  NonTrapReport rep;
  rep.eta_eps = std::numeric_limits<double>::infinity();
  rep.eta_mu = std::numeric_limits<double>::infinity();
  auto visit = [&](const Point &x) {
    const Eigen::Matrix3d eps = spec.epsilon.eval(x, spec.x0);
    const Eigen::Matrix3d mu = spec.mu.eval(x, spec.x0);
    const double ee = min_generalized_eig(eps + spec.epsilon.radial_derivative(x, spec.x0), eps);
    const double em = min_generalized_eig(mu + spec.mu.radial_derivative(x, spec.x0), mu);
    if (ee < rep.eta_eps)
    {
      rep.eta_eps = ee;
      rep.worst_point_eps = x;
    }
    if (em < rep.eta_mu)
    {
      rep.eta_mu = em;
      rep.worst_point_mu = x;
    }
  };
  for (Eigen::Index v = 0; v < grid.nodes; ++v)
    visit(grid.node_position(v));
  for (Eigen::Index c = 0; c < grid.cells; ++c)
    visit(grid.cell_center(c));
  rep.worst_point = rep.eta_eps <= rep.eta_mu ? rep.worst_point_eps : rep.worst_point_mu;
  rep.pass = std::min(rep.eta_eps, rep.eta_mu) > 0.0;
  return rep;
}

SigmaGapReport check_sigma_gap(const MaterialAssembly &assembly, double sigma0)
{
  SigmaGapReport rep;
  const Vec diag = assembly.M_sigma.diagonal();
  if (sigma0 <= 0.0 && diag.cwiseAbs().maxCoeff() == 0.0)
  {
    rep.pass = true;
    rep.undamped = true;
    return rep;
  }
  bool outside_clean = true;
  for (Eigen::Index e = 0; e < diag.size(); ++e)
  {
    const bool in = assembly.collar_edge_mask[static_cast<std::size_t>(e)] != 0;
    if (in && diag[e] < sigma0 * assembly.edge_weight[e])
      rep.offending.push_back(e);
    if (!in && diag[e] != 0.0)
      outside_clean = false;
  }
  rep.pass = rep.offending.empty() && outside_clean;
  return rep;
}

} // namespace maxdamp
