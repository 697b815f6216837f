#include "maxdamp/helmholtz.hpp"

#include <algorithm>
#include <cmath>

#include "maxdamp/initial_data.hpp"

namespace maxdamp
{

namespace
{

double max_abs(const Vec &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double eps_norm(const MaterialAssembly &as, const Vec &e) { return std::sqrt(std::max(e.dot(as.M_eps * e), 0.0)); }

double x_norm(const MaterialAssembly &as, const Vec &e, const Vec &b)
{
  return std::sqrt(std::max(energy(as, e, b), 0.0));
}

Vec potential_diagonal(const DeRhamComplex &cx, const MaterialAssembly &as)
{
  Vec w = as.M_eps.diagonal();
  apply_mask(cx.pec_edge_mask, w);
  Vec d = (cx.inv_h * cx.inv_h) * (SpMat(cx.G_inc.cwiseAbs2()).transpose() * w);
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!cx.interior_node_mask[static_cast<std::size_t>(i)])
      d[i] = 1.0;
  return d;
}

Vec solve_potential(const DeRhamComplex &cx, const MaterialAssembly &as, const Vec &rhs,
                    const SolverOptions &opts, CgResult *info)
{
  Vec b = rhs;
  apply_mask(cx.interior_node_mask, b);
  Vec p = Vec::Zero(b.size());
  const JacobiPreconditioner jacobi(potential_diagonal(cx, as));
  const auto res = conjugate_gradient([&](const Vec &x) { return potential_operator(cx, as, x); }, b,
                                      p, opts, &euclidean_dot, [&](const Vec &r) { return jacobi(r); });
  if (info)
    *info = res;
  apply_mask(cx.interior_node_mask, p);
  return p;
}

} // namespace

Vec potential_operator(const DeRhamComplex &cx, const MaterialAssembly &as, const Vec &p)
{
  Vec pi = p;
  apply_mask(cx.interior_node_mask, pi);
  Vec me = as.M_eps * cx.grad(pi);
  apply_mask(cx.pec_edge_mask, me);
  Vec y = cx.grad_t(me);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!cx.interior_node_mask[static_cast<std::size_t>(i)])
      y[i] = p[i];
  return y;
}

PotentialSolve solve_p(const Vec &e, const DeRhamComplex &cx, const MaterialAssembly &as,
                       const SolverOptions &opts)
{
  if (e.size() != cx.grid.num_edges())
    throw Error(ErrorKind::shape, "edge vector has the wrong length");
  PotentialSolve out;
  const Vec ep = apply_pec(cx, e);
  CgResult info;
  const Vec p = solve_potential(cx, as, charge(cx, as, ep), opts, &info);
  out.residual = info.residual;
  out.iterations = info.iterations;

  Vec scaled = cx.inv_h * p;
  const FluxLattice lat = FluxLattice::covering(std::max(max_abs(ep), max_abs(scaled)));
  out.quantum = lat.quantum();
  out.field = ep;
  lat.snap(out.field);
  lat.snap(scaled);
  apply_mask(cx.interior_node_mask, scaled);
  out.gradient = cx.G_inc * scaled;
  out.v = out.field - out.gradient;
  out.p = cx.grid.h * scaled;
  return out;
}

Vec solve_p_dot(const Vec &e, const DeRhamComplex &cx, const MaterialAssembly &as,
                const SolverOptions &opts, CgResult *info)
{
  Vec src = as.M_sigma * e;
  apply_mask(cx.pec_edge_mask, src);
  Vec rhs = -cx.grad_t(src);
  return solve_potential(cx, as, rhs, opts, info);
}

FluxSplit split_flux(const Vec &b, const DeRhamComplex &cx, const MaterialAssembly &as,
                     const SolverOptions &opts)
{
  if (b.size() != cx.grid.num_faces())
    throw Error(ErrorKind::shape, "face vector has the wrong length");
  const Eigen::Index nc = cx.grid.cells;
  const Eigen::Index nf = cx.grid.num_faces();
  const Mask &bnd = cx.boundary_face_mask;
  auto Z = [&](const Vec &c) {
    Vec f = cx.D_inc.transpose() * c.head(nc);
    for (Eigen::Index i = 0; i < nf; ++i)
      if (bnd[static_cast<std::size_t>(i)])
        f[i] += c[nc + i];
    return f;
  };
  auto Zt = [&](const Vec &f) {
    Vec c = Vec::Zero(nc + nf);
    c.head(nc) = cx.D_inc * f;
    for (Eigen::Index i = 0; i < nf; ++i)
      if (bnd[static_cast<std::size_t>(i)])
        c[nc + i] = f[i];
    return c;
  };
  // Jacobi diagonal of Z^T M_mu Z from the diagonal of M_mu.
  const Vec dmu = as.M_mu.diagonal();
  Vec diag = Vec::Ones(nc + nf);
  diag.head(nc) = SpMat(cx.D_inc.cwiseAbs2()) * dmu;
  for (Eigen::Index i = 0; i < nf; ++i)
    if (bnd[static_cast<std::size_t>(i)])
      diag[nc + i] = dmu[i];
  const JacobiPreconditioner jac(diag);
  auto op = [&](const Vec &c) {
    Vec cc = c;
    cc[0] = 0.0; // D^T 1 lies in the span of the boundary columns; pin one cell
    Vec y = Zt(as.M_mu * Z(cc));
    y[0] = c[0];
    for (Eigen::Index i = 0; i < nf; ++i)
      if (!bnd[static_cast<std::size_t>(i)])
        y[nc + i] = c[nc + i];
    return y;
  };
  diag[0] = 1.0;
  Vec rhs = Zt(b);
  rhs[0] = 0.0;
  Vec c = Vec::Zero(nc + nf);
  const auto res = conjugate_gradient(op, rhs, c, opts, &euclidean_dot, [&](const Vec &r) { return jac(r); });
  for (Eigen::Index i = 0; i < nf; ++i)
    if (!bnd[static_cast<std::size_t>(i)])
      c[nc + i] = 0.0;
  FluxSplit out;
  out.cells = c.head(nc);
  out.boundary = c.tail(nf);
  out.kernel = as.M_mu * Z(c);
  out.free = b - out.kernel;
  out.residual = res.residual;
  out.iterations = res.iterations;
  return out;
}

FieldState project_charge_free(const DeRhamComplex &cx, const MaterialAssembly &as,
                               const FieldState &z, const SolverOptions &opts)
{
  FieldState out;
  out.e = solve_p(z.e, cx, as, opts).v;
  out.b = split_flux(z.b, cx, as, opts).free;
  out.t = z.t;
  return out;
}

double sigma_field_norm(const MaterialAssembly &as, const Vec &e)
{
  const Vec s = as.M_sigma * e;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] != 0.0)
      acc += s[i] * s[i] / as.edge_weight[i];
  return std::sqrt(acc);
}

PdotBound estimate_pdot_constant(const DeRhamComplex &cx, const MaterialAssembly &as, int samples,
                                 std::uint64_t seed, const SolverOptions &opts)
{
  PdotBound out;
  for (int s = 0; s < samples; ++s)
  {
    const Vec e = random_state(cx, as, seed + static_cast<std::uint64_t>(s)).e;
    const double den = sigma_field_norm(as, e);
    if (den == 0.0)
      continue;
    const Vec pd = solve_p_dot(e, cx, as, opts);
    out.constant = std::max(out.constant, eps_norm(as, cx.grad(pd)) / den);
    ++out.samples;
  }
  return out;
}

Vec inhomogeneous_forcing(const Vec &e, const DeRhamComplex &cx, const MaterialAssembly &as,
                          const SolverOptions &opts)
{
  const Vec pd = solve_p_dot(e, cx, as, opts);
  Vec f = -(as.M_sigma * e + as.M_eps * cx.grad(pd));
  apply_mask(cx.pec_edge_mask, f);
  return f;
}

namespace
{

// Euclidean projection of an edge vector onto the range of C^T: subtract
// G q with (G^T G) q = G^T v on interior nodes.
Vec remove_gradients(const Vec &v, const DeRhamComplex &cx, const SolverOptions &opts)
{
  Vec g = cx.G_inc.transpose() * masked(cx.pec_edge_mask, v);
  apply_mask(cx.interior_node_mask, g);
  if (g.norm() == 0.0)
    return v;
  auto op = [&](const Vec &q) {
    Vec r = cx.G_inc.transpose() * masked(cx.pec_edge_mask, cx.G_inc * masked(cx.interior_node_mask, q));
    apply_mask(cx.interior_node_mask, r);
    return r;
  };
  Vec q = Vec::Zero(g.size());
  SolverOptions inner = opts;
  inner.tol = std::min(opts.tol, 1e-14);
  conjugate_gradient(op, g, q, inner);
  Vec out = v - cx.G_inc * masked(cx.interior_node_mask, q);
  apply_mask(cx.pec_edge_mask, out);
  return out;
}

} // namespace

Wi0Solve build_Wi0(const Vec &e0, const DeRhamComplex &cx, const MaterialAssembly &as,
                   const SolverOptions &opts)
{
  Wi0Solve out;
  out.rhs = -inhomogeneous_forcing(apply_pec(cx, e0), cx, as, opts);
  out.b = Vec::Zero(cx.grid.num_faces());
  out.h = out.b;
  const double rnorm = out.rhs.norm();
  if (rnorm == 0.0)
    return out;

  Vec div = cx.grad_t(out.rhs);
  apply_mask(cx.interior_node_mask, div);
  out.compatibility = div.norm() / (cx.inv_h * rnorm);
  if (out.compatibility > 10.0 * std::max(opts.tol, 1e-14))
    throw Error(ErrorKind::consistency,
                "right side of the W_i0 problem carries charge (relative " +
                    std::to_string(out.compatibility) + ")");

  // b = w C P y with (P w^2 C^T M_mu^{-1} C P) y = rhs; then W_i0 = M_mu^{-1} b
  // has minimal M_mu norm among all solutions.
  auto op = [&](const Vec &y) { return ampere(cx, as, faraday(cx, as, masked(cx.pec_edge_mask, y))); };
  const Vec rhs = remove_gradients(out.rhs, cx, opts);
  Vec y = Vec::Zero(out.rhs.size());
  const auto res = conjugate_gradient(op, rhs, y, opts);
  out.iterations = res.iterations;

  Vec scaled = (as.curl_weight * cx.inv_h) * masked(cx.pec_edge_mask, y);
  const FluxLattice lat = FluxLattice::covering(2.0 * max_abs(scaled));
  lat.snap(scaled);
  out.b = cx.C_inc * scaled;
  out.h = magnetic_field(as, out.b);

  const Vec ct = ampere(cx, as, out.b);
  out.residual = (ct - out.rhs).norm() / rnorm;
  const double bnorm = out.b.norm();
  double defect = (cx.D_inc * out.b).norm();
  for (Eigen::Index f = 0; f < out.b.size(); ++f)
    if (cx.boundary_face_mask[static_cast<std::size_t>(f)])
      defect += std::abs(out.b[f]);
  out.kernel_defect = bnorm > 0.0 ? defect / bnorm : 0.0;
  return out;
}

namespace
{

// Charge and magnetic-divergence check of homogeneous data, measured against
// the electric and magnetic scales of a reference state.
void require_charge_free(const FieldState &initial, const FieldState &reference,
                         const DeRhamComplex &cx, const MaterialAssembly &as, double solver_tol)
{
  Vec me = as.M_eps * apply_pec(cx, reference.e);
  apply_mask(cx.pec_edge_mask, me);
  const double scale = cx.inv_h * max_abs(me);
  const double rho = max_abs(charge(cx, as, apply_pec(cx, initial.e)));
  const double tol = 1e3 * std::max(solver_tol, 1e-15);
  if (scale > 0.0 && rho > tol * scale)
    throw Error(ErrorKind::consistency, "homogeneous data carry charge (relative " +
                                            std::to_string(rho / scale) + ")");
  const double bnorm = max_abs(reference.b);
  if (bnorm > 0.0 && max_abs(cx.D_inc * initial.b) > tol * bnorm)
    throw Error(ErrorKind::consistency, "homogeneous magnetic data are not divergence free");
}

SimulationResult run_undamped(const FieldState &initial, const DeRhamComplex &cx,
                              const MaterialAssembly &as, const SimulationOptions &opts)
{
  SimulationOptions o = opts;
  o.with_sigma = false;
  o.forcing = nullptr;
  return simulate(initial, cx, as, o);
}

} // namespace

SimulationResult evolve_homogeneous(const FieldState &initial, const DeRhamComplex &cx,
                                    const MaterialAssembly &as, const SimulationOptions &opts)
{
  require_charge_free(initial, initial, cx, as, opts.solver.tol);
  return run_undamped(initial, cx, as, opts);
}

SimulationResult evolve_inhomogeneous(const Vec &b_wi0, const std::vector<Vec> &forcing,
                                      const DeRhamComplex &cx, const MaterialAssembly &as,
                                      const SimulationOptions &opts)
{
  const int N = step_count(opts.T, opts.dt);
  if (static_cast<int>(forcing.size()) != N)
    throw Error(ErrorKind::interface, "forcing covers " + std::to_string(forcing.size()) +
                                          " steps but the time grid has " + std::to_string(N));
  FieldState z = FieldState::zero(cx.grid);
  z.b = b_wi0;
  SimulationOptions o = opts;
  o.with_sigma = false;
  o.forcing = [&forcing](int n, double) { return forcing[static_cast<std::size_t>(n)]; };
  return simulate(z, cx, as, o);
}

std::vector<double> verify_splitting(const std::vector<FieldState> &full,
                                     const std::vector<FieldState> &hom,
                                     const std::vector<FieldState> &inh,
                                     const std::vector<Vec> &gradients, const MaterialAssembly &as)
{
  if (hom.size() != full.size() || inh.size() != full.size() || gradients.size() != full.size())
    throw Error(ErrorKind::interface, "split trajectories are on different time grids");
  std::vector<double> out;
  out.reserve(full.size());
  for (std::size_t n = 0; n < full.size(); ++n)
  {
    if (std::abs(hom[n].t - full[n].t) > 1e-12 * (1.0 + full[n].t) ||
        std::abs(inh[n].t - full[n].t) > 1e-12 * (1.0 + full[n].t))
      throw Error(ErrorKind::interface, "split trajectories are on different time grids");
    const Vec de = hom[n].e + inh[n].e + gradients[n] - full[n].e;
    const Vec db = hom[n].b + inh[n].b - full[n].b;
    const double num = eps_norm(as, de) + std::sqrt(std::max(db.dot(magnetic_field(as, db)), 0.0));
    const double den = x_norm(as, full[n].e, full[n].b);
    out.push_back(den > 0.0 ? num / den : num);
  }
  return out;
}

SplitTrajectory split_run(const FieldState &initial, const DeRhamComplex &cx,
                          const MaterialAssembly &as, const SplitOptions &so)
{
  SplitTrajectory out;
  SimulationOptions base;
  base.dt = so.dt;
  base.T = so.T;
  base.solver = so.solver;
  base.keep_states = true;
  base.track_derivative = false;

  std::vector<Vec> e_mids;
  SimulationOptions full_opts = base;
  full_opts.observer = [&e_mids](const StepView &v) { e_mids.push_back(*v.e_mid); };
  SimulationResult full = simulate(initial, cx, as, full_opts);
  out.dt = full.diagnostics.dt;
  out.full_diagnostics = full.diagnostics;
  out.full = std::move(full.states);

  const FieldState &z0 = out.full.front();
  out.p0 = solve_p(z0.e, cx, as, so.solver);
  out.wi0 = build_Wi0(z0.e, cx, as, so.solver);

  // Initial derivative of the inhomogeneous system.
  {
    const Vec r = ampere(cx, as, out.wi0.b) - out.wi0.rhs;
    const double den = eps_norm(as, as.eps_inverse.apply(out.wi0.rhs));
    const double num = eps_norm(as, as.eps_inverse.apply(r));
    out.initial_derivative = den > 0.0 ? num / den : num;
  }

  std::vector<Vec> forcing;
  forcing.reserve(e_mids.size());
  for (const Vec &em : e_mids)
  {
    Vec pd = solve_p_dot(em, cx, as, so.solver);
    Vec f = -(as.M_sigma * em + as.M_eps * cx.grad(pd));
    apply_mask(cx.pec_edge_mask, f);
    forcing.push_back(std::move(f));
    out.p_dot.push_back(std::move(pd));
  }

  FieldState h0;
  h0.e = out.p0.v;
  h0.b = z0.b - out.wi0.b;
  SimulationOptions hom_opts = base;
  hom_opts.track_derivative = true;
  require_charge_free(h0, z0, cx, as, hom_opts.solver.tol);
  SimulationResult hom = run_undamped(h0, cx, as, hom_opts);
  SimulationResult inh = evolve_inhomogeneous(out.wi0.b, forcing, cx, as, base);
  out.homogeneous = std::move(hom.states);
  out.inhomogeneous = std::move(inh.states);

  const double D0 = hom.diagnostics.denergy0;
  for (double Dn : hom.series.denergy)
    if (D0 > 0.0)
      out.homogeneous_drift = std::max(out.homogeneous_drift, std::abs(Dn - D0) / D0);
  for (const FieldState &s : out.homogeneous)
  {
    Vec me = as.M_eps * s.e;
    apply_mask(cx.pec_edge_mask, me);
    const double scale = cx.inv_h * max_abs(me);
    const double rho = max_abs(charge(cx, as, s.e));
    out.homogeneous_charge = std::max(out.homogeneous_charge, scale > 0.0 ? rho / scale : rho);
  }

  std::vector<Vec> gradients;
  gradients.reserve(out.full.size());
  for (const FieldState &s : out.full)
  {
    PotentialSolve ps = solve_p(s.e, cx, as, so.solver);
    gradients.push_back(ps.gradient);
    out.p.push_back(std::move(ps.p));
  }
  out.residual = verify_splitting(out.full, out.homogeneous, out.inhomogeneous, gradients, as);
  for (double r : out.residual)
    out.residual_max = std::max(out.residual_max, r);

  KahanSum lhs, rhs;
  const double dt = out.dt;
  for (std::size_t n = 0; n + 1 < out.full.size(); ++n)
  {
    const Vec dv = (out.inhomogeneous[n + 1].e - out.inhomogeneous[n].e) / dt;
    const Vec dw = (out.inhomogeneous[n + 1].b - out.inhomogeneous[n].b) / dt;
    lhs.add(dt * energy(as, dv, dw));
    const Vec de = (out.full[n + 1].e - out.full[n].e) / dt;
    const double s = sigma_field_norm(as, de);
    rhs.add(dt * s * s);
  }
  out.duhamel_lhs = lhs.value();
  out.duhamel_rhs = rhs.value();
  return out;
}

DuhamelReport estimate_duhamel_constant(const DeRhamComplex &cx, const MaterialAssembly &as,
                                        const std::vector<double> &horizons, double dt,
                                        int samples, std::uint64_t seed, const SolverOptions &opts)
{
  DuhamelReport out;
  out.horizons = horizons;
  for (double T : horizons)
  {
    double c = 0.0;
    for (int s = 0; s < samples; ++s)
    {
      const FieldState z0 = random_state(cx, as, seed + static_cast<std::uint64_t>(s));
      const SplitTrajectory tr = split_run(z0, cx, as, {dt, T, opts});
      if (tr.duhamel_rhs > 0.0)
        c = std::max(c, tr.duhamel_lhs / (T * T * tr.duhamel_rhs));
    }
    out.constants.push_back(c);
  }
  if (!out.constants.empty())
  {
    const auto [lo, hi] = std::minmax_element(out.constants.begin(), out.constants.end());
    out.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  }
  return out;
}

} // namespace maxdamp
