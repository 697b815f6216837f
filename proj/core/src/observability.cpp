#include "maxdamp/observability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "maxdamp/helmholtz.hpp"
#include "maxdamp/initial_data.hpp"

namespace maxdamp
{

namespace
{

double max_abs(const Vec &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double default_dt(const DeRhamComplex &cx, double dt) { return dt > 0.0 ? dt : 0.5 * cx.grid.h; }

double relative_charge(const DeRhamComplex &cx, const MaterialAssembly &as, const Vec &e)
{
  Vec me = as.M_eps * e;
  apply_mask(cx.pec_edge_mask, me);
  const double scale = cx.inv_h * max_abs(me);
  const double rho = max_abs(charge(cx, as, e));
  return scale > 0.0 ? rho / scale : rho;
}

FieldState scaled_sum(const FieldState &u, double a, const FieldState &v)
{
  FieldState w;
  w.e = u.e + a * v.e;
  w.b = u.b + a * v.b;
  return w;
}

// Mask of the collar edges that are retained by the PEC condition.
Mask observed_edges(const DeRhamComplex &cx, double a)
{
  Mask m = collar_mask(cx.grid, a).edges;
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = static_cast<std::uint8_t>(m[i] && cx.pec_edge_mask[i]);
  return m;
}

} // namespace

ObservedQuantity parse_observed_quantity(const std::string &name)
{
  if (name == "field")
    return ObservedQuantity::field;
  if (name == "derivative")
    return ObservedQuantity::derivative;
  throw Error(ErrorKind::invalid_parameter, "unknown observed quantity '" + name + "'");
}

std::string to_string(ObservedQuantity q) { return q == ObservedQuantity::field ? "field" : "derivative"; }

Vec pack(const FieldState &z)
{
  Vec x(z.e.size() + z.b.size());
  x << z.e, z.b;
  return x;
}

FieldState unpack(const StaggeredGrid &grid, const Vec &x)
{
  if (x.size() != grid.num_edges() + grid.num_faces())
    throw Error(ErrorKind::shape, "packed state has the wrong length");
  FieldState z;
  z.e = x.head(grid.num_edges());
  z.b = x.tail(grid.num_faces());
  return z;
}

// ---------------------------------------------------------------------------

Gramian::Gramian(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                 const GramianOptions &opts)
    : cx_(&complex), as_(&assembly), opts_(opts),
      steps_(step_count(opts.T, default_dt(complex, opts.dt))), dt_(opts.T / steps_),
      collar_(observed_edges(complex, opts.a)),
      stepper_(complex, assembly, dt_, opts.solver, false)
{
  weight_ = masked(collar_, assembly.edge_weight);
  if (assembly.eps_diagonal)
  {
    const Vec d = assembly.M_eps.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (weight_[i] > 0.0)
        density_bound_ = std::max(density_bound_, weight_[i] / d[i]);
  }
  else
    density_bound_ = max_abs(weight_) / std::max(assembly.eps_lower, 1e-300);
}

double Gramian::inner(const FieldState &u, const FieldState &v) const { return state_inner(*as_, u, v); }

FieldState Gramian::observe(const FieldState &z) const
{
  FieldState y;
  y.e = as_->eps_inverse.apply(weight_.cwiseProduct(z.e));
  y.b = Vec::Zero(z.b.size());
  return y;
}

void Gramian::check_charge_free(const FieldState &z) const
{
  const double rel = relative_charge(*cx_, *as_, z.e);
  if (rel > 1e-8)
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "Gramian input is not charge free (relative charge %.3e)", rel);
    throw Error(ErrorKind::consistency, buf);
  }
}

double Gramian::observed_energy(const FieldState &z0) const
{
  check_charge_free(z0);
  FieldState z = opts_.quantity == ObservedQuantity::derivative
                     ? apply_generator(*cx_, *as_, z0, nullptr, false)
                     : z0;
  z.e = apply_pec(*cx_, z.e);
  KahanSum acc;
  for (int k = 0; k < steps_; ++k)
  {
    const Vec em = stepper_.step(z.e, z.b);
    acc.add(dt_ * em.dot(weight_.cwiseProduct(em)));
  }
  return acc.value();
}

FieldState Gramian::apply(const FieldState &z0) const
{
  check_charge_free(z0);
  const bool deriv = opts_.quantity == ObservedQuantity::derivative;
  FieldState z = deriv ? apply_generator(*cx_, *as_, z0, nullptr, false) : z0;
  z.e = apply_pec(*cx_, z.e);

  std::vector<FieldState> y;
  y.reserve(static_cast<std::size_t>(steps_));
  for (int k = 0; k < steps_; ++k)
  {
    FieldState m;
    m.e = stepper_.step(z.e, z.b);
    m.b = Vec::Zero(z.b.size());
    y.push_back(observe(m));
  }

  // Horner evaluation of sum_k S^{-k} c_k with c_k = dt/2 (y_k + y_{k-1}).
  const double half = 0.5 * dt_;
  FieldState acc;
  acc.e = half * y.back().e;
  acc.b = Vec::Zero(z.b.size());
  for (int k = steps_ - 1; k >= 0; --k)
  {
    stepper_.step_backward(acc.e, acc.b);
    acc.e += half * y[static_cast<std::size_t>(k)].e;
    if (k > 0)
      acc.e += half * y[static_cast<std::size_t>(k - 1)].e;
  }
  FieldState out = project_charge_free(*cx_, *as_, acc, opts_.solver);
  if (deriv)
  {
    FieldState a = apply_generator(*cx_, *as_, out, nullptr, false);
    out.e = -a.e;
    out.b = -a.b;
    out = project_charge_free(*cx_, *as_, out, opts_.solver);
  }
  return out;
}

// ---------------------------------------------------------------------------

ObservabilityReport estimate_obs_constant(const DeRhamComplex &cx, const MaterialAssembly &as,
                                          const ObserveOptions &opts)
{
  const Gramian gram(cx, as, opts.gramian);
  const auto &grid = cx.grid;
  ObservabilityReport rep;
  rep.T = opts.gramian.T;
  rep.a = opts.gramian.a;
  rep.quantity = opts.gramian.quantity;
  rep.steps = gram.steps();

  const FieldState start = project_charge_free(cx, as, random_charge_free(cx, as, opts.seed), opts.gramian.solver);
  auto proj = [&](const Vec &x) { return pack(project_charge_free(cx, as, unpack(grid, x), opts.gramian.solver)); };
  auto op = [&](const Vec &x) { return pack(gram.apply(unpack(grid, proj(x)))); };
  auto inner = [&](const Vec &u, const Vec &v) {
    const Eigen::Index ne = grid.num_edges();
    return u.head(ne).dot(as.M_eps * v.head(ne)) +
           u.tail(grid.num_faces()).dot(magnetic_field(as, v.tail(grid.num_faces())));
  };

  const LanczosResult run = lanczos(op, pack(start), opts.iterations, inner, proj);
  const RitzPair lo = smallest_ritz(run);
  const RitzPair hi = largest_ritz(run);
  rep.iterations = static_cast<int>(run.alphas.size());
  rep.lambda_min = lo.value;
  rep.lambda_max = hi.value;
  rep.ritz_residual = lo.residual;
  rep.worst = unpack(grid, lo.vector);
  rep.floor = gram.density_bound() > 0.0 ? 1.0 / (rep.T * gram.density_bound())
                                         : std::numeric_limits<double>::infinity();
  if (!(lo.value > 1e-14 * std::abs(hi.value)))
  {
    rep.observable = false;
    rep.c_obs = std::numeric_limits<double>::infinity();
    rep.status = "not observable at this horizon";
  }
  else
  {
    rep.observable = true;
    rep.c_obs = 1.0 / lo.value;
    rep.status = "observable";
  }
  return rep;
}

double observation_quotient(const FieldState &z, const DeRhamComplex &cx, const MaterialAssembly &as,
                            const GramianOptions &opts)
{
  const Gramian gram(cx, as, opts);
  const double num = energy(as, z);
  const double den = gram.observed_energy(z);
  if (den > 0.0)
    return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

// ---------------------------------------------------------------------------

Vec control_forcing(const MaterialAssembly &assembly, const Vec &J) { return -(assembly.M_eps * J); }

namespace
{

// Orthogonal projection (in M_eps) onto collar-supported, weakly
// eps-divergence-free edge fields: chi (e - G q) with q on interior collar nodes.
class ControlProjector
{
public:
  ControlProjector(const DeRhamComplex &cx, const MaterialAssembly &as, double a,
                   const SolverOptions &opts)
      : cx_(&cx), opts_(opts)
  {
    const CollarMasks cm = collar_mask(cx.grid, a);
    chi_ = cm.edges;
    for (std::size_t i = 0; i < chi_.size(); ++i)
      chi_[i] = static_cast<std::uint8_t>(chi_[i] && cx.pec_edge_mask[i]);
    nodes_ = cm.nodes;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      nodes_[i] = static_cast<std::uint8_t>(nodes_[i] && cx.interior_node_mask[i]);
    weight_ = masked(chi_, as.M_eps.diagonal());
    Vec d = (cx.inv_h * cx.inv_h) * (SpMat(cx.G_inc.cwiseAbs2()).transpose() * weight_);
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (!nodes_[static_cast<std::size_t>(i)] || d[i] == 0.0)
        d[i] = 1.0;
    diag_ = d;
  }

  const Mask &support() const noexcept { return chi_; }

  Vec operator()(const Vec &e) const
  {
    const Vec ce = masked(chi_, e);
    Vec rhs = cx_->grad_t(weight_.cwiseProduct(ce));
    apply_mask(nodes_, rhs);
    auto op = [&](const Vec &q) {
      Vec qm = masked(nodes_, q);
      Vec y = cx_->grad_t(weight_.cwiseProduct(cx_->grad(qm)));
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!nodes_[static_cast<std::size_t>(i)])
          y[i] = q[i];
      return y;
    };
    Vec q = Vec::Zero(rhs.size());
    const JacobiPreconditioner jac(diag_);
    conjugate_gradient(op, rhs, q, opts_, &euclidean_dot, [&](const Vec &r) { return jac(r); });
    apply_mask(nodes_, q);
    return masked(chi_, ce - cx_->grad(q));
  }

private:
  const DeRhamComplex *cx_;
  SolverOptions opts_;
  Mask chi_;
  Mask nodes_;
  Vec weight_;
  Vec diag_;
};

} // namespace

ControlSolve hum_control(const FieldState &initial, const FieldState &target, const DeRhamComplex &cx,
                         const MaterialAssembly &as, const ControlOptions &opts)
{
  if (!as.eps_diagonal)
    throw Error(ErrorKind::unsupported_scheme, "HUM control requires a diagonal permittivity mass");
  if (target.e.size() != cx.grid.num_edges() || target.b.size() != cx.grid.num_faces())
    throw Error(ErrorKind::shape, "target does not match the grid");
  if (relative_charge(cx, as, target.e) > 1e-8)
    throw Error(ErrorKind::consistency, "control target is not charge free");

  ControlSolve out;
  const int N = step_count(opts.T, default_dt(cx, opts.dt));
  const double dt = opts.T / N;
  out.dt = dt;
  out.steps = N;
  out.target = target;
  const MidpointStepper stepper(cx, as, dt, opts.solver, false);
  const ControlProjector proj(cx, as, opts.a, opts.solver);

  // Free evolution of the initial state.
  FieldState free = initial;
  free.e = apply_pec(cx, free.e);
  for (int k = 0; k < N; ++k)
    stepper.step(free.e, free.b);
  const FieldState rhs = scaled_sum(target, -1.0, free);

  auto adjoint = [&](const FieldState &phi) {
    std::vector<Vec> psi_e;
    psi_e.reserve(static_cast<std::size_t>(N) + 1);
    FieldState psi = phi;
    psi_e.push_back(psi.e);
    for (int j = 0; j < N; ++j)
    {
      stepper.step_backward(psi.e, psi.b);
      psi_e.push_back(psi.e);
    }
    std::vector<Vec> J(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k)
    {
      const std::size_t j = static_cast<std::size_t>(N - 1 - k);
      J[static_cast<std::size_t>(k)] = -proj(0.5 * (psi_e[j] + psi_e[j + 1]));
    }
    return J;
  };
  auto forward = [&](const std::vector<Vec> &J) {
    FieldState z = FieldState::zero(cx.grid);
    for (int k = 0; k < N; ++k)
    {
      const Vec f = control_forcing(as, J[static_cast<std::size_t>(k)]);
      stepper.step(z.e, z.b, &f);
    }
    return z;
  };

  const auto &grid = cx.grid;
  auto gram = [&](const Vec &x) { return pack(forward(adjoint(unpack(grid, x)))); };
  auto inner = [&](const Vec &u, const Vec &v) {
    const Eigen::Index ne = grid.num_edges();
    return u.head(ne).dot(as.M_eps * v.head(ne)) +
           u.tail(grid.num_faces()).dot(magnetic_field(as, v.tail(grid.num_faces())));
  };

  SolverOptions cg_opts;
  cg_opts.tol = 0.1 * opts.tol;
  cg_opts.max_iter = opts.max_iter;
  Vec phi = Vec::Zero(grid.num_edges() + grid.num_faces());
  const CgResult res = conjugate_gradient(gram, pack(rhs), phi, cg_opts, inner, nullptr, false, true);
  out.cg_iterations = res.iterations;
  out.cg_residual = res.residual;
  out.condition_estimate = spectrum_from_cg(res).condition();
  if (!res.converged)
    throw ControlInfeasibleError("Gramian solve did not converge: relative residual " +
                                     std::to_string(res.residual) + " after " +
                                     std::to_string(res.iterations) + " iterations",
                                 out.condition_estimate);

  out.J = adjoint(unpack(grid, phi));
  KahanSum norm2;
  const Mask &chi = proj.support();
  for (const Vec &Jk : out.J)
  {
    norm2.add(dt * Jk.dot(as.M_eps * Jk));
    out.divergence_max = std::max(out.divergence_max, relative_charge(cx, as, Jk));
    for (Eigen::Index i = 0; i < Jk.size(); ++i)
      if (!chi[static_cast<std::size_t>(i)])
        out.support_leak = std::max(out.support_leak, std::abs(Jk[i]));
  }
  out.control_norm = std::sqrt(norm2.value());

  // Independent verification through the general simulation driver.
  SimulationOptions so;
  so.dt = dt;
  so.T = opts.T;
  so.solver = opts.solver;
  so.with_sigma = false;
  so.flux_lattice = false;
  so.forcing = [&](int n, double) { return control_forcing(as, out.J[static_cast<std::size_t>(n)]); };
  const SimulationResult sim = simulate(initial, cx, as, so);
  out.achieved = sim.final_state;
  const FieldState diff = scaled_sum(out.achieved, -1.0, target);
  const double tn = std::sqrt(std::max(energy(as, target), 0.0));
  const double dn = std::sqrt(std::max(energy(as, diff), 0.0));
  out.miss = tn > 0.0 ? dn / tn : dn;
  return out;
}

} // namespace maxdamp
