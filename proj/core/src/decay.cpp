#include "maxdamp/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maxdamp
{

namespace
{

double max_abs(const Vec &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double x_norm(const MaterialAssembly &as, const Vec &e, const Vec &b)
{
  return std::sqrt(std::max(energy(as, e, b), 0.0));
}

void resolve_window(const DecayOptions &opts, double &t1, double &t2)
{
  t1 = opts.t1 < 0.0 ? 0.25 * opts.T : opts.t1;
  t2 = opts.t2 < 0.0 ? 0.9 * opts.T : opts.t2;
}

SimulationOptions run_options(const DeRhamComplex &cx, const DecayOptions &opts)
{
  if (!(opts.T > 0.0))
    throw Error(ErrorKind::invalid_parameter, "decay horizon T must be positive");
  SimulationOptions so;
  so.T = opts.T;
  so.dt = opts.dt > 0.0 ? opts.dt : 0.5 * cx.grid.h;
  so.solver = opts.solver;
  return so;
}

// Operator of the constrained normal equations on free nodes.
Vec free_operator(const DeRhamComplex &cx, const MaterialAssembly &as, const Vec &phi)
{
  Vec p = phi;
  apply_mask(as.free_node_mask, p);
  Vec me = as.M_eps * cx.grad(p);
  apply_mask(cx.pec_edge_mask, me);
  Vec y = cx.grad_t(me);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!as.free_node_mask[static_cast<std::size_t>(i)])
      y[i] = phi[i];
  return y;
}

} // namespace

DecayFit fit_decay(const std::vector<double> &t, const std::vector<double> &E, double t1, double t2)
{
  if (t.size() != E.size() || t.size() < 2)
    throw Error(ErrorKind::interface, "decay series needs matching t and E with at least two samples");
  const double slack = 1e-9 * std::max(1.0, std::abs(t.back()));
  if (!(t1 < t2) || t1 < t.front() - slack || t2 > t.back() + slack)
    throw Error(ErrorKind::range, "fit window [" + std::to_string(t1) + ", " + std::to_string(t2) +
                                      "] lies outside the series [" + std::to_string(t.front()) +
                                      ", " + std::to_string(t.back()) + "]");
  DecayFit out;
  out.t1 = t1;
  out.t2 = t2;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
  {
    if (t[i] < t1 - slack || t[i] > t2 + slack)
      continue;
    if (!(E[i] > 0.0))
    {
      out.full_decay = true;
      continue;
    }
    const double y = std::log(E[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    ++m;
  }
  out.points = m;
  if (out.full_decay)
  {
    out.omega_fit = std::numeric_limits<double>::infinity();
    out.M_fit = 1.0;
    out.dominated = true;
    return out;
  }
  if (m < 2)
    throw Error(ErrorKind::range, "fit window holds fewer than two samples");
  const double md = static_cast<double>(m);
  const double den = md * stt - st * st;
  const double slope = (md * sty - st * sy) / den;
  out.intercept = (sy - slope * st) / md;
  out.omega_fit = -0.5 * slope;

  const double E0 = E.front();
  double M = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t1 - slack && t[i] <= t2 + slack)
      M = std::max(M, E[i] / (E0 * std::exp(-2.0 * out.omega_fit * t[i])));
  out.M_fit = M;
  out.dominated = true;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t1 - slack && t[i] <= t2 + slack &&
        E[i] > (1.0 + 1e-12) * M * E0 * std::exp(-2.0 * out.omega_fit * t[i]))
      out.dominated = false;
  return out;
}

RatioED check_E_dominated_by_D(const TimeSeries &s, double tol)
{
  RatioED out;
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    const double E = s.energy[i];
    const double D = s.denergy[i];
    if (!(D > tol * std::max(1.0, E)))
    {
      if (E > tol)
      {
        out.finite = false;
        out.outside_X = true;
        out.ratio = std::numeric_limits<double>::infinity();
        return out;
      }
      continue;
    }
    out.ratio = std::max(out.ratio, E / D);
  }
  return out;
}

std::vector<double> check_contraction(const TimeSeries &s, const std::vector<double> &horizons)
{
  if (s.size() == 0)
    throw Error(ErrorKind::interface, "empty series");
  const double base = s.energy.front() + s.denergy.front();
  std::vector<double> out;
  for (double T : horizons)
  {
    const double slack = 1e-9 * std::max(1.0, T);
    if (T > s.t.back() + slack || T < 0.0)
      throw Error(ErrorKind::range, "contraction horizon " + std::to_string(T) + " outside the run");
    std::size_t k = 0;
    while (k + 1 < s.size() && s.t[k] < T - slack)
      ++k;
    out.push_back(base > 0.0 ? (s.energy[k] + s.denergy[k]) / base : 0.0);
  }
  return out;
}

DecayReport analyze_decay(const FieldState &initial, const DeRhamComplex &cx,
                          const MaterialAssembly &as, const DecayOptions &opts)
{
  DecayReport rep;
  SimulationOptions so = run_options(cx, opts);
  KahanSum lhs, dE, diss;
  so.observer = [&](const StepView &v) {
    const Vec de = (*v.e1 - *v.e0) / v.dt;
    const Vec db = (*v.b1 - *v.b0) / v.dt;
    lhs.add(v.dt * db.dot(magnetic_field(as, db)));
    dE.add(v.dt * de.dot(as.M_eps * de));
    diss.add(v.dt * v.e_mid->dot(as.M_sigma * *v.e_mid));
  };
  rep.run = simulate(initial, cx, as, so);
  const TimeSeries &s = rep.run.series;

  double t1 = 0.0, t2 = 0.0;
  resolve_window(opts, t1, t2);
  rep.fit = fit_decay(s.t, s.energy, t1, t2);

  rep.horizons = opts.horizons.empty() ? std::vector<double>{opts.T} : opts.horizons;
  rep.gamma = check_contraction(s, rep.horizons);
  rep.gamma_T = rep.gamma.back();
  rep.ratio_ED = check_E_dominated_by_D(s);

  rep.dtH.lhs = lhs.value();
  rep.dtH.dE = dE.value();
  rep.dtH.dissipation = diss.value();
  const double rhs = (1.0 + opts.T) * rep.dtH.dE + rep.dtH.dissipation;
  if (rhs > 0.0)
    rep.dtH.constant = rep.dtH.lhs / rhs;
  else
    rep.dtH.zero_data = true;
  return rep;
}

std::size_t predicted_kernel_dimension(const DeRhamComplex &cx, const MaterialAssembly &as)
{
  return count(as.free_node_mask) + static_cast<std::size_t>(cx.grid.cells) +
         count(cx.boundary_face_mask) - 1;
}

EquilibriumProjection project_equilibrium(const FieldState &z, const DeRhamComplex &cx,
                                          const MaterialAssembly &as, const SolverOptions &opts)
{
  if (z.e.size() != cx.grid.num_edges() || z.b.size() != cx.grid.num_faces())
    throw Error(ErrorKind::shape, "state has the wrong length");
  EquilibriumProjection out;
  out.free_nodes = count(as.free_node_mask);
  out.kernel_dimension = predicted_kernel_dimension(cx, as);

  const Vec e0 = apply_pec(cx, z.e);
  Vec rhs = as.M_eps * e0;
  apply_mask(cx.pec_edge_mask, rhs);
  rhs = cx.grad_t(rhs);
  apply_mask(as.free_node_mask, rhs);

  Vec phi = Vec::Zero(rhs.size());
  if (out.free_nodes > 0)
  {
    const auto res = conjugate_gradient([&](const Vec &x) { return free_operator(cx, as, x); }, rhs,
                                        phi, opts);
    out.e_residual = res.residual;
    out.e_iterations = res.iterations;
  }
  apply_mask(as.free_node_mask, phi);

  // e-part = G_inc phi_hat with phi_hat on a dyadic lattice: differences and
  // their curl sums are exact, so C e-part vanishes identically.
  Vec scaled = cx.inv_h * phi;
  const FluxLattice lat = FluxLattice::covering(std::max(max_abs(scaled), max_abs(e0)));
  lat.snap(scaled);
  out.phi = scaled;
  FieldState P;
  P.e = cx.G_inc * scaled;
  out.flux = split_flux(z.b, cx, as, opts);
  P.b = out.flux.kernel;
  P.t = z.t;

  out.curl_e_part = max_abs(cx.curl(P.e));
  double collar = 0.0;
  for (Eigen::Index i = 0; i < P.e.size(); ++i)
    if (as.collar_edge_mask[static_cast<std::size_t>(i)])
      collar = std::max(collar, std::abs(P.e[i]));
  out.collar_e_part = collar;
  const Vec hk = magnetic_field(as, P.b);
  const double scale = 4.0 * as.curl_weight * cx.inv_h * hk.norm();
  out.ampere_b_part = scale > 0.0 ? ampere(cx, as, P.b).norm() / scale : 0.0;
  out.projected = std::move(P);
  return out;
}

ConvergenceReport check_convergence_to_P(const FieldState &initial, const DeRhamComplex &cx,
                                         const MaterialAssembly &as, const DecayOptions &opts)
{
  ConvergenceReport rep;
  const EquilibriumProjection proj = project_equilibrium(initial, cx, as, opts.solver);
  const FieldState &P = proj.projected;
  rep.data_norm = x_norm(as, initial.e, initial.b);
  rep.projected_norm = x_norm(as, P.e, P.b);

  SimulationOptions so = run_options(cx, opts);
  rep.t.push_back(0.0);
  rep.gap.push_back(x_norm(as, apply_pec(cx, initial.e) - P.e, initial.b - P.b));
  so.observer = [&](const StepView &v) {
    rep.t.push_back(v.t0 + v.dt);
    rep.gap.push_back(x_norm(as, *v.e1 - P.e, *v.b1 - P.b));
  };
  simulate(initial, cx, as, so);

  std::vector<double> gap2(rep.gap.size());
  for (std::size_t i = 0; i < gap2.size(); ++i)
    gap2[i] = rep.gap[i] * rep.gap[i];
  double t1 = 0.0, t2 = 0.0;
  resolve_window(opts, t1, t2);
  rep.fit = fit_decay(rep.t, gap2, t1, t2);
  rep.final_gap = rep.gap.back();
  if (rep.fit.full_decay)
    rep.envelope_final = 0.0;
  else
    rep.envelope_final =
        std::sqrt(rep.fit.M_fit) * std::exp(-rep.fit.omega_fit * rep.t.back()) * rep.gap.front();
  rep.converged = rep.fit.omega_fit > 0.0 &&
                  (rep.fit.full_decay || rep.final_gap <= (1.0 + 1e-9) * rep.envelope_final);
  return rep;
}

} // namespace maxdamp
