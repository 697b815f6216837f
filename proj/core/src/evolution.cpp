#include "maxdamp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace maxdamp
{

FieldState FieldState::zero(const StaggeredGrid &grid)
{
  FieldState z;
  z.e = Vec::Zero(grid.num_edges());
  z.b = Vec::Zero(grid.num_faces());
  return z;
}

Vec magnetic_field(const MaterialAssembly &assembly, const Vec &b) { return assembly.mu_inverse.apply(b); }

FieldState from_fields(const MaterialAssembly &assembly, const Vec &e, const Vec &h, double t)
{
  FieldState z;
  z.e = e;
  z.b = assembly.M_mu * h;
  z.t = t;
  return z;
}

double energy(const MaterialAssembly &assembly, const Vec &e, const Vec &b)
{
  return e.dot(assembly.M_eps * e) + b.dot(magnetic_field(assembly, b));
}

double energy(const MaterialAssembly &assembly, const FieldState &z) { return energy(assembly, z.e, z.b); }

EnergyPair energies(const FieldState &state, const FieldState &derivative,
                    const MaterialAssembly &assembly)
{
  return {energy(assembly, state), energy(assembly, derivative)};
}

double state_inner(const MaterialAssembly &assembly, const FieldState &u, const FieldState &v)
{
  return u.e.dot(assembly.M_eps * v.e) + u.b.dot(magnetic_field(assembly, v.b));
}

Vec faraday(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &e)
{
  return (assembly.curl_weight * complex.inv_h) * (complex.C_inc * e);
}

Vec ampere(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &b)
{
  Vec r = (assembly.curl_weight * complex.inv_h) *
          (complex.C_inc.transpose() * magnetic_field(assembly, b));
  apply_mask(complex.pec_edge_mask, r);
  return r;
}

FieldState apply_generator(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                           const FieldState &z, const Vec *forcing, bool with_sigma)
{
  FieldState d;
  Vec r = ampere(complex, assembly, z.b);
  if (with_sigma)
    r -= assembly.M_sigma * z.e;
  if (forcing)
    r += *forcing;
  apply_mask(complex.pec_edge_mask, r);
  d.e = assembly.eps_inverse.apply(r);
  d.b = -faraday(complex, assembly, z.e);
  d.t = z.t;
  return d;
}

Vec charge(const DeRhamComplex &complex, const MaterialAssembly &assembly, const Vec &e)
{
  Vec me = assembly.M_eps * e;
  apply_mask(complex.pec_edge_mask, me);
  Vec rho = complex.grad_t(me);
  apply_mask(complex.interior_node_mask, rho);
  return rho;
}

Scheme parse_scheme(const std::string &name)
{
  if (name == "midpoint")
    return Scheme::midpoint;
  if (name == "leapfrog")
    return Scheme::leapfrog;
  throw Error(ErrorKind::invalid_parameter, "unknown scheme '" + name + "'");
}

std::string to_string(Scheme scheme) { return scheme == Scheme::midpoint ? "midpoint" : "leapfrog"; }

// ---------------------------------------------------------------------------

MidpointStepper::MidpointStepper(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                                 double dt, const SolverOptions &opts, bool with_sigma)
    : cx_(&complex), as_(&assembly), dt_(dt), opts_(opts), with_sigma_(with_sigma)
{
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorKind::invalid_parameter, "time step must be positive");
  const auto &mask = complex.pec_edge_mask;
  const Eigen::Index ne = complex.grid.num_edges();

  SpMat lumped = (2.0 / dt) * assembly.M_eps;
  if (with_sigma)
    lumped += assembly.M_sigma;
  precond_ = MassInverse(lumped, mask);

  if (assembly.mu_diagonal)
  {
    const Vec inv_mu = assembly.M_mu.diagonal().cwiseInverse();
    const double wc = assembly.curl_weight * complex.inv_h;
    const double s = 0.5 * dt * wc * wc;
    SpMat cc = SpMat(complex.C_inc.transpose()) * inv_mu.asDiagonal() * complex.C_inc;
    SpMat full = lumped + s * cc;
    using Triplet = Eigen::Triplet<double, int>;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (int r = 0; r < full.outerSize(); ++r)
    {
      if (!mask[static_cast<std::size_t>(r)])
      {
        trip.emplace_back(r, r, 1.0);
        continue;
      }
      for (SpMat::InnerIterator it(full, r); it; ++it)
        if (mask[static_cast<std::size_t>(it.col())] && it.value() != 0.0)
          trip.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
    system_.resize(ne, ne);
    system_.setFromTriplets(trip.begin(), trip.end());
    assembled_ = true;
  }
}

Vec MidpointStepper::apply_system(const Vec &x) const
{
  if (assembled_)
    return system_ * x;
  Vec y = (2.0 / dt_) * (as_->M_eps * x);
  if (with_sigma_)
    y += as_->M_sigma * x;
  apply_mask(cx_->pec_edge_mask, y);
  y += (0.5 * dt_) * ampere(*cx_, *as_, faraday(*cx_, *as_, x));
  return y;
}

Vec MidpointStepper::step(Vec &e, Vec &b, const Vec *forcing, const FluxLattice *lattice,
                          CgResult *info) const
{
  // Residual of the midpoint system at e_m = e, formed without the
  // (2/dt) M_eps e terms that cancel.
  Vec r0 = ampere(*cx_, *as_, b - (0.5 * dt_) * faraday(*cx_, *as_, e));
  if (with_sigma_)
    r0 -= as_->M_sigma * e;
  if (forcing)
    r0 += *forcing;
  apply_mask(cx_->pec_edge_mask, r0);

  Vec delta = Vec::Zero(e.size());
  const auto res = conjugate_gradient([this](const Vec &x) { return apply_system(x); }, r0, delta,
                                      opts_, &euclidean_dot,
                                      [this](const Vec &r) { return precond_.apply(r); });
  if (info)
    *info = res;

  Vec e_mid = e + delta;
  e += 2.0 * delta;
  if (lattice)
  {
    Vec inc = (dt_ * as_->curl_weight * cx_->inv_h) * e_mid;
    lattice->snap(inc);
    b -= cx_->C_inc * inc;
  }
  else
    b -= dt_ * faraday(*cx_, *as_, e_mid);
  return e_mid;
}

Vec MidpointStepper::step_backward(Vec &e, Vec &b, CgResult *info) const
{
  if (with_sigma_ && as_->damped())
    throw Error(ErrorKind::unsupported_scheme, "backward stepping requires sigma = 0");
  b = -b;
  Vec e_mid = step(e, b, nullptr, nullptr, info);
  b = -b;
  return e_mid;
}

// ---------------------------------------------------------------------------

double LeapfrogStepper::cfl_limit(const DeRhamComplex &complex, const MaterialAssembly &assembly)
{
  return complex.grid.h * std::sqrt(assembly.eps_min_value * assembly.mu_min_value) / std::sqrt(3.0);
}

LeapfrogStepper::LeapfrogStepper(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                                 double dt)
    : cx_(&complex), as_(&assembly), dt_(dt)
{
  if (!assembly.eps_diagonal || !assembly.mu_diagonal)
    throw Error(ErrorKind::unsupported_scheme, "leapfrog requires diagonal mass matrices");
  if (!(dt > 0.0))
    throw Error(ErrorKind::invalid_parameter, "time step must be positive");
  const double limit = cfl_limit(complex, assembly);
  if (dt > limit)
    throw Error(ErrorKind::stability, "dt = " + std::to_string(dt) + " exceeds the CFL bound " +
                                          std::to_string(limit));
  const Vec me = assembly.M_eps.diagonal();
  const Vec ms = assembly.M_sigma.diagonal();
  lhs_inv_ = Vec::Zero(me.size());
  rhs_diag_ = Vec::Zero(me.size());
  for (Eigen::Index i = 0; i < me.size(); ++i)
  {
    if (!complex.pec_edge_mask[static_cast<std::size_t>(i)])
      continue;
    lhs_inv_[i] = 1.0 / (me[i] / dt + 0.5 * ms[i]);
    rhs_diag_[i] = me[i] / dt - 0.5 * ms[i];
  }
}

Vec LeapfrogStepper::half_flux(const Vec &e, const Vec &b, double sign) const
{
  return b + (sign * 0.5 * dt_) * faraday(*cx_, *as_, e);
}

Vec LeapfrogStepper::step(Vec &e, Vec &b, Vec &b_half, const FluxLattice *lattice) const
{
  auto kick = [&](const Vec &field, Vec &flux) {
    if (lattice)
    {
      Vec inc = (0.5 * dt_ * as_->curl_weight * cx_->inv_h) * field;
      lattice->snap(inc);
      flux -= cx_->C_inc * inc;
    }
    else
      flux -= (0.5 * dt_) * faraday(*cx_, *as_, field);
  };
  b_half = b;
  kick(e, b_half);
  Vec e1 = lhs_inv_.cwiseProduct(rhs_diag_.cwiseProduct(e) + ampere(*cx_, *as_, b_half));
  apply_mask(cx_->pec_edge_mask, e1);
  b = b_half;
  kick(e1, b);
  Vec e_mid = 0.5 * (e + e1);
  e = std::move(e1);
  return e_mid;
}

// ---------------------------------------------------------------------------

int step_count(double T, double dt)
{
  if (!(T > 0.0) || !std::isfinite(T))
    throw Error(ErrorKind::invalid_parameter, "final time T must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorKind::invalid_parameter, "time step must be positive");
  const double ratio = T / dt;
  const double steps = std::ceil(ratio - 1e-9 * ratio);
  if (steps > 1e8)
    throw Error(ErrorKind::budget, "step count exceeds 1e8");
  return std::max(1, static_cast<int>(steps));
}

namespace
{

double max_abs(const Vec &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Range of the flux lattice needed for a run with the given energy budget.
FluxLattice lattice_for(const DeRhamComplex &cx, const MaterialAssembly &as, const FieldState &z0,
                        double dt, double forcing_budget)
{
  const double e0 = energy(as, z0);
  const double eps_lower = std::max(as.eps_lower, 1e-300);
  const double root = std::sqrt(std::max(e0, 0.0)) + forcing_budget / std::sqrt(eps_lower);
  const double bound_b = 8.0 * std::sqrt(as.mu_upper) * root;
  const double bound_inc = 2.0 * dt * as.curl_weight * cx.inv_h * root / std::sqrt(eps_lower);
  return FluxLattice::covering(std::max({bound_b, bound_inc, 2.0 * max_abs(z0.b)}));
}

} // namespace

SimulationResult simulate(const FieldState &initial, const DeRhamComplex &cx,
                          const MaterialAssembly &as, const SimulationOptions &opt)
{
  const int N = step_count(opt.T, opt.dt);
  const double dt = opt.T / N;
  if (opt.record_every < 1)
    throw Error(ErrorKind::invalid_parameter, "record_every must be >= 1");
  if (initial.e.size() != cx.grid.num_edges() || initial.b.size() != cx.grid.num_faces())
    throw Error(ErrorKind::shape, "initial state does not match the grid");

  const bool forced = static_cast<bool>(opt.forcing);
  const bool leap = opt.scheme == Scheme::leapfrog;
  if (leap && forced)
    throw Error(ErrorKind::unsupported_scheme, "leapfrog runs do not accept forcing");
  const bool with_sigma = opt.with_sigma;
  const bool track_d = opt.track_derivative && !forced;

  std::unique_ptr<MidpointStepper> mid;
  std::unique_ptr<LeapfrogStepper> lf;
  if (leap)
    lf = std::make_unique<LeapfrogStepper>(cx, as, dt);
  else
    mid = std::make_unique<MidpointStepper>(cx, as, dt, opt.solver, with_sigma);

  SimulationResult out;
  RunDiagnostics &dg = out.diagnostics;
  TimeSeries &ts = out.series;
  dg.steps = N;
  dg.dt = dt;
  dg.scheme = opt.scheme;

  FieldState z = initial;
  z.e = apply_pec(cx, z.e);
  z.t = 0.0;

  FluxLattice lattice;
  if (opt.flux_lattice)
  {
    double budget = 0.0;
    if (forced)
      for (int n = 0; n < N; ++n)
        budget += dt * opt.forcing(n, (n + 0.5) * dt).norm();
    lattice = lattice_for(cx, as, z, dt, budget);
    lattice.snap(z.b);
    dg.flux_quantum = lattice.quantum();
  }
  const FluxLattice *lat = opt.flux_lattice ? &lattice : nullptr;

  FieldState d;
  if (track_d)
    d = apply_generator(cx, as, z, nullptr, with_sigma);

  const Vec Db0 = cx.D_inc * z.b;
  std::vector<Eigen::Index> zero_boundary;
  for (Eigen::Index f = 0; f < z.b.size(); ++f)
    if (cx.boundary_face_mask[static_cast<std::size_t>(f)] && z.b[f] == 0.0)
      zero_boundary.push_back(f);

  const auto &free_nodes = as.free_node_mask;
  auto masked_norm = [](const Vec &v, const Mask &m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (m[static_cast<std::size_t>(i)])
        s += v[i] * v[i];
    return std::sqrt(s);
  };

  double En = energy(as, z);
  double Dn = track_d ? energy(as, d) : std::numeric_limits<double>::quiet_NaN();
  dg.energy0 = En;
  dg.denergy0 = Dn;
  const double escale = En > 0.0 ? En : 1.0;
  const double dscale = (track_d && Dn > 0.0) ? Dn : 1.0;

  Vec rho = charge(cx, as, z.e);
  Vec rho_pred = rho;
  auto charge_mag = [&](const Vec &e) {
    Vec me = as.M_eps * e;
    apply_mask(cx.pec_edge_mask, me);
    return cx.inv_h * max_abs(me);
  };
  dg.charge_scale = charge_mag(z.e);

  KahanSum diss, work;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Leapfrog staggered energy W^n = e_n.M_eps.e_n + b_{n-1/2}.M_mu^{-1}.b_{n+1/2}.
  auto staggered = [&](const Vec &e, const Vec &b_minus, const Vec &b_plus) {
    return e.dot(as.M_eps * e) + b_minus.dot(magnetic_field(as, b_plus));
  };
  double Wn = nan;
  if (leap)
    Wn = staggered(z.e, lf->half_flux(z.e, z.b, 1.0), lf->half_flux(z.e, z.b, -1.0));

  auto record = [&](const FieldState &zs, double Ecur, double Dcur, double W) {
    ts.t.push_back(zs.t);
    ts.energy.push_back(Ecur);
    ts.denergy.push_back(Dcur);
    ts.dissipation_cum.push_back(diss.value());
    ts.charge_upsilon.push_back(masked_norm(rho, free_nodes));
    ts.charge_total.push_back(masked_norm(rho, cx.interior_node_mask));
    ts.split_residual.push_back(nan);
    ts.staggered_energy.push_back(W);
    if (opt.keep_states)
      out.states.push_back(zs);
  };
  record(z, En, Dn, Wn);

  Vec b_half;
  for (int n = 0; n < N; ++n)
  {
    const double t0 = n * dt;
    Vec f;
    if (forced)
    {
      f = opt.forcing(n, t0 + 0.5 * dt);
      if (f.size() != z.e.size())
        throw Error(ErrorKind::shape, "forcing vector has the wrong length");
      apply_mask(cx.pec_edge_mask, f);
    }
    const Vec e_prev = z.e;
    const Vec b_prev = z.b;
    Vec e_mid;
    if (leap)
      e_mid = lf->step(z.e, z.b, b_half, lat);
    else
    {
      CgResult info;
      e_mid = mid->step(z.e, z.b, forced ? &f : nullptr, lat, &info);
      dg.cg_iterations_max = std::max(dg.cg_iterations_max, info.iterations);
      dg.cg_iterations_total += info.iterations;
      dg.cg_residual_max = std::max(dg.cg_residual_max, info.residual);
    }
    z.t = (n + 1) * dt;

    const double sig = with_sigma ? e_mid.dot(as.M_sigma * e_mid) : 0.0;
    const double fw = forced ? f.dot(e_mid) : 0.0;
    diss.add(2.0 * dt * sig);
    work.add(2.0 * dt * fw);

    const double En1 = energy(as, z);
    if (leap)
    {
      const double W1 = staggered(z.e, b_half, lf->half_flux(z.e, z.b, -1.0));
      dg.energy_balance_max =
          std::max(dg.energy_balance_max, std::abs((Wn - W1) - 2.0 * dt * sig) / escale);
      if (!(W1 < Wn) && as.damped() && with_sigma)
        dg.staggered_energy_strictly_decreasing = false;
      Wn = W1;
    }
    else
    {
      dg.energy_balance_max = std::max(
          dg.energy_balance_max, std::abs((En - En1) - 2.0 * dt * sig + 2.0 * dt * fw) / escale);
    }
    if (!forced)
      dg.energy_increase_max = std::max(dg.energy_increase_max, (En1 - En) / escale);
    En = En1;

    if (track_d)
    {
      Vec d_mid;
      if (leap)
      {
        Vec dh;
        d_mid = lf->step(d.e, d.b, dh, nullptr);
      }
      else
        d_mid = mid->step(d.e, d.b, nullptr, nullptr);
      const double dsig = with_sigma ? d_mid.dot(as.M_sigma * d_mid) : 0.0;
      const double Dn1 = energy(as, d);
      if (!leap)
        dg.denergy_balance_max =
            std::max(dg.denergy_balance_max, std::abs((Dn - Dn1) - 2.0 * dt * dsig) / dscale);
      Dn = Dn1;
    }

    // Charge law.
    Vec src = forced ? Vec(f) : Vec::Zero(z.e.size());
    if (with_sigma)
      src -= as.M_sigma * e_mid;
    apply_mask(cx.pec_edge_mask, src);
    Vec inc = cx.grad_t(src);
    apply_mask(cx.interior_node_mask, inc);
    rho_pred += dt * inc;
    rho = charge(cx, as, z.e);
    dg.charge_scale = std::max(dg.charge_scale, charge_mag(z.e));
    dg.charge_law_abs = std::max(dg.charge_law_abs, max_abs(rho - rho_pred));

    if (opt.flux_lattice)
    {
      if ((cx.D_inc * z.b).cwiseNotEqual(Db0).any())
        dg.magnetic_constraints_exact = false;
    }
    for (auto f_idx : zero_boundary)
      if (z.b[f_idx] != 0.0)
        dg.magnetic_constraints_exact = false;

    if (opt.observer)
    {
      StepView v;
      v.step = n;
      v.t0 = t0;
      v.dt = dt;
      v.e0 = &e_prev;
      v.b0 = &b_prev;
      v.e1 = &z.e;
      v.b1 = &z.b;
      v.e_mid = &e_mid;
      v.forcing = forced ? &f : nullptr;
      opt.observer(v);
    }

    if ((n + 1) % opt.record_every == 0 || n + 1 == N)
      record(z, En, Dn, Wn);
  }

  dg.charge_law_max = dg.charge_scale > 0.0 ? dg.charge_law_abs / dg.charge_scale : dg.charge_law_abs;
  dg.dissipation_total = diss.value();
  dg.work_total = work.value();
  out.final_state = z;
  if (track_d)
  {
    d.t = z.t;
    out.final_derivative = d;
  }
  return out;
}

ChargeSeries charge_trace(const std::vector<Vec> &e_states, const std::vector<Vec> &e_mids,
                          const std::vector<Vec> &forcings, double dt,
                          const DeRhamComplex &complex, const MaterialAssembly &assembly)
{
  if (e_states.empty() || e_mids.size() + 1 != e_states.size())
    throw Error(ErrorKind::shape, "charge trace needs n+1 states and n midpoint fields");
  if (!forcings.empty() && forcings.size() != e_mids.size())
    throw Error(ErrorKind::shape, "forcing list length does not match the step count");
  ChargeSeries out;
  Vec pred = charge(complex, assembly, e_states.front());
  out.rho.push_back(pred);
  out.predicted.push_back(pred);
  for (std::size_t n = 0; n < e_mids.size(); ++n)
  {
    Vec src = -(assembly.M_sigma * e_mids[n]);
    if (!forcings.empty())
      src += forcings[n];
    apply_mask(complex.pec_edge_mask, src);
    Vec inc = complex.grad_t(src);
    apply_mask(complex.interior_node_mask, inc);
    pred += dt * inc;
    Vec rho = charge(complex, assembly, e_states[n + 1]);
    out.max_residual = std::max(out.max_residual, max_abs(rho - pred));
    out.rho.push_back(std::move(rho));
    out.predicted.push_back(pred);
  }
  for (const Vec &e : e_states)
  {
    Vec me = assembly.M_eps * e;
    apply_mask(complex.pec_edge_mask, me);
    out.scale = std::max(out.scale, complex.inv_h * max_abs(me));
  }
  return out;
}

} // namespace maxdamp
