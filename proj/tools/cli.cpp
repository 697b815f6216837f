#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "maxdamp/config.hpp"
#include "maxdamp/decay.hpp"
#include "maxdamp/dense.hpp"
#include "maxdamp/helmholtz.hpp"
#include "maxdamp/initial_data.hpp"
#include "maxdamp/observability.hpp"
#include "maxdamp/snapshot.hpp"

namespace maxdamp::cli
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace
{

json num(double x)
{
  if (std::isfinite(x))
    return x;
  if (std::isnan(x))
    return "nan";
  return x > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double> &v)
{
  json a = json::array();
  for (double x : v)
    a.push_back(num(x));
  return a;
}

json point(const Point &p) { return json::array({p[0], p[1], p[2]}); }

std::string fmt(double x)
{
  if (std::isnan(x))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Context
{
  ExperimentConfig cfg;
  std::string command;
  fs::path out;
  std::uint64_t seed = 1;
  int jobs = 1;
  StaggeredGrid grid;
  DeRhamComplex cx;
  MaterialAssembly as;

  double dt() const { return cfg.time.dt > 0.0 ? cfg.time.dt : 0.5 * grid.h; }
};

void write_text(const fs::path &path, const std::string &text)
{
  std::ofstream f(path);
  if (!f)
    throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  f << text;
}

void write_json(const Context &ctx, const json &j)
{
  if (ctx.cfg.output.json)
    write_text(ctx.out / (ctx.command + ".json"), j.dump(2) + "\n");
}

void write_series(const Context &ctx, const TimeSeries &s)
{
  if (ctx.cfg.output.csv)
    write_text(ctx.out / (ctx.command + ".csv"), series_csv(s));
}

void write_state(const Context &ctx, const std::string &name, const FieldState &z)
{
  if (!ctx.cfg.output.snapshots)
    return;
  SnapshotHeader h;
  h.n = ctx.grid.n;
  h.length = ctx.grid.length;
  h.time = z.t;
  h.name = name + "_e";
  h.kind = FieldKind::edge;
  h.dofs = dof_count(ctx.grid, h.kind);
  write_snapshot((ctx.out / h.name).string(), h, z.e);
  h.name = name + "_b";
  h.kind = FieldKind::face;
  h.dofs = dof_count(ctx.grid, h.kind);
  write_snapshot((ctx.out / h.name).string(), h, z.b);
}

FieldState make_data(const Context &ctx, const std::string &kind, std::uint64_t seed)
{
  if (kind == "random_charge_free")
    return random_charge_free(ctx.cx, ctx.as, seed);
  if (kind == "random_state")
    return random_state(ctx.cx, ctx.as, seed);
  if (kind == "standing_wave")
    return standing_wave(ctx.cx);
  if (kind == "bump")
    return centered_bump(ctx.cx, ctx.as, ctx.cfg.data.width);
  throw Error(ErrorKind::invalid_parameter, "unknown data kind '" + kind + "'");
}

json header(const Context &ctx)
{
  json j;
  j["command"] = ctx.command;
  j["grid"] = {{"n", ctx.grid.n}, {"length", ctx.grid.length}, {"h", ctx.grid.h}};
  j["dofs"] = {{"nodes", ctx.grid.nodes},
               {"edges", ctx.grid.num_edges()},
               {"faces", ctx.grid.num_faces()},
               {"cells", ctx.grid.cells}};
  const auto &m = ctx.cfg.materials;
  j["materials"] = {{"epsilon", to_string(m.epsilon.kind())},
                    {"epsilon_params", m.epsilon.params()},
                    {"mu", to_string(m.mu.kind())},
                    {"mu_params", m.mu.params()},
                    {"x0", point(m.x0)},
                    {"sigma0", m.sigma.sigma0},
                    {"a", m.sigma.a},
                    {"profile", to_string(m.sigma.profile)}};
  j["seed"] = ctx.seed;
  return j;
}

json diagnostics_json(const RunDiagnostics &d)
{
  return {{"steps", d.steps},
          {"dt", d.dt},
          {"scheme", to_string(d.scheme)},
          {"energy0", d.energy0},
          {"denergy0", d.denergy0},
          {"energy_balance_max", d.energy_balance_max},
          {"denergy_balance_max", d.denergy_balance_max},
          {"energy_increase_max", d.energy_increase_max},
          {"charge_law_max", d.charge_law_max},
          {"charge_law_abs", d.charge_law_abs},
          {"charge_scale", d.charge_scale},
          {"dissipation_total", d.dissipation_total},
          {"work_total", d.work_total},
          {"magnetic_constraints_exact", d.magnetic_constraints_exact},
          {"flux_quantum", d.flux_quantum},
          {"cg_iterations_max", d.cg_iterations_max},
          {"cg_iterations_total", d.cg_iterations_total},
          {"cg_residual_max", d.cg_residual_max},
          {"staggered_energy_strictly_decreasing", d.staggered_energy_strictly_decreasing}};
}

double masked_norm(const Vec &v, const Mask &m)
{
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (m[static_cast<std::size_t>(i)])
      s += v[i] * v[i];
  return std::sqrt(s);
}

int cmd_check(Context &ctx)
{
  json j = header(ctx);
  const NonTrapReport nt = check_nontrapping(ctx.cfg.materials, ctx.grid);
  bool pass = nt.pass;
  j["nontrapping"] = {{"eta_eps", nt.eta_eps},
                      {"eta_mu", nt.eta_mu},
                      {"worst_point_eps", point(nt.worst_point_eps)},
                      {"worst_point_mu", point(nt.worst_point_mu)},
                      {"worst_point", point(nt.worst_point)},
                      {"pass", nt.pass}};
  try
  {
    ctx.as = sample_materials(ctx.cx, ctx.cfg.materials);
    const SpdReport se = check_spd(ctx.as.M_eps);
    const SpdReport sm = check_spd(ctx.as.M_mu);
    j["spd"] = {{"eps", {{"min_rayleigh", se.min_rayleigh}, {"ritz_min", se.ritz_min}, {"pass", se.pass}}},
                {"mu", {{"min_rayleigh", sm.min_rayleigh}, {"ritz_min", sm.ritz_min}, {"pass", sm.pass}}}};
    pass = pass && se.pass && sm.pass;
    const SigmaGapReport sg = check_sigma_gap(ctx.as, ctx.cfg.materials.sigma.sigma0);
    j["sigma_gap"] = {{"pass", sg.pass}, {"undamped", sg.undamped}, {"offending", sg.offending.size()}};
    pass = pass && (sg.pass || sg.undamped);
    j["collar"] = {{"edges", count(ctx.as.collar_edge_mask)},
                   {"cells", count(ctx.as.collar_cell_mask)},
                   {"upsilon_cells", count(ctx.as.upsilon_cell_mask)},
                   {"free_nodes", count(ctx.as.free_node_mask)}};
  }
  catch (const Error &e)
  {
    if (e.kind() != ErrorKind::material)
      throw;
    j["spd"] = {{"pass", false}, {"message", e.what()}};
    pass = false;
  }
  j["pass"] = pass;
  write_json(ctx, j);
  return pass ? exit_pass : exit_check_failed;
}

int cmd_simulate(Context &ctx, std::ostream &out)
{
  SimulationOptions so;
  so.dt = ctx.dt();
  so.T = ctx.cfg.time.T;
  so.scheme = ctx.cfg.time.scheme;
  so.record_every = ctx.cfg.time.record_every;
  so.solver = ctx.cfg.solver;
  const FieldState z0 = make_data(ctx, ctx.cfg.data.kind, ctx.seed);
  const SimulationResult run = simulate(z0, ctx.cx, ctx.as, so);
  const auto &d = run.diagnostics;

  double drift = 0.0;
  for (double E : run.series.energy)
    drift = std::max(drift, std::abs(E - d.energy0) / d.energy0);

  bool pass = d.magnetic_constraints_exact;
  if (d.scheme == Scheme::midpoint)
    pass = pass && d.energy_balance_max <= 1e-10 && d.denergy_balance_max <= 1e-10 && d.charge_law_max <= 1e-10;
  else if (ctx.as.damped())
    pass = pass && d.staggered_energy_strictly_decreasing;
  if (!ctx.as.damped() && d.scheme == Scheme::midpoint)
    pass = pass && drift <= 1e-10;

  json j = header(ctx);
  j["data"] = ctx.cfg.data.kind;
  j["T"] = so.T;
  j["diagnostics"] = diagnostics_json(d);
  j["energy_drift_max"] = drift;
  j["final_energy"] = run.series.energy.back();
  j["pass"] = pass;
  write_json(ctx, j);
  write_series(ctx, run.series);
  write_state(ctx, "initial", z0);
  write_state(ctx, "final", run.final_state);
  out << "simulate: " << d.steps << " steps, energy balance " << fmt(d.energy_balance_max) << '\n';
  return pass ? exit_pass : exit_check_failed;
}

int cmd_split(Context &ctx, std::ostream &out)
{
  SplitOptions so;
  so.dt = ctx.dt();
  so.T = ctx.cfg.time.T;
  so.solver = ctx.cfg.solver;
  const FieldState z0 = make_data(ctx, ctx.cfg.data.kind == "random_charge_free" ? "random_state" : ctx.cfg.data.kind,
                                  ctx.seed);
  const SplitTrajectory tr = split_run(z0, ctx.cx, ctx.as, so);

  TimeSeries s;
  KahanSum diss;
  for (std::size_t k = 0; k < tr.full.size(); ++k)
  {
    const FieldState &z = tr.full[k];
    if (k > 0)
    {
      const Vec em = 0.5 * (tr.full[k - 1].e + z.e);
      diss.add(2.0 * tr.dt * em.dot(ctx.as.M_sigma * em));
    }
    const FieldState dz = apply_generator(ctx.cx, ctx.as, z);
    const EnergyPair ep = energies(z, dz, ctx.as);
    const Vec rho = charge(ctx.cx, ctx.as, z.e);
    s.t.push_back(z.t);
    s.energy.push_back(ep.energy);
    s.denergy.push_back(ep.denergy);
    s.dissipation_cum.push_back(diss.value());
    s.charge_upsilon.push_back(masked_norm(rho, ctx.as.free_node_mask));
    s.charge_total.push_back(masked_norm(rho, ctx.cx.interior_node_mask));
    s.split_residual.push_back(k < tr.residual.size() ? tr.residual[k] : std::nan(""));
  }
  const bool pass = tr.residual_max <= 1e-8 && tr.initial_derivative <= 1e-9;

  json j = header(ctx);
  j["T"] = so.T;
  j["dt"] = tr.dt;
  j["residual_max"] = tr.residual_max;
  j["initial_derivative"] = tr.initial_derivative;
  j["homogeneous_drift"] = tr.homogeneous_drift;
  j["homogeneous_charge"] = tr.homogeneous_charge;
  j["duhamel_lhs"] = tr.duhamel_lhs;
  j["duhamel_rhs"] = tr.duhamel_rhs;
  j["wi0"] = {{"compatibility", tr.wi0.compatibility},
              {"residual", tr.wi0.residual},
              {"kernel_defect", tr.wi0.kernel_defect},
              {"iterations", tr.wi0.iterations}};
  j["p0"] = {{"residual", tr.p0.residual}, {"iterations", tr.p0.iterations}, {"quantum", tr.p0.quantum}};
  j["full_diagnostics"] = diagnostics_json(tr.full_diagnostics);
  j["pass"] = pass;
  write_json(ctx, j);
  write_series(ctx, s);
  out << "split: reconstruction residual " << fmt(tr.residual_max) << '\n';
  return pass ? exit_pass : exit_check_failed;
}

int cmd_observe(Context &ctx, std::ostream &out)
{
  std::vector<double> horizons = ctx.cfg.observe.horizons;
  std::vector<ObservabilityReport> reports(horizons.size());
  auto one = [&](std::size_t i) {
    ObserveOptions o;
    o.gramian.T = horizons[i];
    o.gramian.dt = ctx.cfg.time.dt;
    o.gramian.a = ctx.cfg.observe.a;
    o.gramian.quantity = ctx.cfg.observe.quantity;
    o.gramian.solver = ctx.cfg.solver;
    o.iterations = ctx.cfg.observe.iters;
    o.seed = ctx.seed;
    reports[i] = estimate_obs_constant(ctx.cx, ctx.as, o);
  };
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, ctx.jobs));
  for (std::size_t b = 0; b < horizons.size(); b += jobs)
  {
    std::vector<std::future<void>> tasks;
    for (std::size_t i = b; i < std::min(horizons.size(), b + jobs); ++i)
      tasks.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, one, i));
    for (auto &t : tasks)
      t.get();
  }

  bool pass = true;
  json arr = json::array();
  std::string csv = "T,lambda_min,lambda_max,c_obs,floor,ritz_residual,observable\n";
  for (std::size_t i = 0; i < reports.size(); ++i)
  {
    const auto &r = reports[i];
    pass = pass && r.observable;
    if (i > 0 && horizons[i] > horizons[i - 1] && r.c_obs > reports[i - 1].c_obs * (1.0 + 1e-9))
      pass = false;
    arr.push_back({{"T", r.T},
                   {"a", r.a},
                   {"quantity", to_string(r.quantity)},
                   {"lambda_min", r.lambda_min},
                   {"lambda_max", r.lambda_max},
                   {"ritz_residual", r.ritz_residual},
                   {"c_obs", num(r.c_obs)},
                   {"floor", num(r.floor)},
                   {"observable", r.observable},
                   {"status", r.status},
                   {"iterations", r.iterations},
                   {"steps", r.steps}});
    csv += fmt(r.T) + "," + fmt(r.lambda_min) + "," + fmt(r.lambda_max) + "," + fmt(r.c_obs) + "," +
           fmt(r.floor) + "," + fmt(r.ritz_residual) + "," + (r.observable ? "1" : "0") + "\n";
    write_state(ctx, "worst_T" + fmt(r.T), r.worst);
    out << "observe: T=" << r.T << " c_obs=" << fmt(r.c_obs) << '\n';
  }
  json j = header(ctx);
  j["horizons"] = arr;
  j["pass"] = pass;
  write_json(ctx, j);
  if (ctx.cfg.output.csv)
    write_text(ctx.out / "observe.csv", csv);
  return pass ? exit_pass : exit_check_failed;
}

int cmd_control(Context &ctx, std::ostream &out)
{
  ControlOptions co;
  co.T = ctx.cfg.control.T;
  co.dt = ctx.cfg.time.dt;
  co.a = ctx.cfg.control.a;
  co.tol = ctx.cfg.control.tol;
  co.max_iter = ctx.cfg.control.max_iter;
  co.solver = ctx.cfg.solver;
  const FieldState target = make_data(ctx, ctx.cfg.control.target, ctx.seed);
  json j = header(ctx);
  j["target"] = ctx.cfg.control.target;
  j["T"] = co.T;
  j["a"] = co.a;
  j["tol"] = co.tol;
  try
  {
    const ControlSolve c = hum_control(FieldState::zero(ctx.grid), target, ctx.cx, ctx.as, co);
    const bool pass = c.miss <= co.tol;
    j["miss"] = c.miss;
    j["divergence_max"] = c.divergence_max;
    j["support_leak"] = c.support_leak;
    j["control_norm"] = c.control_norm;
    j["cg_iterations"] = c.cg_iterations;
    j["cg_residual"] = c.cg_residual;
    j["condition_estimate"] = c.condition_estimate;
    j["dt"] = c.dt;
    j["steps"] = c.steps;
    j["pass"] = pass;
    write_json(ctx, j);
    write_state(ctx, "target", c.target);
    write_state(ctx, "achieved", c.achieved);
    out << "control: miss " << fmt(c.miss) << " after " << c.cg_iterations << " CG iterations\n";
    return pass ? exit_pass : exit_check_failed;
  }
  catch (const ControlInfeasibleError &e)
  {
    j["infeasible"] = e.what();
    j["condition_estimate"] = num(e.condition_estimate());
    j["pass"] = false;
    write_json(ctx, j);
    return exit_check_failed;
  }
}

DecayOptions decay_options(const Context &ctx)
{
  DecayOptions o;
  o.T = ctx.cfg.decay.T;
  o.dt = ctx.cfg.time.dt;
  o.t1 = ctx.cfg.decay.t1;
  o.t2 = ctx.cfg.decay.t2;
  o.horizons = ctx.cfg.decay.horizons;
  o.solver = ctx.cfg.solver;
  return o;
}

json fit_json(const DecayFit &f)
{
  return {{"omega_fit", num(f.omega_fit)}, {"M_fit", f.M_fit},     {"t1", f.t1},
          {"t2", f.t2},                    {"points", f.points},   {"full_decay", f.full_decay},
          {"dominated", f.dominated}};
}

int cmd_decay(Context &ctx, std::ostream &out)
{
  const DecayOptions o = decay_options(ctx);
  const FieldState z0 = make_data(ctx, ctx.cfg.data.kind, ctx.seed);
  const DecayReport r = analyze_decay(z0, ctx.cx, ctx.as, o);
  bool pass = r.fit.omega_fit > 0.0 && r.fit.dominated;
  json gamma = json::array();
  for (std::size_t i = 0; i < r.horizons.size(); ++i)
  {
    gamma.push_back({{"T", r.horizons[i]}, {"gamma", r.gamma[i]}});
    pass = pass && r.gamma[i] < 1.0;
  }
  json j = header(ctx);
  j["data"] = ctx.cfg.data.kind;
  j["T"] = o.T;
  j["dt"] = r.run.diagnostics.dt;
  j["fit"] = fit_json(r.fit);
  j["omega_fit"] = num(r.fit.omega_fit);
  j["M_fit"] = r.fit.M_fit;
  j["gamma"] = gamma;
  j["gamma_T"] = r.gamma_T;
  j["ratio_ED"] = {{"ratio", num(r.ratio_ED.ratio)}, {"finite", r.ratio_ED.finite}, {"outside_X", r.ratio_ED.outside_X}};
  j["dtH"] = {{"constant", r.dtH.constant},
              {"lhs", r.dtH.lhs},
              {"dE", r.dtH.dE},
              {"dissipation", r.dtH.dissipation},
              {"zero_data", r.dtH.zero_data}};
  j["diagnostics"] = diagnostics_json(r.run.diagnostics);
  j["pass"] = pass;
  write_json(ctx, j);
  write_series(ctx, r.run.series);
  write_state(ctx, "final", r.run.final_state);
  out << "decay: omega_fit " << fmt(r.fit.omega_fit) << ", gamma_T " << fmt(r.gamma_T) << '\n';
  return pass ? exit_pass : exit_check_failed;
}

int cmd_project(Context &ctx, std::ostream &out)
{
  const FieldState z = make_data(ctx, ctx.cfg.data.kind == "random_charge_free" ? "random_state" : ctx.cfg.data.kind,
                                 ctx.seed);
  const FieldState w = random_state(ctx.cx, ctx.as, ctx.seed + 1);
  const EquilibriumProjection Pz = project_equilibrium(z, ctx.cx, ctx.as, ctx.cfg.solver);
  const EquilibriumProjection Pw = project_equilibrium(w, ctx.cx, ctx.as, ctx.cfg.solver);
  const EquilibriumProjection PPz = project_equilibrium(Pz.projected, ctx.cx, ctx.as, ctx.cfg.solver);
  const double nz = std::sqrt(energy(ctx.as, z));
  const double nw = std::sqrt(energy(ctx.as, w));
  const double symmetry =
      std::abs(state_inner(ctx.as, Pz.projected, w) - state_inner(ctx.as, z, Pw.projected)) / (nz * nw);
  FieldState diff = PPz.projected;
  diff.e -= Pz.projected.e;
  diff.b -= Pz.projected.b;
  const double idempotence = std::sqrt(energy(ctx.as, diff)) / nz;
  FieldState rest = z;
  rest.e = apply_pec(ctx.cx, z.e) - Pz.projected.e;
  rest.b -= Pz.projected.b;
  const double orthogonality = std::abs(state_inner(ctx.as, rest, Pz.projected)) / (nz * nz);

  const ConvergenceReport cr = check_convergence_to_P(z, ctx.cx, ctx.as, decay_options(ctx));
  const bool pass = symmetry <= 1e-9 && idempotence <= 1e-9 && orthogonality <= 1e-9 && cr.converged &&
                    Pz.curl_e_part == 0.0 && Pz.collar_e_part == 0.0;

  json j = header(ctx);
  j["symmetry"] = symmetry;
  j["idempotence"] = idempotence;
  j["orthogonality"] = orthogonality;
  j["curl_e_part"] = Pz.curl_e_part;
  j["collar_e_part"] = Pz.collar_e_part;
  j["ampere_b_part"] = Pz.ampere_b_part;
  j["e_residual"] = Pz.e_residual;
  j["flux_residual"] = Pz.flux.residual;
  j["free_nodes"] = Pz.free_nodes;
  j["kernel_dimension"] = Pz.kernel_dimension;
  j["data_norm"] = cr.data_norm;
  j["projected_norm"] = cr.projected_norm;
  j["convergence"] = {{"fit", fit_json(cr.fit)},
                      {"final_gap", cr.final_gap},
                      {"envelope_final", cr.envelope_final},
                      {"converged", cr.converged}};
  j["pass"] = pass;
  write_json(ctx, j);
  if (ctx.cfg.output.csv)
  {
    std::string csv = "t,gap\n";
    for (std::size_t i = 0; i < cr.t.size(); ++i)
      csv += fmt(cr.t[i]) + "," + fmt(cr.gap[i]) + "\n";
    write_text(ctx.out / "project.csv", csv);
  }
  write_state(ctx, "projected", Pz.projected);
  out << "project: final gap " << fmt(cr.final_gap) << '\n';
  return pass ? exit_pass : exit_check_failed;
}

int cmd_oracle(Context &ctx, std::ostream &out)
{
  const DenseSystem sys = assemble_dense(ctx.cx, ctx.as, true);
  const DenseSpectrum sp = dense_spectrum(sys);
  const DenseSpectrum sp0 = dense_spectrum(assemble_dense(ctx.cx, ctx.as, false));
  std::vector<double> dts;
  for (double d : ctx.cfg.oracle.dt_divisors)
    dts.push_back(ctx.grid.h / d);
  const FieldState z0 = make_data(ctx, ctx.cfg.data.kind, ctx.seed);
  const OracleComparison cmp = compare_midpoint(z0, ctx.cx, ctx.as, ctx.cfg.oracle.T, dts);
  const std::size_t predicted = predicted_kernel_dimension(ctx.cx, ctx.as);
  bool pass = static_cast<std::size_t>(sp.kernel_dimension) == predicted;
  for (double s : cmp.slopes)
    pass = pass && s >= 1.8 && s <= 2.2;

  json j = header(ctx);
  j["dim"] = sp.dim;
  j["kernel_dimension"] = sp.kernel_dimension;
  j["predicted_kernel_dimension"] = predicted;
  j["abscissa"] = num(sp.abscissa);
  j["smallest_nonzero"] = num(sp.smallest_nonzero);
  j["undamped_max_abs_real"] = sp0.max_abs_real;
  j["undamped_kernel_dimension"] = sp0.kernel_dimension;
  j["trajectory"] = {{"data", ctx.cfg.data.kind},
                     {"T", ctx.cfg.oracle.T},
                     {"dts", nums(cmp.dts)},
                     {"errors", nums(cmp.errors)},
                     {"slopes", nums(cmp.slopes)},
                     {"cayley_defect", cmp.cayley_defect}};
  j["pass"] = pass;
  write_json(ctx, j);
  if (ctx.cfg.output.csv)
  {
    std::string csv = "re,im\n";
    for (const auto &l : sp.eigenvalues)
      csv += fmt(l.real()) + "," + fmt(l.imag()) + "\n";
    write_text(ctx.out / "oracle_eigenvalues.csv", csv);
  }
  out << "oracle: kernel " << sp.kernel_dimension << " (predicted " << predicted << "), abscissa "
      << fmt(sp.abscissa) << '\n';
  return pass ? exit_pass : exit_check_failed;
}

void report_error(std::ostream &err, std::string_view kind, const std::string &message,
                  const std::string &key = {}, int line = 0)
{
  json e = {{"kind", kind}, {"message", message}};
  if (!key.empty())
    e["key"] = key;
  if (line > 0)
    e["line"] = line;
  err << json{{"error", e}}.dump() << '\n';
}

} // namespace

std::string series_csv(const TimeSeries &s)
{
  std::string out = series_header;
  out += '\n';
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    out += fmt(s.t[i]) + ',' + fmt(s.energy[i]) + ',' + fmt(s.denergy[i]) + ',' + fmt(s.dissipation_cum[i]) +
           ',' + fmt(s.charge_upsilon[i]) + ',' + fmt(s.charge_total[i]) + ',' + fmt(s.split_residual[i]) + '\n';
  }
  return out;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"maxdamp: structure-preserving lab for the damped anisotropic Maxwell system"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  const char *names[] = {"check", "simulate", "split", "observe", "control", "decay", "project", "oracle"};
  const char *help[] = {"material and collar hypotheses",
                        "run the damped system and write the time series",
                        "homogeneous/inhomogeneous splitting check",
                        "observability constants over horizons",
                        "HUM control to a target state",
                        "decay rate, contraction and energy ratios",
                        "equilibrium projection and convergence to it",
                        "dense spectral oracle and Richardson check"};
  for (int i = 0; i < 8; ++i)
  {
    CLI::App *sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "experiment INI file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--jobs", jobs, "worker threads for sweep entries")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try
  {
    app.parse(rev);
  }
  catch (const CLI::CallForHelp &)
  {
    out << app.help();
    return exit_pass;
  }
  catch (const CLI::ParseError &e)
  {
    report_error(err, "usage", e.what());
    return exit_error;
  }

  try
  {
    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.cfg = read_config(config_path);
    ctx.seed = seed != 0 ? seed : ctx.cfg.seed;
    ctx.jobs = jobs;
    if (!out_dir.empty())
      ctx.out = out_dir;
    else if (const char *env = std::getenv("MAXDAMP_OUT"); env && *env)
      ctx.out = env;
    else
      ctx.out = ctx.cfg.output.directory;
    fs::create_directories(ctx.out);

    ctx.grid = build_grid(ctx.cfg.grid.n, ctx.cfg.grid.length);
    ctx.cx = assemble_complex(ctx.grid);
    if (ctx.command == "check")
      return cmd_check(ctx);
    ctx.as = sample_materials(ctx.cx, ctx.cfg.materials);
    if (ctx.command == "simulate")
      return cmd_simulate(ctx, out);
    if (ctx.command == "split")
      return cmd_split(ctx, out);
    if (ctx.command == "observe")
      return cmd_observe(ctx, out);
    if (ctx.command == "control")
      return cmd_control(ctx, out);
    if (ctx.command == "decay")
      return cmd_decay(ctx, out);
    if (ctx.command == "project")
      return cmd_project(ctx, out);
    return cmd_oracle(ctx, out);
  }
  catch (const ConfigError &e)
  {
    report_error(err, to_string(e.kind()), e.what(), e.key(), e.line());
  }
  catch (const Error &e)
  {
    report_error(err, to_string(e.kind()), e.what());
  }
  catch (const std::exception &e)
  {
    report_error(err, "internal", e.what());
  }
  return exit_error;
}

} // namespace maxdamp::cli
