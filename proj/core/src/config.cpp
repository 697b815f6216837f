#include "maxdamp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace maxdamp
{

namespace
{

std::string trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string &s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(trim(item));
  return out;
}

struct Entry
{
  std::string key;
  std::string value;
  int line = 0;
};

[[noreturn]] void fail(const Entry &e, const std::string &what)
{
  throw ConfigError(e.key + " (line " + std::to_string(e.line) + "): " + what, e.key, e.line);
}

double to_double(const Entry &e, const std::string &s)
{
  double v = 0.0;
  const auto *end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end)
    fail(e, "expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const Entry &e, const std::string &s)
{
  long long v = 0;
  const auto *end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end)
    fail(e, "expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> to_list(const Entry &e)
{
  std::vector<double> out;
  for (const auto &item : split_list(e.value))
    out.push_back(to_double(e, item));
  return out;
}

template <typename F>
auto guarded(const Entry &e, F &&f) -> decltype(f())
{
  try
  {
    return f();
  }
  catch (const ConfigError &)
  {
    throw;
  }
  catch (const Error &err)
  {
    fail(e, err.what());
  }
}

struct Pending
{
  PresetKind eps_kind = PresetKind::constant;
  PresetKind mu_kind = PresetKind::constant;
  std::vector<double> eps_params;
  std::vector<double> mu_params;
};

using Setter = std::function<void(ExperimentConfig &, Pending &, const Entry &)>;

const std::map<std::string, Setter> &setters()
{
  static const std::map<std::string, Setter> table = {
      {"grid.n", [](auto &c, auto &, const Entry &e) { c.grid.n = static_cast<int>(to_integer(e, e.value)); }},
      {"grid.length", [](auto &c, auto &, const Entry &e) { c.grid.length = to_double(e, e.value); }},
      {"materials.epsilon",
       [](auto &, auto &p, const Entry &e) { p.eps_kind = guarded(e, [&] { return parse_preset_kind(e.value); }); }},
      {"materials.mu",
       [](auto &, auto &p, const Entry &e) { p.mu_kind = guarded(e, [&] { return parse_preset_kind(e.value); }); }},
      {"materials.epsilon_params", [](auto &, auto &p, const Entry &e) { p.eps_params = to_list(e); }},
      {"materials.mu_params", [](auto &, auto &p, const Entry &e) { p.mu_params = to_list(e); }},
      {"materials.x0",
       [](auto &c, auto &, const Entry &e) {
         const auto v = to_list(e);
         if (v.size() != 3)
           fail(e, "expected three coordinates");
         c.materials.x0 = {v[0], v[1], v[2]};
       }},
      {"sigma.sigma0", [](auto &c, auto &, const Entry &e) { c.materials.sigma.sigma0 = to_double(e, e.value); }},
      {"sigma.a", [](auto &c, auto &, const Entry &e) { c.materials.sigma.a = to_double(e, e.value); }},
      {"sigma.profile",
       [](auto &c, auto &, const Entry &e) {
         c.materials.sigma.profile = guarded(e, [&] { return parse_sigma_profile(e.value); });
       }},
      {"time.dt", [](auto &c, auto &, const Entry &e) { c.time.dt = to_double(e, e.value); }},
      {"time.T", [](auto &c, auto &, const Entry &e) { c.time.T = to_double(e, e.value); }},
      {"time.scheme",
       [](auto &c, auto &, const Entry &e) { c.time.scheme = guarded(e, [&] { return parse_scheme(e.value); }); }},
      {"time.record_every",
       [](auto &c, auto &, const Entry &e) { c.time.record_every = static_cast<int>(to_integer(e, e.value)); }},
      {"solver.tol", [](auto &c, auto &, const Entry &e) { c.solver.tol = to_double(e, e.value); }},
      {"solver.max_iter",
       [](auto &c, auto &, const Entry &e) { c.solver.max_iter = static_cast<int>(to_integer(e, e.value)); }},
      {"data.kind", [](auto &c, auto &, const Entry &e) { c.data.kind = e.value; }},
      {"data.width", [](auto &c, auto &, const Entry &e) { c.data.width = to_double(e, e.value); }},
      {"observe.horizons", [](auto &c, auto &, const Entry &e) { c.observe.horizons = to_list(e); }},
      {"observe.iters",
       [](auto &c, auto &, const Entry &e) { c.observe.iters = static_cast<int>(to_integer(e, e.value)); }},
      {"observe.a", [](auto &c, auto &, const Entry &e) { c.observe.a = to_double(e, e.value); }},
      {"observe.quantity",
       [](auto &c, auto &, const Entry &e) {
         c.observe.quantity = guarded(e, [&] { return parse_observed_quantity(e.value); });
       }},
      {"observe.seed",
       [](auto &c, auto &, const Entry &e) { c.seed = static_cast<std::uint64_t>(to_integer(e, e.value)); }},
      {"control.target", [](auto &c, auto &, const Entry &e) { c.control.target = e.value; }},
      {"control.T", [](auto &c, auto &, const Entry &e) { c.control.T = to_double(e, e.value); }},
      {"control.a", [](auto &c, auto &, const Entry &e) { c.control.a = to_double(e, e.value); }},
      {"control.tol", [](auto &c, auto &, const Entry &e) { c.control.tol = to_double(e, e.value); }},
      {"control.max_iter",
       [](auto &c, auto &, const Entry &e) { c.control.max_iter = static_cast<int>(to_integer(e, e.value)); }},
      {"decay.T", [](auto &c, auto &, const Entry &e) { c.decay.T = to_double(e, e.value); }},
      {"decay.t1", [](auto &c, auto &, const Entry &e) { c.decay.t1 = to_double(e, e.value); }},
      {"decay.t2", [](auto &c, auto &, const Entry &e) { c.decay.t2 = to_double(e, e.value); }},
      {"decay.horizons", [](auto &c, auto &, const Entry &e) { c.decay.horizons = to_list(e); }},
      {"oracle.T", [](auto &c, auto &, const Entry &e) { c.oracle.T = to_double(e, e.value); }},
      {"oracle.dt_divisors", [](auto &c, auto &, const Entry &e) { c.oracle.dt_divisors = to_list(e); }},
      {"output.directory", [](auto &c, auto &, const Entry &e) { c.output.directory = e.value; }},
      {"output.formats",
       [](auto &c, auto &, const Entry &e) {
         c.output.csv = c.output.json = c.output.snapshots = false;
         for (const auto &f : split_list(e.value))
         {
           if (f == "csv")
             c.output.csv = true;
           else if (f == "json")
             c.output.json = true;
           else if (f == "snapshots")
             c.output.snapshots = true;
           else
             fail(e, "unknown format '" + f + "' (csv, json, snapshots)");
         }
       }},
      {"run.seed",
       [](auto &c, auto &, const Entry &e) { c.seed = static_cast<std::uint64_t>(to_integer(e, e.value)); }},
  };
  return table;
}

void check(bool ok, const std::map<std::string, int> &lines, const std::string &key, const std::string &what)
{
  if (ok)
    return;
  const auto it = lines.find(key);
  const int line = it == lines.end() ? 0 : it->second;
  std::string msg = key;
  if (line > 0)
    msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg + ": " + what, key, line);
}

void validate_impl(const ExperimentConfig &c, const std::map<std::string, int> &lines)
{
  check(c.grid.n >= 2 && c.grid.n <= 256, lines, "grid.n", "must lie in [2, 256]");
  check(c.grid.length > 0.0, lines, "grid.length", "must be positive");
  check(c.materials.sigma.sigma0 >= 0.0, lines, "sigma.sigma0", "must be >= 0");
  check(c.materials.sigma.a > 0.0, lines, "sigma.a", "must be positive");
  check(c.materials.sigma.a < 0.5 * c.grid.length, lines, "sigma.a", "a < length/2 is required");
  check(c.time.dt >= 0.0, lines, "time.dt", "must be >= 0 (0 selects h/2)");
  check(c.time.T > 0.0, lines, "time.T", "must be positive");
  check(c.time.record_every >= 1, lines, "time.record_every", "must be >= 1");
  check(c.solver.tol > 0.0 && c.solver.tol < 1.0, lines, "solver.tol", "must lie in (0, 1)");
  check(c.solver.max_iter >= 1, lines, "solver.max_iter", "must be >= 1");
  check(c.data.kind == "random_charge_free" || c.data.kind == "random_state" ||
            c.data.kind == "standing_wave" || c.data.kind == "bump",
        lines, "data.kind", "one of random_charge_free, random_state, standing_wave, bump");
  check(c.data.width > 0.0, lines, "data.width", "must be positive");
  check(!c.observe.horizons.empty(), lines, "observe.horizons", "needs at least one horizon");
  for (double T : c.observe.horizons)
    check(T > 0.0, lines, "observe.horizons", "horizons must be positive");
  check(c.observe.iters >= 2, lines, "observe.iters", "must be >= 2");
  check(c.observe.a > 0.0 && c.observe.a < 0.5 * c.grid.length, lines, "observe.a", "a < length/2 is required");
  check(c.control.target == "random_charge_free" || c.control.target == "standing_wave" ||
            c.control.target == "bump",
        lines, "control.target", "one of random_charge_free, standing_wave, bump");
  check(c.control.T > 0.0, lines, "control.T", "must be positive");
  check(c.control.a > 0.0 && c.control.a < 0.5 * c.grid.length, lines, "control.a", "a < length/2 is required");
  check(c.control.tol > 0.0 && c.control.tol < 1.0, lines, "control.tol", "must lie in (0, 1)");
  check(c.control.max_iter >= 1, lines, "control.max_iter", "must be >= 1");
  check(c.decay.T > 0.0, lines, "decay.T", "must be positive");
  const double t1 = c.decay.t1 < 0.0 ? 0.25 * c.decay.T : c.decay.t1;
  const double t2 = c.decay.t2 < 0.0 ? 0.9 * c.decay.T : c.decay.t2;
  check(t1 < t2 && t2 <= c.decay.T, lines, "decay.t2", "fit window needs t1 < t2 <= T");
  for (double T : c.decay.horizons)
    check(T > 0.0 && T <= c.decay.T, lines, "decay.horizons", "horizons must lie in (0, decay.T]");
  check(c.oracle.T > 0.0, lines, "oracle.T", "must be positive");
  check(c.oracle.dt_divisors.size() >= 2, lines, "oracle.dt_divisors", "needs at least two entries");
  for (double d : c.oracle.dt_divisors)
    check(d > 0.0, lines, "oracle.dt_divisors", "divisors must be positive");
  check(!c.output.directory.empty(), lines, "output.directory", "must not be empty");
}

} // namespace

ExperimentConfig parse_config(const std::string &text)
{
  ExperimentConfig cfg;
  Pending pending;
  std::map<std::string, int> lines;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  const auto &table = setters();
  while (std::getline(in, raw))
  {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[')
    {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header", {}, lineno);
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto &kv : table)
        if (kv.first.compare(0, section.size() + 1, section + ".") == 0)
          known = true;
      if (!known)
        throw ConfigError("unknown section [" + section + "] (line " + std::to_string(lineno) + ")",
                          section, lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value", {}, lineno);
    std::string key = trim(line.substr(0, eq));
    if (section.empty() && key.find('.') == std::string::npos)
      throw ConfigError("key '" + key + "' (line " + std::to_string(lineno) + ") lies outside any section",
                        key, lineno);
    if (!section.empty())
      key = section + "." + key;
    const Entry e{key, trim(line.substr(eq + 1)), lineno};
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError("unknown key '" + key + "' (line " + std::to_string(lineno) + ")", key, lineno);
    if (lines.count(key))
      fail(e, "duplicate key (first set on line " + std::to_string(lines[key]) + ")");
    lines[key] = lineno;
    it->second(cfg, pending, e);
  }

  auto build = [&](PresetKind kind, const std::vector<double> &params, const char *key) {
    const Entry e{key, {}, lines.count(key) ? lines[key] : 0};
    return guarded(e, [&] { return MaterialPreset(kind, params); });
  };
  cfg.materials.epsilon = build(pending.eps_kind, pending.eps_params, "materials.epsilon_params");
  cfg.materials.mu = build(pending.mu_kind, pending.mu_params, "materials.mu_params");
  validate_impl(cfg, lines);
  return cfg;
}

ExperimentConfig read_config(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig &config) { validate_impl(config, {}); }

} // namespace maxdamp
