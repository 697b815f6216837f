#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maxdamp/evolution.hpp"
#include "maxdamp/materials.hpp"
#include "maxdamp/observability.hpp"

namespace maxdamp
{

struct GridConfig
{
  int n = 8;
  double length = 1.0;
};

struct TimeConfig
{
  double dt = 0.0; // 0 selects h/2
  double T = 10.0;
  Scheme scheme = Scheme::midpoint;
  int record_every = 1;
};

struct DataConfig
{
  std::string kind = "random_charge_free"; // random_charge_free | random_state | standing_wave | bump
  double width = 0.08;                      // bump width
};

struct ObserveConfig
{
  std::vector<double> horizons{4.0, 8.0, 16.0};
  int iters = 60;
  double a = 0.25;
  ObservedQuantity quantity = ObservedQuantity::field;
};

struct ControlConfig
{
  std::string target = "random_charge_free";
  double T = 6.0;
  double a = 0.25;
  double tol = 1e-6;
  int max_iter = 2000;
};

struct DecayConfig
{
  double T = 40.0;
  double t1 = -1.0; // negative selects 0.25 T
  double t2 = -1.0; // negative selects 0.9 T
  std::vector<double> horizons{10.0, 20.0, 40.0};
};

struct OracleConfig
{
  double T = 1.0;
  std::vector<double> dt_divisors{2.0, 4.0, 8.0}; // dt = h / divisor
};

struct OutputConfig
{
  std::string directory = "maxdamp_out";
  bool csv = true;
  bool json = true;
  bool snapshots = false;
};

struct ExperimentConfig
{
  GridConfig grid;
  MaterialSpec materials;
  TimeConfig time;
  SolverOptions solver;
  DataConfig data;
  ObserveConfig observe;
  ControlConfig control;
  DecayConfig decay;
  OracleConfig oracle;
  OutputConfig output;
  std::uint64_t seed = 1;
};

/// Strict INI reader: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Lists are comma separated. Unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig read_config(const std::string &path);

/// Range checks; throws ConfigError naming the offending key.
void validate(const ExperimentConfig &config);

} // namespace maxdamp
