#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "maxdamp/evolution.hpp"

namespace maxdamp::cli
{

/// Exit codes of the command line tool.
enum Exit : int
{
  exit_pass = 0,
  exit_error = 1,
  exit_check_failed = 2,
};

/// Header row of every time-series CSV file.
inline constexpr const char *series_header =
    "t,energy,denergy,dissipation_cum,charge_upsilon,charge_total,split_residual";

/// Entry point behind `maxdamp <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--jobs <k>]`.
/// Human-readable progress goes to `out`; failures are reported on `err` as
/// one JSON object {"error": {...}}.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Time series as CSV text with `series_header`; NaN entries are written as "nan".
std::string series_csv(const TimeSeries &series);

} // namespace maxdamp::cli
