#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sticky::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kRuntimeError = 2;

/// Runs one command line (args excludes the program name). Results go to
/// `out`, diagnostics to `err`.
///
///   path     --config FILE [--set k=v]... [--stream K]   CSV t,x_1..x_d
///   estimate --config FILE [--set k=v]...                mean/stderr summary
///   converge --config FILE [--set k=v]...                CSV h,estimate,abs_error,seconds + slope
///   rates    --config FILE [--set k=v]...                CSV dx_1..dx_d,rate at x0
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

} // namespace sticky::cli
