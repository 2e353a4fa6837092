#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace floquet::cli {

enum ExitCode : int { ok = 0, internal = 1, config = 2, gate = 3, nonconvergence = 4 };

struct RunConfig {
  std::string command;

  // Model source: exactly one of the two.
  std::string model_path;
  std::string builtin;
  std::map<std::string, double> params;

  std::optional<int> harmonics;  ///< empty = auto
  std::optional<double> tol_deg;
  std::string out = "out";
  std::uint64_t seed = 20240601;
  double gate = 1e-6;

  // variational
  int states = 1;
  std::optional<int> max_iters;
  std::optional<int> restarts;

  // sweep
  std::string axis;
  double from = 0.0, to = 0.0;
  int count = 11;

  // perturb
  std::string fixture;
  std::string perturbation_path;
  std::optional<double> strength;
};

/// Parses and runs one command; never throws. Errors go to `err` and to
/// <out>/error.json as {"kind": ..., "message": ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace floquet::cli
