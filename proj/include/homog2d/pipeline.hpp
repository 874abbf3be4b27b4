#pragma once

#include <map>
#include <string>
#include <vector>

#include "homog2d/config.hpp"
#include "homog2d/report.hpp"

namespace homog2d {

struct RunResult {
  int exit_code = 0;  // 0 iff no solver error and no FAIL check
  std::vector<Check> checks;
  std::map<std::string, std::string> files;  // name -> content, as written to cfg.out
  bool cell_from_cache = false;
};

/// Runs cfg.command, writes every artifact to cfg.out after the last stage
/// (partial artifacts on failure) and returns the checks.
RunResult run(const RunConfig& cfg);

/// Ratio (mean |grad u|^2 over B_r)^(1/2) / (r^-1 (mean |u|^2 over B_2r)^(1/2))
/// at node (i, j).
double caccioppoli_ratio(const Field& u, int i, int j, double r);

}  // namespace homog2d
