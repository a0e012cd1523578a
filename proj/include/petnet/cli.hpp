#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "petnet/metrics.hpp"

namespace petnet {

/// Runs one `petnet` command. `args` excludes the program name. Normal output
/// goes to `out`; failures print one "error: ..." line to `err`.
/// Returns 0 on success, 1 on a failed operation, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

struct MethodRow {
  std::string method;
  MatchReport report;
  double seconds = 0.0;
};

/// Columns: method, TP, FP, FN, F1, precision, time.
std::string format_comparison(std::span<const MethodRow> rows);

}  // namespace petnet
