#pragma once

#include <string>

#include "invlab/sweep.hpp"

// Report emission: results.csv / summary.csv plus two SVG figures --
// a classifier-vs-adversary scatter with +-1 std boxes and chance lines,
// and per-lambda accuracy differences against the lambda=0 baseline.

namespace invlab {

void emit_report(const SweepResult& result, const std::string& out_dir);

/// Reads a results.csv written by emit_report back into a SweepResult
/// (summary recomputed).
SweepResult read_results_csv(const std::string& path);

}  // namespace invlab
