#pragma once

// Brute-force reference solvers for two and three classes. They share no
// code with the production calibrators beyond the record type and exist to
// check them.

#include <span>

#include "promptcal/model.hpp"

namespace promptcal::oracle {

// Evaluates the L1 prior gap on a log-weight grid over [-10, 10]^(K-1) with
// spacing `grid_step`, then refines the best point by nested bisection on
// the (monotone) per-class marginals until the bracket is below 1e-9 in log
// space. K must be 2 or 3.
WeightVector brute_force_prior_match(std::span<const ProbabilityRecord> records,
                                     const TargetPrior& prior,
                                     double grid_step = 0.01);

struct OptimalOracleResult {
  WeightVector weights;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t candidates = 0;
};

// Exhaustive accuracy maximization. K = 2: every arithmetic midpoint between
// consecutive distinct decision thresholds plus both unbounded ends and the
// identity. K = 3: every point of a log-grid with spacing `grid_step` over
// [-6, 6]^2. Ties go to the smallest log-weight norm.
OptimalOracleResult brute_force_optimal(
    std::span<const ProbabilityRecord> records, double grid_step = 0.01);

}  // namespace promptcal::oracle
