#pragma once

#include <vector>

#include "homog/energy.hpp"

namespace homog {

struct SolveOptions {
  int max_iters = 500;
  double tol_grad = 1e-8;      // sup-norm of the free gradient
  double tol_energy = 1e-13;   // relative stagnation threshold
  int memory = 10;             // quasi-Newton history length
  std::vector<double> smoothing_path;  // Huber deltas, strictly decreasing
  double ls_decrease = 1e-4;
  double ls_backtrack = 0.5;
  int ls_max_steps = 60;
  int threads = 1;
};

struct IterationRecord {
  double energy;
  double grad_norm;
};

struct Solution {
  DiscreteField u;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

// Limited-memory quasi-Newton descent with backtracking line search on the
// free dofs. Energy is monotone along iterations; the best iterate is
// returned. Throws NumericalError if the initial energy or an accepted
// gradient is non-finite (non-finite trial points are rejected by the line
// search instead).
Solution minimize(const EnergyProblem& problem, const DiscreteField& initial,
                  const SolveOptions& opts);

// Solves a sequence of Huber-smoothed energies along opts.smoothing_path,
// warm-starting each from the previous solution, then the true energy.
// Requires a FamilyDensity problem when the path is nonempty.
Solution continuation_minimize(EnergyProblem& problem,
                               const DiscreteField& initial,
                               const SolveOptions& opts);

}  // namespace homog
