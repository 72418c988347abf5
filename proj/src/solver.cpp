#include "homog/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "homog/util.hpp"

namespace homog {

namespace {

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sup_norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

bool all_finite(const std::vector<double>& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

void validate_options(const SolveOptions& opts) {
  if (opts.max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(opts.tol_grad > 0.0) || !(opts.tol_energy > 0.0))
    throw ParameterError("solver tolerances must be positive");
  if (opts.memory < 1) throw ParameterError("memory must be >= 1");
  if (!(opts.ls_decrease > 0.0 && opts.ls_decrease < 1.0) ||
      !(opts.ls_backtrack > 0.0 && opts.ls_backtrack < 1.0))
    throw ParameterError("line-search parameters must lie in (0,1)");
  for (size_t i = 0; i + 1 < opts.smoothing_path.size(); ++i)
    if (!(opts.smoothing_path[i] > opts.smoothing_path[i + 1]))
      throw ParameterError("smoothing path must be strictly decreasing");
  for (double d : opts.smoothing_path)
    if (!(d > 0.0)) throw ParameterError("smoothing deltas must be positive");
}

struct Objective {
  const EnergyProblem* problem;
  DiscreteField u;

  explicit Objective(const EnergyProblem& p)
      : problem(&p), u(*p.mesh, p.m()) {
    std::vector<double> zero(static_cast<size_t>(p.dofs.dof_count()), 0.0);
    p.dofs.scatter(zero, u);  // bakes in pinned values once
  }

  double energy(const std::vector<double>& x) {
    problem->dofs.scatter(x, u);
    return assemble_energy(*problem, u);
  }

  std::vector<double> grad(const std::vector<double>& x) {
    problem->dofs.scatter(x, u);
    return problem->dofs.fold(*problem->mesh,
                              assemble_energy_gradient(*problem, u));
  }
};

}  // namespace

Solution minimize(const EnergyProblem& problem, const DiscreteField& initial,
                  const SolveOptions& opts) {
  validate_options(opts);
  Objective obj(problem);
  const size_t n = static_cast<size_t>(problem.dofs.dof_count());

  std::vector<double> x = problem.dofs.gather(initial);
  double fx = obj.energy(x);
  if (!std::isfinite(fx))
    throw NumericalError("initial energy is not finite");
  std::vector<double> g = obj.grad(x);
  if (!all_finite(g))
    throw NumericalError("initial gradient is not finite");

  Solution sol;
  sol.history.push_back({fx, sup_norm(g)});

  std::deque<Pair> pairs;
  std::vector<double> dir(n), x_trial(n), g_new;
  int stagnant = 0;
  int iter = 0;

  for (; iter < opts.max_iters; ++iter) {
    const double gnorm = sup_norm(g);
    if (gnorm <= opts.tol_grad) {
      sol.converged = true;
      break;
    }

    // two-loop recursion
    dir = g;
    std::vector<double> alpha(pairs.size());
    for (size_t i = pairs.size(); i-- > 0;) {
      alpha[i] = pairs[i].rho * dot_vec(pairs[i].s, dir);
      for (size_t k = 0; k < n; ++k) dir[k] -= alpha[i] * pairs[i].y[k];
    }
    if (!pairs.empty()) {
      const Pair& last = pairs.back();
      const double yy = dot_vec(last.y, last.y);
      if (yy > 0.0) {
        const double gamma = 1.0 / (last.rho * yy);
        for (double& v : dir) v *= gamma;
      }
    }
    for (size_t i = 0; i < pairs.size(); ++i) {
      const double beta = pairs[i].rho * dot_vec(pairs[i].y, dir);
      for (size_t k = 0; k < n; ++k)
        dir[k] += (alpha[i] - beta) * pairs[i].s[k];
    }
    for (double& v : dir) v = -v;

    double gd = dot_vec(g, dir);
    if (!(gd < 0.0) || !all_finite(dir)) {
      for (size_t k = 0; k < n; ++k) dir[k] = -g[k];
      gd = -dot_vec(g, g);
      pairs.clear();
    }

    double step = 1.0;
    double f_trial = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < opts.ls_max_steps; ++ls) {
      for (size_t k = 0; k < n; ++k) x_trial[k] = x[k] + step * dir[k];
      f_trial = obj.energy(x_trial);
      if (std::isfinite(f_trial) &&
          f_trial <= fx + opts.ls_decrease * step * gd) {
        accepted = true;
        break;
      }
      // quadratic interpolation of f along the ray, clamped to the
      // configured backtracking factor
      double shrink = opts.ls_backtrack;
      if (std::isfinite(f_trial)) {
        double denom = 2.0 * (f_trial - fx - gd * step);
        if (denom > 0.0) {
          double interp = -gd * step / denom;
          shrink = std::clamp(interp, 0.1, opts.ls_backtrack);
        }
      }
      step *= shrink;
    }
    if (!accepted) break;  // no further finite decrease available

    g_new = obj.grad(x_trial);
    if (!all_finite(g_new))
      throw NumericalError("gradient not finite at iteration " +
                           std::to_string(iter + 1));

    Pair pr;
    pr.s.resize(n);
    pr.y.resize(n);
    double sy = 0.0, ss = 0.0;
    for (size_t k = 0; k < n; ++k) {
      pr.s[k] = x_trial[k] - x[k];
      pr.y[k] = g_new[k] - g[k];
      sy += pr.s[k] * pr.y[k];
      ss += pr.s[k] * pr.s[k];
    }
    if (sy > 1e-12 * ss && ss > 0.0) {
      pr.rho = 1.0 / sy;
      pairs.push_back(std::move(pr));
      if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
    }

    const double decrease = fx - f_trial;
    x.swap(x_trial);
    fx = f_trial;
    g.swap(g_new);
    sol.history.push_back({fx, sup_norm(g)});

    // Near the optimum each step shrinks the energy by ~grad^2/curvature,
    // which sits below tol_energy long before tol_grad is met; only a long
    // stagnant streak signals a genuine floor.
    if (decrease <= opts.tol_energy * (1.0 + std::abs(fx))) {
      if (++stagnant >= 20) {
        ++iter;
        break;
      }
    } else {
      stagnant = 0;
    }
  }

  if (!sol.converged) sol.converged = sup_norm(g) <= opts.tol_grad;
  sol.iterations = iter;
  sol.energy = fx;
  sol.grad_norm = sup_norm(g);
  sol.u = DiscreteField(*problem.mesh, problem.m());
  problem.dofs.scatter(x, sol.u);
  return sol;
}

Solution continuation_minimize(EnergyProblem& problem,
                               const DiscreteField& initial,
                               const SolveOptions& opts) {
  validate_options(opts);
  if (opts.smoothing_path.empty()) return minimize(problem, initial, opts);
  const auto* fam = dynamic_cast<const FamilyDensity*>(problem.density);
  if (!fam)
    throw ParameterError("smoothing path requires a family density");

  struct Restore {
    EnergyProblem* p;
    const EnergyDensity* orig;
    ~Restore() { p->density = orig; }
  } restore{&problem, problem.density};

  DiscreteField u = initial;
  for (double delta : opts.smoothing_path) {
    FamilyDensity smooth(fam->spec(), delta);
    problem.density = &smooth;
    Solution stage = minimize(problem, u, opts);
    u = std::move(stage.u);
    problem.density = restore.orig;
  }
  return minimize(problem, u, opts);
}

}  // namespace homog
