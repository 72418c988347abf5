#include "homog/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "homog/util.hpp"

namespace homog {

namespace {

Box cell_box(int d, std::int64_t t) {
  Box box;
  box.d = d;
  for (int ax = 0; ax < d; ++ax) {
    box.lo[static_cast<size_t>(ax)] = static_cast<double>(-t);
    box.hi[static_cast<size_t>(ax)] = static_cast<double>(t);
  }
  return box;
}

void validate_cell_problem(const CellProblem& cp) {
  if (cp.t < 1) throw ParameterError("cell half-width t must be >= 1");
  if (cp.opts.resolution < 1)
    throw ParameterError("mesh resolution must be >= 1");
  validate_spec(cp.opts.integrand);
  validate_field(cp.opts.field);
  if (cp.opts.field.d != cp.opts.integrand.d)
    throw ParameterError("field and integrand dimension mismatch");
  if (cp.xi.rows() != cp.opts.integrand.m ||
      cp.xi.cols() != cp.opts.integrand.d)
    throw ParameterError("xi shape mismatch");
  if (cp.opts.bc == BoundaryCondition::kDirichletAffine)
    throw ParameterError("cell problems use dirichlet_zero or periodic bc");
}

DofMap cell_dofmap(const Mesh& mesh, int m, BoundaryCondition bc) {
  return bc == BoundaryCondition::kPeriodic
             ? make_periodic_dofmap(mesh, m)
             : make_dirichlet_zero_dofmap(mesh, m);
}

}  // namespace

CellResult multicell_estimate_full(const CellProblem& cp,
                                   const DiscreteField* warm) {
  validate_cell_problem(cp);
  const int d = cp.opts.integrand.d;
  const int m = cp.opts.integrand.m;

  auto mesh = std::make_shared<Mesh>(
      build_mesh(cell_box(d, cp.t), cp.opts.resolution));
  FieldRealization field =
      realize_window(cp.opts.field, symmetric_window(d, cp.t), cp.seed);
  FamilyDensity density(cp.opts.integrand);
  EnergyProblem prob =
      make_problem(*mesh, density, &field, cp.xi, 1.0,
                   cell_dofmap(*mesh, m, cp.opts.bc), {}, cp.opts.threads);

  DiscreteField zero = constrained_field(prob);
  const double e_zero = assemble_energy(prob, zero);
  const DiscreteField* init = &zero;
  DiscreteField warm_local;
  if (warm) {
    if (warm->m != m ||
        warm->values.size() != static_cast<size_t>(mesh->n_nodes()) *
                                   static_cast<size_t>(m))
      throw ParameterError("warm start does not match the cell mesh");
    warm_local = *warm;
    warm_local.mesh = mesh.get();
    const double e_warm = assemble_energy(prob, warm_local);
    if (std::isfinite(e_warm) && e_warm < e_zero) init = &warm_local;
  }

  // Convergence is judged on the volume-normalized functional: the raw
  // gradient tolerance scales with the window, and energy stagnation is no
  // stopping criterion for cell problems.
  SolveOptions sopts = cp.opts.solve;
  sopts.tol_grad = cp.opts.solve.tol_grad * mesh->total_volume();
  sopts.tol_energy = 1e-300;
  Solution sol = continuation_minimize(prob, *init, sopts);
  const double volume = mesh->total_volume();

  CellResult res;
  res.value = sol.energy / volume;
  res.affine_bound = e_zero / volume;
  res.sol = std::move(sol);
  res.mesh = mesh;
  if (!(res.value <= res.affine_bound))
    throw InvariantError("cell estimate exceeds its affine upper bound");
  if (!(res.value >= 0.0))
    throw InvariantError("cell estimate is negative");
  return res;
}

double multicell_estimate(const CellProblem& cp) {
  return multicell_estimate_full(cp).value;
}

HomogenizedEstimate estimate_whom(const Mat& xi,
                                  const std::vector<std::int64_t>& t_list,
                                  const std::vector<std::uint64_t>& seeds,
                                  const CellOptions& opts) {
  if (t_list.empty()) throw ParameterError("t_list must be nonempty");
  for (size_t i = 0; i + 1 < t_list.size(); ++i)
    if (!(t_list[i] < t_list[i + 1]))
      throw ParameterError("t_list must be strictly increasing");
  if (seeds.size() < 2) throw ParameterError("need at least 2 seeds");

  const auto n_t = t_list.size();
  const auto n_seeds = seeds.size();
  HomogenizedEstimate est;
  est.xi = xi;
  est.t_list = t_list;
  est.samples.assign(n_t, std::vector<double>(n_seeds, 0.0));
  est.iterations.assign(n_t, std::vector<int>(n_seeds, 0));
  est.sample_converged.assign(n_t, std::vector<std::uint8_t>(n_seeds, 0));

  const int outer = static_cast<int>(
      std::min<size_t>(static_cast<size_t>(std::max(1, opts.threads)),
                       n_seeds));
  const int inner = std::max(1, opts.threads / outer);
  std::vector<std::uint8_t> converged(n_seeds, 1);

  parallel_jobs(static_cast<std::int64_t>(n_seeds), outer, [&](std::int64_t j) {
    CellOptions job_opts = opts;
    job_opts.threads = inner;
    std::shared_ptr<const Mesh> prev_mesh;
    DiscreteField prev_u;
    for (size_t ti = 0; ti < n_t; ++ti) {
      CellProblem cp{xi, t_list[ti], seeds[static_cast<size_t>(j)], job_opts};
      DiscreteField warm;
      const DiscreteField* warm_ptr = nullptr;
      if (prev_mesh) {
        Mesh fine = build_mesh(cell_box(opts.integrand.d, cp.t),
                               opts.resolution);
        warm = extend_by_zero(prev_u, fine);
        warm_ptr = &warm;
      }
      CellResult res = multicell_estimate_full(cp, warm_ptr);
      est.samples[ti][static_cast<size_t>(j)] = res.value;
      est.iterations[ti][static_cast<size_t>(j)] = res.sol.iterations;
      est.sample_converged[ti][static_cast<size_t>(j)] =
          res.sol.converged ? 1 : 0;
      if (!res.sol.converged) converged[static_cast<size_t>(j)] = 0;
      prev_mesh = res.mesh;
      prev_u = std::move(res.sol.u);
      prev_u.mesh = prev_mesh.get();
    }
  });

  est.all_converged =
      std::all_of(converged.begin(), converged.end(), [](auto c) { return c; });

  est.mean.resize(n_t);
  est.stderr_mean.resize(n_t);
  for (size_t ti = 0; ti < n_t; ++ti) {
    const auto& row = est.samples[ti];
    const double mean =
        pairwise_sum(row) / static_cast<double>(n_seeds);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_seeds - 1);
    est.mean[ti] = mean;
    est.stderr_mean[ti] = std::sqrt(var / static_cast<double>(n_seeds));
  }

  std::vector<double> inv_t(n_t);
  std::vector<double> weights(n_t);
  double scale = 1.0;
  for (double m : est.mean) scale = std::max(scale, std::abs(m));
  for (size_t ti = 0; ti < n_t; ++ti) {
    inv_t[ti] = 1.0 / static_cast<double>(t_list[ti]);
    double floor = 1e-13 * scale;
    double se = std::max(est.stderr_mean[ti], floor);
    weights[ti] = 1.0 / (se * se);
  }
  LineFit fit = fit_line(inv_t, est.mean, weights);
  est.value = fit.intercept;
  est.fit_slope = fit.slope;
  est.fit_residual = fit.residual_rms;
  return est;
}

CorrectorField solve_corrector(const CellProblem& cp) {
  CellResult res = multicell_estimate_full(cp);
  CorrectorField cor;
  cor.phi = std::move(res.sol.u);
  cor.bc = cp.opts.bc;
  cor.converged = res.sol.converged;
  cor.mesh = res.mesh;
  cor.phi.mesh = cor.mesh.get();
  return cor;
}

Mat mean_gradient(const Mesh& mesh, const DiscreteField& u) {
  Mat acc(u.m, mesh.d());
  const double vol = mesh.element_volume();
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    Mat g = element_gradient(mesh, u, e);
    g *= vol;
    acc += g;
  }
  acc *= 1.0 / mesh.total_volume();
  return acc;
}

Mat whom_gradient(const Mat& xi, std::int64_t t,
                  const std::vector<std::uint64_t>& seeds,
                  const CellOptions& opts) {
  if (seeds.empty()) throw ParameterError("need at least one seed");
  const int d = opts.integrand.d;
  const int m = opts.integrand.m;
  std::vector<Mat> per_seed(seeds.size(), Mat(m, d));

  const int outer = static_cast<int>(std::min<size_t>(
      static_cast<size_t>(std::max(1, opts.threads)), seeds.size()));
  const int inner = std::max(1, opts.threads / outer);

  parallel_jobs(
      static_cast<std::int64_t>(seeds.size()), outer, [&](std::int64_t j) {
        CellOptions job_opts = opts;
        job_opts.bc = BoundaryCondition::kPeriodic;
        job_opts.threads = inner;
        CellProblem cp{xi, t, seeds[static_cast<size_t>(j)], job_opts};
        validate_cell_problem(cp);

        auto mesh = std::make_shared<Mesh>(
            build_mesh(cell_box(d, t), job_opts.resolution));
        FieldRealization field = realize_window(
            job_opts.field, symmetric_window(d, t), cp.seed);
        FamilyDensity density(job_opts.integrand);
        EnergyProblem prob = make_problem(
            *mesh, density, &field, xi, 1.0,
            cell_dofmap(*mesh, m, job_opts.bc), {}, inner);
        DiscreteField zero = constrained_field(prob);
        SolveOptions sopts = job_opts.solve;
        sopts.tol_grad = job_opts.solve.tol_grad * mesh->total_volume();
        sopts.tol_energy = 1e-300;
        Solution sol = continuation_minimize(prob, zero, sopts);

        Mat acc(m, d);
        const double vol = mesh->element_volume();
        for (std::int64_t e = 0; e < mesh->n_elements(); ++e) {
          Mat g = element_gradient(*mesh, sol.u, e);
          g += xi;
          Mat dW = grad_xi(job_opts.integrand,
                           prob.elem_states[static_cast<size_t>(e)], g);
          dW *= vol;
          acc += dW;
        }
        acc *= 1.0 / mesh->total_volume();
        per_seed[static_cast<size_t>(j)] = acc;
      });

  Mat out(m, d);
  for (const Mat& g : per_seed) out += g;
  out *= 1.0 / static_cast<double>(seeds.size());
  return out;
}

namespace {

std::vector<std::int64_t> quantize_mat(const Mat& m) {
  std::vector<std::int64_t> key;
  key.reserve(static_cast<size_t>(m.rows() * m.cols()) + 2);
  key.push_back(m.rows());
  key.push_back(m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      key.push_back(std::llround(m(i, j) * 1048576.0));
  return key;
}

}  // namespace

ConvexityReport verify_convexity(
    const std::vector<std::pair<Mat, double>>& estimates, double tol) {
  std::map<std::vector<std::int64_t>, double> table;
  for (const auto& [xi, v] : estimates) table[quantize_mat(xi)] = v;

  ConvexityReport rep;
  for (size_t i = 0; i < estimates.size(); ++i) {
    for (size_t j = i + 1; j < estimates.size(); ++j) {
      Mat mid = estimates[i].first + estimates[j].first;
      mid *= 0.5;
      auto it = table.find(quantize_mat(mid));
      if (it == table.end()) continue;
      ++rep.n_triples;
      const double chord =
          0.5 * (estimates[i].second + estimates[j].second);
      const double viol = it->second - chord;
      rep.max_violation = std::max(rep.max_violation, viol);
      if (viol > tol) ++rep.n_violations;
    }
  }
  rep.ok = rep.n_violations == 0;
  return rep;
}

GrowthVerifyReport verify_growth(
    const std::vector<std::pair<Mat, double>>& estimates, double p,
    double slack) {
  if (estimates.empty()) throw ParameterError("no estimates to verify");
  GrowthVerifyReport rep;
  rep.a5_checked = true;
  rep.a5_min_margin = std::numeric_limits<double>::infinity();
  for (const auto& [xi, v] : estimates) {
    const double margin = v - std::pow(xi.norm(), p) + slack;
    rep.a5_min_margin = std::min(rep.a5_min_margin, margin);
    if (margin < 0.0) rep.a5_ok = false;
  }

  std::map<std::vector<std::int64_t>, double> table;
  for (const auto& [xi, v] : estimates) table[quantize_mat(xi)] = v;
  for (const auto& [xi, v] : estimates) {
    const int m = xi.rows();
    for (int mask = 0; mask < (1 << m); ++mask) {
      if (mask == (1 << m) - 1) continue;  // identity mask
      Mat masked = xi;
      for (int r = 0; r < m; ++r)
        if (!(mask >> r & 1))
          for (int c = 0; c < xi.cols(); ++c) masked(r, c) = 0.0;
      auto key = quantize_mat(masked);
      if (key == quantize_mat(xi)) continue;
      auto it = table.find(key);
      if (it == table.end()) continue;
      ++rep.n_mask_pairs;
      rep.c0 = std::max(rep.c0, it->second / (1.0 + v));
    }
  }
  return rep;
}

SubadditivityReport subadditivity_check(const Mat& xi, std::int64_t t,
                                        std::uint64_t seed,
                                        const CellOptions& opts) {
  SubadditivityReport rep;
  if (opts.bc == BoundaryCondition::kPeriodic) {
    rep.skipped = true;  // gluing needs zero boundary values
    return rep;
  }
  CellProblem big{xi, t, seed, opts};
  validate_cell_problem(big);
  const int d = opts.integrand.d;
  const int m = opts.integrand.m;

  Mesh big_mesh = build_mesh(cell_box(d, t), opts.resolution);
  FieldRealization field =
      realize_window(opts.field, symmetric_window(d, t), seed);
  FamilyDensity density(opts.integrand);

  DiscreteField glued(big_mesh, m);
  double sub_sum = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    Box sub;
    sub.d = d;
    for (int ax = 0; ax < d; ++ax) {
      const bool upper = corner >> ax & 1;
      sub.lo[static_cast<size_t>(ax)] = upper ? 0.0 : static_cast<double>(-t);
      sub.hi[static_cast<size_t>(ax)] = upper ? static_cast<double>(t) : 0.0;
    }
    Mesh sub_mesh = build_mesh(sub, opts.resolution);
    EnergyProblem sub_prob =
        make_problem(sub_mesh, density, &field, xi, 1.0,
                     make_dirichlet_zero_dofmap(sub_mesh, m), {},
                     opts.threads);
    DiscreteField zero = constrained_field(sub_prob);
    SolveOptions sub_opts = opts.solve;
    sub_opts.tol_grad = opts.solve.tol_grad * sub_mesh.total_volume();
    sub_opts.tol_energy = 1e-300;
    Solution sub_sol = continuation_minimize(sub_prob, zero, sub_opts);
    sub_sum += sub_sol.energy;
    for (std::int64_t node = 0; node < sub_mesh.n_nodes(); ++node) {
      const std::int64_t big_node = big_mesh.node_at(sub_mesh.node_coord(node));
      for (int c = 0; c < m; ++c)
        glued.at(big_node, c) = sub_sol.u.at(node, c);
    }
  }

  CellResult res = multicell_estimate_full(big, &glued);
  rep.mu_big = res.sol.energy;
  rep.mu_sub_sum = sub_sum;
  rep.margin = rep.mu_sub_sum - rep.mu_big;
  rep.ok = rep.margin >= -1e-8;
  return rep;
}

double conjugate_of_table(const std::vector<std::array<double, 2>>& graph,
                          double eta) {
  if (graph.empty()) throw ParameterError("empty table");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [x, v] : graph) best = std::max(best, x * eta - v);
  return best;
}

}  // namespace homog
