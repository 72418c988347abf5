#include "homog/bvp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include "homog/la.hpp"
#include "homog/util.hpp"

namespace homog {

namespace {

std::int64_t table_size(const WhomTable& t) {
  std::int64_t s = 1;
  for (int q = 0; q < t.m * t.d; ++q) s *= t.n;
  return s;
}

void check_table(const WhomTable& t) {
  if (t.m < 1 || t.d < 1 || t.n < 2 || !(t.step > 0.0))
    throw ConfigError("whom table needs n >= 2 lattice points and step > 0");
  if (std::ssize(t.values) != table_size(t))
    throw ConfigError("whom table value count does not match its lattice");
}

struct TableCell {
  std::array<std::int64_t, Mat::kMaxEntries> cell;
  std::array<double, Mat::kMaxEntries> theta;
  std::array<std::int64_t, Mat::kMaxEntries> stride;
};

TableCell locate(const WhomTable& t, const Mat& xi) {
  if (xi.rows() != t.m || xi.cols() != t.d)
    throw ConfigError("whom table evaluated at a wrong-shaped gradient");
  const int k = t.m * t.d;
  TableCell c;
  c.stride[k - 1] = 1;
  for (int q = k - 2; q >= 0; --q) c.stride[q] = c.stride[q + 1] * t.n;
  for (int q = 0; q < k; ++q) {
    double s = (xi[q] - t.lo) / t.step;
    auto cq = static_cast<std::int64_t>(std::floor(s));
    cq = std::clamp<std::int64_t>(cq, 0, t.n - 2);
    c.cell[q] = cq;
    c.theta[q] = s - static_cast<double>(cq);
  }
  return c;
}

}  // namespace

void validate_table(const WhomTable& t) {
  check_table(t);
  for (double v : t.values)
    if (!std::isfinite(v))
      throw InvariantError("whom table holds a non-finite value");
  const int k = t.m * t.d;
  std::int64_t stride = 1;
  for (int q = k - 1; q >= 0; --q) {
    const std::int64_t total = table_size(t);
    for (std::int64_t flat = 0; flat < total; ++flat) {
      const std::int64_t pos = (flat / stride) % t.n;
      if (pos < 1 || pos > t.n - 2) continue;
      const double lo_v = t.values[static_cast<std::size_t>(flat - stride)];
      const double mid = t.values[static_cast<std::size_t>(flat)];
      const double hi_v = t.values[static_cast<std::size_t>(flat + stride)];
      const double tol = 1e-7 * (1.0 + std::abs(lo_v) + std::abs(hi_v));
      if (lo_v + hi_v - 2.0 * mid < -tol)
        throw InvariantError("whom table convexity violated along axis " +
                             std::to_string(q) + " at flat index " +
                             std::to_string(flat));
    }
    stride *= t.n;
  }
}

double WhomTable::value(const Mat& xi) const {
  check_table(*this);
  const int k = m * d;
  TableCell c = locate(*this, xi);
  double out = 0.0;
  for (std::uint32_t corner = 0; corner < (1u << k); ++corner) {
    double w = 1.0;
    std::int64_t idx = 0;
    for (int q = 0; q < k; ++q) {
      bool hi_bit = (corner >> q) & 1u;
      w *= hi_bit ? c.theta[q] : 1.0 - c.theta[q];
      idx += (c.cell[q] + (hi_bit ? 1 : 0)) * c.stride[q];
    }
    out += w * values[static_cast<std::size_t>(idx)];
  }
  return out;
}

Mat WhomTable::gradient(const Mat& xi) const {
  check_table(*this);
  const int k = m * d;
  TableCell c = locate(*this, xi);
  Mat g(m, d);
  for (std::uint32_t corner = 0; corner < (1u << k); ++corner) {
    std::int64_t idx = 0;
    std::array<double, Mat::kMaxEntries> wq;
    for (int q = 0; q < k; ++q) {
      bool hi_bit = (corner >> q) & 1u;
      wq[q] = hi_bit ? c.theta[q] : 1.0 - c.theta[q];
      idx += (c.cell[q] + (hi_bit ? 1 : 0)) * c.stride[q];
    }
    double v = values[static_cast<std::size_t>(idx)];
    for (int q = 0; q < k; ++q) {
      double w = 1.0;
      for (int r = 0; r < k; ++r)
        if (r != q) w *= wq[r];
      double sign = ((corner >> q) & 1u) ? 1.0 : -1.0;
      g[q] += sign * w * v / step;
    }
  }
  return g;
}

bool WhomTable::in_range(const Mat& xi) const {
  const double slack = 1e-12 * step;
  for (int q = 0; q < m * d; ++q)
    if (xi[q] < lo - slack || xi[q] > hi() + slack) return false;
  return true;
}

WhomTable build_whom_table(const CellOptions& opts,
                           const std::vector<std::int64_t>& t_list,
                           const std::vector<std::uint64_t>& seeds, double lo,
                           double step, int n) {
  WhomTable t;
  t.m = opts.integrand.m;
  t.d = opts.integrand.d;
  t.lo = lo;
  t.step = step;
  t.n = n;
  if (n < 2 || !(step > 0.0))
    throw ConfigError("whom table needs n >= 2 lattice points and step > 0");
  const int k = t.m * t.d;
  const std::int64_t total = table_size(t);
  t.values.resize(static_cast<std::size_t>(total));
  // Fair two-state fields get an antithetic partner: swapping the state list
  // flips every cell draw under the same seed, and averaging the pair cancels
  // the leading-order sampling fluctuation of each table value.
  const FieldDistribution& dist = opts.field.dist;
  const bool antithetic = !dist.uniform && dist.states.size() == 2 &&
                          dist.probs[0] == 0.5 && dist.probs[1] == 0.5;
  CellOptions rev = opts;
  if (antithetic)
    std::swap(rev.field.dist.states[0], rev.field.dist.states[1]);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    Mat xi(t.m, t.d);
    std::int64_t rem = flat;
    for (int q = k - 1; q >= 0; --q) {
      xi[q] = lo + static_cast<double>(rem % t.n) * step;
      rem /= t.n;
    }
    double value = estimate_whom(xi, t_list, seeds, opts).value;
    if (antithetic)
      value = 0.5 * (value + estimate_whom(xi, t_list, seeds, rev).value);
    t.values[static_cast<std::size_t>(flat)] = value;
  }
  validate_table(t);
  return t;
}

void validate_bvp_config(const BVPConfig& cfg) {
  validate_spec(cfg.integrand);
  validate_field(cfg.field);
  if (cfg.field.d != cfg.integrand.d)
    throw ConfigError("field and integrand dimensions differ");
  if (cfg.domain.d != cfg.integrand.d)
    throw ConfigError("domain and integrand dimensions differ");
  for (int a = 0; a < cfg.domain.d; ++a)
    if (!(cfg.domain.hi[a] > cfg.domain.lo[a]))
      throw ConfigError("domain must have positive extent");
  if (cfg.g.xi.rows() != cfg.integrand.m || cfg.g.xi.cols() != cfg.integrand.d)
    throw ConfigError("boundary datum slope has the wrong shape");
  if (cfg.g.b.size() != cfg.integrand.m)
    throw ConfigError("boundary datum offset has the wrong length");
  if (cfg.force.constant.size() != 0 &&
      cfg.force.constant.size() != cfg.integrand.m)
    throw ConfigError("force component count differs from m");
  if (cfg.eps_list.empty()) throw ConfigError("eps_list must not be empty");
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    if (!(cfg.eps_list[i] > 0.0))
      throw ConfigError("eps values must be positive");
    if (i > 0 && !(cfg.eps_list[i] < cfg.eps_list[i - 1]))
      throw ConfigError("eps_list must be strictly decreasing");
  }
  if (cfg.cells_per_eps < 1)
    throw ConfigError("cells_per_eps must be at least 1");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (!(cfg.gap_threshold > 0.0))
    throw ConfigError("gap_threshold must be positive");
}

namespace {

int resolution_for(double eps, int cells_per_eps) {
  double per_unit = static_cast<double>(cells_per_eps) / eps;
  auto n = std::llround(per_unit);
  if (n < 1 || std::abs(per_unit - static_cast<double>(n)) > 1e-9 * per_unit)
    throw ConfigError("cells_per_eps/eps is not an integer resolution");
  if (n > (1 << 22)) throw ConfigError("mesh resolution out of range");
  return static_cast<int>(n);
}

// eps <= 0 builds the limit force (oscillation dropped).
std::vector<double> nodal_force(const Mesh& mesh, const ForceSpec& fs, int m,
                                double eps) {
  bool has_const = fs.constant.size() > 0;
  bool has_osc = fs.osc_amplitude != 0.0 && eps > 0.0;
  if (!has_const && !has_osc) return {};
  std::vector<double> f(static_cast<std::size_t>(mesh.n_nodes()) * m, 0.0);
  for (std::int64_t i = 0; i < mesh.n_nodes(); ++i) {
    Pt x = mesh.node_coord(i);
    double osc =
        has_osc ? fs.osc_amplitude * std::sin(2.0 * std::numbers::pi * x[0] / eps)
                : 0.0;
    for (int c = 0; c < m; ++c)
      f[static_cast<std::size_t>(i) * m + c] =
          (has_const ? fs.constant[c] : 0.0) + osc;
  }
  return f;
}

std::vector<double> node_weights(const Mesh& mesh) {
  std::vector<double> w(static_cast<std::size_t>(mesh.n_nodes()), 0.0);
  const double share = mesh.element_volume() / (mesh.d() + 1);
  std::array<std::int64_t, 4> nodes{};
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    mesh.element_nodes(e, nodes);
    for (int j = 0; j <= mesh.d(); ++j)
      w[static_cast<std::size_t>(nodes[j])] += share;
  }
  return w;
}

double node_norm(const DiscreteField& u, std::int64_t i) {
  double s = 0.0;
  for (int c = 0; c < u.m; ++c) s += u.at(i, c) * u.at(i, c);
  return std::sqrt(s);
}

// Mass-lumped L^p norm of the nodal Euclid norm; p = +inf gives the sup.
double lumped_norm(const DiscreteField& u, const std::vector<double>& w,
                   double p) {
  double out = 0.0;
  for (std::int64_t i = 0; i < std::ssize(w); ++i) {
    double r = node_norm(u, i);
    if (std::isinf(p))
      out = std::max(out, r);
    else
      out += w[static_cast<std::size_t>(i)] * std::pow(r, p);
  }
  return std::isinf(p) ? out : std::pow(out, 1.0 / p);
}

double grad_l1(const Mesh& mesh, const DiscreteField& u) {
  const double vol = mesh.element_volume();
  return chunked_sum(mesh.n_elements(), [&](std::int64_t e) {
    return vol * element_gradient(mesh, u, e).norm();
  });
}

double datum_w11(const Mesh& mesh, const AffineMap& g) {
  const double vol = mesh.element_volume();
  double val = chunked_sum(mesh.n_elements(), [&](std::int64_t e) {
    return vol * g.apply(mesh.element_barycenter(e), mesh.d()).norm();
  });
  return val + mesh.total_volume() * g.xi.norm();
}

double dstar_exponent(int d) {
  return d == 1 ? std::numeric_limits<double>::infinity()
                : static_cast<double>(d) / (d - 1.0);
}

// total >= bulk/2 - a_omega - C |g|_W11 from the lumped Hoelder pairing bound
// and elementwise Fenchel-Young at radius 2C, with C = C0 |f|_d and C0 the
// realized embedding ratio. Every quantity uses the same quadrature as the
// assembled energy, so the chain is exact up to roundoff.
CoercivityCertificate make_certificate(const EnergyProblem& prob,
                                       const IntegrandSpec* spec,
                                       const DiscreteField& u,
                                       const AffineMap& g, double total,
                                       double bulk, double u_dstar,
                                       const std::vector<double>& weights) {
  CoercivityCertificate cert;
  cert.total_energy = total;
  if (spec == nullptr) return cert;
  const Mesh& mesh = *prob.mesh;
  const int d = mesh.d();

  double f_norm = 0.0;
  if (!prob.force.empty()) {
    DiscreteField f;
    f.mesh = &mesh;
    f.m = prob.m();
    f.values = prob.force;
    f_norm = lumped_norm(f, weights, static_cast<double>(d));
  }
  double gw = datum_w11(mesh, g);
  double denom = grad_l1(mesh, u) + gw;
  double c0 = denom > 0.0 ? u_dstar / denom : 0.0;
  double big_c = c0 * f_norm;

  double half_a = 0.0;
  const double vol = mesh.element_volume();
  std::map<std::array<double, 3>, double> memo;
  try {
    for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
      const MaterialState& s = prob.elem_states[static_cast<std::size_t>(e)];
      std::array<double, 3> key{s.a, s.p, s.lam};
      auto it = memo.find(key);
      if (it == memo.end())
        it = memo.emplace(key, conjugate_sup_on_ball(*spec, s, 2.0 * big_c))
                 .first;
      half_a += 0.5 * vol * it->second;
    }
  } catch (const NumericalError&) {
    return cert;  // evaluated stays false
  }

  cert.evaluated = true;
  cert.c_const = big_c;
  cert.g_w11 = gw;
  cert.a_omega = half_a;
  cert.lower_bound = 0.5 * bulk - half_a - big_c * gw;
  cert.ok = total >= cert.lower_bound - 1e-9 * (1.0 + std::abs(cert.lower_bound));
  return cert;
}

DiscreteField datum_field(const Mesh& mesh, const AffineMap& g, int m) {
  DiscreteField u(mesh, m);
  for (std::int64_t i = 0; i < mesh.n_nodes(); ++i) {
    Vec gv = g.apply(mesh.node_coord(i), mesh.d());
    for (int c = 0; c < m; ++c) u.at(i, c) = gv[c];
  }
  return u;
}

void check_boundary_values(const EnergyProblem& prob, const DiscreteField& u) {
  const Mesh& mesh = *prob.mesh;
  const int m = prob.m();
  for (std::int64_t i = 0; i < mesh.n_nodes(); ++i) {
    if (!prob.dofs.pinned[static_cast<std::size_t>(i)]) continue;
    for (int c = 0; c < m; ++c)
      if (u.at(i, c) !=
          prob.dofs.pinned_values[static_cast<std::size_t>(i) * m + c])
        throw InvariantError("solution violates its Dirichlet values");
  }
}

BVPSolution finish_solution(const EnergyProblem& prob,
                            const IntegrandSpec* spec,
                            std::shared_ptr<const Mesh> mesh, Solution sol,
                            const AffineMap& g, double init_energy) {
  if (!(sol.energy <= init_energy + 1e-9 * (1.0 + std::abs(init_energy))))
    throw InvariantError("solve ended above the boundary-datum energy");
  BVPSolution out;
  out.u = std::move(sol.u);
  out.u.mesh = mesh.get();
  out.mesh = std::move(mesh);
  check_boundary_values(prob, out.u);
  out.total_energy = sol.energy;
  out.bulk_energy = assemble_bulk_energy(prob, out.u);
  out.el_residual = el_residual(prob, out.u);
  out.converged = sol.converged;
  out.iterations = sol.iterations;
  auto weights = node_weights(*out.mesh);
  out.l_dstar_norm =
      lumped_norm(out.u, weights, dstar_exponent(out.mesh->d()));
  out.coercivity =
      make_certificate(prob, spec, out.u, g, out.total_energy,
                       out.bulk_energy, out.l_dstar_norm, weights);
  if (out.coercivity.evaluated && !out.coercivity.ok)
    throw InvariantError("coercivity certificate failed");
  return out;
}

}  // namespace

BVPSolution solve_eps_problem(const BVPConfig& cfg, double eps,
                              std::uint64_t seed) {
  validate_bvp_config(cfg);
  bool listed = false;
  for (double e : cfg.eps_list)
    listed = listed || std::abs(e - eps) <= 1e-12 * e;
  if (!listed) throw ParameterError("eps is not in the configured eps_list");

  const int m = cfg.integrand.m;
  const int d = cfg.integrand.d;
  auto mesh = std::make_shared<const Mesh>(
      build_mesh(cfg.domain, resolution_for(eps, cfg.cells_per_eps)));

  CellWindow win;
  win.d = d;
  for (int a = 0; a < d; ++a) {
    win.lo[a] = static_cast<std::int64_t>(std::floor(cfg.domain.lo[a] / eps)) - 1;
    win.hi[a] = static_cast<std::int64_t>(std::ceil(cfg.domain.hi[a] / eps)) + 1;
  }
  FieldRealization field = realize_window(cfg.field, win, seed);

  FamilyDensity density(cfg.integrand);
  EnergyProblem prob = make_problem(
      *mesh, density, &field, Mat(m, d), eps, make_dirichlet_dofmap(*mesh, m, cfg.g),
      nodal_force(*mesh, cfg.force, m, eps), cfg.threads);

  DiscreteField init = datum_field(*mesh, cfg.g, m);
  double init_energy = assemble_energy(prob, init);
  SolveOptions opts = cfg.solve;
  opts.threads = cfg.threads;
  Solution sol = continuation_minimize(prob, init, opts);
  return finish_solution(prob, &cfg.integrand, std::move(mesh), std::move(sol),
                         cfg.g, init_energy);
}

BVPSolution solve_homogenized(const BVPConfig& cfg, const WhomTable& whom) {
  validate_bvp_config(cfg);
  validate_table(whom);
  if (whom.m != cfg.integrand.m || whom.d != cfg.integrand.d)
    throw ConfigError("whom table shape differs from the problem");

  const int m = cfg.integrand.m;
  const int d = cfg.integrand.d;
  auto mesh = std::make_shared<const Mesh>(build_mesh(
      cfg.domain, resolution_for(cfg.eps_list.back(), cfg.cells_per_eps)));

  TabulatedDensity density(whom);
  EnergyProblem prob = make_problem(
      *mesh, density, nullptr, Mat(m, d), 1.0,
      make_dirichlet_dofmap(*mesh, m, cfg.g),
      nodal_force(*mesh, cfg.force, m, 0.0), cfg.threads);

  DiscreteField init = datum_field(*mesh, cfg.g, m);
  double init_energy = assemble_energy(prob, init);
  SolveOptions opts = cfg.solve;
  opts.threads = cfg.threads;
  opts.smoothing_path.clear();
  Solution sol = minimize(prob, init, opts);

  for (std::int64_t e = 0; e < mesh->n_elements(); ++e)
    if (!whom.in_range(element_gradient(*mesh, sol.u, e)))
      throw ConfigError(
          "homogenized gradients left the tabulated range; rebuild the table "
          "on a wider lattice");
  return finish_solution(prob, nullptr, std::move(mesh), std::move(sol), cfg.g,
                         init_energy);
}

double el_residual(const EnergyProblem& problem, const DiscreteField& u) {
  auto folded = problem.dofs.fold(*problem.mesh,
                                  assemble_energy_gradient(problem, u));
  double s = 0.0;
  for (double v : folded) s = std::max(s, std::abs(v));
  return s;
}

StudyReport convergence_study(const BVPConfig& cfg, const WhomTable& whom,
                              const std::vector<std::uint64_t>& seeds) {
  validate_bvp_config(cfg);
  if (cfg.eps_list.size() < 3)
    throw ParameterError("convergence study needs at least three eps values");
  if (seeds.empty()) throw ParameterError("convergence study needs seeds");

  StudyReport rep;
  rep.eps_list = cfg.eps_list;
  BVPSolution hom = solve_homogenized(cfg, whom);
  rep.energy_hom = hom.total_energy;

  const std::int64_t ne = std::ssize(cfg.eps_list);
  const std::int64_t ns = std::ssize(seeds);
  rep.rows.resize(static_cast<std::size_t>(ne * ns));

  BVPConfig row_cfg = cfg;
  row_cfg.threads = 1;
  row_cfg.solve.threads = 1;
  // Same antithetic pairing as the table build: for fair two-state fields
  // each row's energy is averaged with the reversed-state solve.
  const FieldDistribution& dist = cfg.field.dist;
  const bool antithetic = !dist.uniform && dist.states.size() == 2 &&
                          dist.probs[0] == 0.5 && dist.probs[1] == 0.5;
  BVPConfig rev_cfg = row_cfg;
  if (antithetic)
    std::swap(rev_cfg.field.dist.states[0], rev_cfg.field.dist.states[1]);
  const double dstar = dstar_exponent(cfg.integrand.d);
  auto hom_weights =
      cfg.compare_minimizers ? node_weights(*hom.mesh) : std::vector<double>{};

  parallel_jobs(ne * ns, cfg.threads, [&](std::int64_t r) {
    const std::int64_t ei = r / ns;
    const std::int64_t si = r % ns;
    BVPSolution sol = solve_eps_problem(
        row_cfg, cfg.eps_list[static_cast<std::size_t>(ei)],
        seeds[static_cast<std::size_t>(si)]);
    StudyRow row;
    row.eps = cfg.eps_list[static_cast<std::size_t>(ei)];
    row.seed = seeds[static_cast<std::size_t>(si)];
    row.energy_eps = sol.total_energy;
    row.energy_hom = rep.energy_hom;
    row.residual = sol.el_residual;
    row.iterations = sol.iterations;
    if (antithetic) {
      BVPSolution rsol = solve_eps_problem(
          rev_cfg, cfg.eps_list[static_cast<std::size_t>(ei)],
          seeds[static_cast<std::size_t>(si)]);
      row.energy_eps = 0.5 * (sol.total_energy + rsol.total_energy);
      row.residual = std::max(sol.el_residual, rsol.el_residual);
      row.iterations += rsol.iterations;
    }
    row.gap = std::abs(row.energy_eps - rep.energy_hom);
    row.l_dstar_distance = 0.0;
    if (cfg.compare_minimizers) {
      DiscreteField diff = inject(sol.u, *hom.mesh);
      for (std::int64_t i = 0; i < std::ssize(diff.values); ++i)
        diff.values[static_cast<std::size_t>(i)] -=
            hom.u.values[static_cast<std::size_t>(i)];
      row.l_dstar_distance = lumped_norm(diff, hom_weights, dstar);
    }
    rep.rows[static_cast<std::size_t>(r)] = row;
  });

  rep.mean_gap.resize(static_cast<std::size_t>(ne));
  std::vector<double> energies(static_cast<std::size_t>(ns));
  for (std::int64_t ei = 0; ei < ne; ++ei) {
    for (std::int64_t si = 0; si < ns; ++si)
      energies[static_cast<std::size_t>(si)] =
          rep.rows[static_cast<std::size_t>(ei * ns + si)].energy_eps;
    double mean = pairwise_sum(energies) / static_cast<double>(ns);
    rep.mean_gap[static_cast<std::size_t>(ei)] = std::abs(mean - rep.energy_hom);
  }
  rep.gaps_decreasing = true;
  for (std::size_t i = 1; i < rep.mean_gap.size(); ++i)
    rep.gaps_decreasing =
        rep.gaps_decreasing && rep.mean_gap[i] <= rep.mean_gap[i - 1];
  rep.final_gap_rel =
      rep.mean_gap.back() / std::max(std::abs(rep.energy_hom), 1e-300);
  rep.ok = rep.gaps_decreasing && rep.final_gap_rel <= cfg.gap_threshold;
  return rep;
}

DiscreteField componentwise_truncate(const DiscreteField& u, double s) {
  if (!(s >= 0.0)) throw ParameterError("truncation level must be >= 0");
  DiscreteField v = u;
  for (double& x : v.values) x = std::clamp(x, -s, s);
  return v;
}

}  // namespace homog
