#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "homog/bvp.hpp"
#include "homog/config.hpp"
#include "homog/cutoff.hpp"
#include "homog/util.hpp"

using namespace homog;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Flags {
  bool strict = false;
  bool deterministic = false;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Rng {
  std::uint64_t seed;
  std::uint64_t counter = 0;
  double next() { return uniform01(splitmix64(hash_combine(seed, ++counter))); }
  double range(double lo, double hi) { return lo + (hi - lo) * next(); }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json mat_json(const Mat& xi) {
  json rows = json::array();
  for (int i = 0; i < xi.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < xi.cols(); ++j) row.push_back(xi(i, j));
    rows.push_back(row);
  }
  return rows;
}

void write_manifest(const ExperimentConfig& cfg, const Flags& flags,
                    const std::string& command) {
  json m;
  m["version"] = kVersion;
  m["command"] = command;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  m["config_hash"] = hash;
  m["master_seed"] = cfg.master_seed;
  m["threads"] = cfg.threads;
  m["deterministic"] = flags.deterministic;
  if (!flags.deterministic) {
    auto now = std::chrono::system_clock::now();
    m["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
            .count();
  }
  write_text(fs::path(cfg.out_dir) / "manifest.json", m.dump(2) + "\n");
  write_text(fs::path(cfg.out_dir) / "resolved_config.json", dump_config(cfg));
}

std::vector<std::uint64_t> derive_seeds(const ExperimentConfig& cfg,
                                        const std::string& prefix, int count) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    seeds[static_cast<std::size_t>(i)] =
        job_seed(cfg.master_seed, prefix + "/" + std::to_string(i));
  return seeds;
}

// --- whom -------------------------------------------------------------------

std::vector<Mat> sweep_points(const ExperimentConfig& cfg) {
  if (!cfg.whom.use_grid) return cfg.whom.xi_list;
  const int k = cfg.m * cfg.d;
  std::int64_t total = 1;
  for (int q = 0; q < k; ++q) {
    total *= cfg.whom.grid_n;
    if (total > 4096)
      throw ConfigError("whom grid has more than 4096 points");
  }
  std::vector<Mat> out;
  for (std::int64_t flat = 0; flat < total; ++flat) {
    Mat xi(cfg.m, cfg.d);
    std::int64_t rem = flat;
    for (int q = k - 1; q >= 0; --q) {
      xi[q] = cfg.whom.grid_lo +
              static_cast<double>(rem % cfg.whom.grid_n) * cfg.whom.grid_step;
      rem /= cfg.whom.grid_n;
    }
    out.push_back(xi);
  }
  return out;
}

int cmd_whom(const ExperimentConfig& cfg, const Flags& flags) {
  CellOptions opts = make_cell_options(cfg);
  auto seeds = derive_seeds(cfg, "whom/seed", cfg.whom.n_seeds);
  auto xis = sweep_points(cfg);

  std::ofstream csv(fs::path(cfg.out_dir) / "whom.csv", std::ios::binary);
  for (int i = 0; i < cfg.m; ++i)
    for (int j = 0; j < cfg.d; ++j)
      csv << "xi_" << i << "_" << j << ",";
  csv << "t,seed,bc,value,iterations,converged,wallclock_s\n";

  json summary = json::array();
  bool flagged = false;
  for (const Mat& xi : xis) {
    double t0 = now_s();
    HomogenizedEstimate est = estimate_whom(xi, cfg.whom.t_list, seeds, opts);
    double wall = flags.deterministic ? 0.0 : now_s() - t0;
    for (std::size_t ti = 0; ti < est.t_list.size(); ++ti) {
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        for (int q = 0; q < cfg.m * cfg.d; ++q) csv << fmt(xi[q]) << ",";
        csv << est.t_list[ti] << "," << seeds[si] << "," << bc_name(opts.bc)
            << "," << fmt(est.samples[ti][si]) << ","
            << est.iterations[ti][si] << ","
            << int(est.sample_converged[ti][si]) << "," << fmt(wall) << "\n";
      }
    }
    json entry;
    entry["xi"] = mat_json(xi);
    entry["value"] = est.value;
    entry["fit_slope"] = est.fit_slope;
    entry["fit_residual"] = est.fit_residual;
    entry["mean"] = est.mean;
    entry["stderr"] = est.stderr_mean;
    entry["all_converged"] = est.all_converged;
    summary.push_back(entry);
    flagged = flagged || !est.all_converged;
  }
  write_text(fs::path(cfg.out_dir) / "whom_summary.json",
             summary.dump(2) + "\n");
  if (flagged) std::cerr << "warning: some estimates did not converge\n";
  return flags.strict && flagged ? 1 : 0;
}

// --- bvp ---------------------------------------------------------------------

int cmd_bvp(const ExperimentConfig& cfg, const Flags& flags) {
  WhomTable table;
  if (!cfg.bvp.table.values.empty()) {
    table.m = cfg.m;
    table.d = cfg.d;
    table.lo = cfg.bvp.table.lo;
    table.step = cfg.bvp.table.step;
    table.n = cfg.bvp.table.n;
    table.values = cfg.bvp.table.values;
    validate_table(table);
  } else {
    CellOptions copts = make_cell_options(cfg);
    auto table_seeds = derive_seeds(cfg, "table/seed", cfg.bvp.table.n_seeds);
    table =
        build_whom_table(copts, cfg.bvp.table.t_list, table_seeds,
                         cfg.bvp.table.lo, cfg.bvp.table.step, cfg.bvp.table.n);
  }

  BVPConfig bcfg = make_bvp_config(cfg);
  auto seeds = derive_seeds(cfg, "bvp/seed", cfg.bvp.n_seeds);
  StudyReport rep = convergence_study(bcfg, table, seeds);

  std::ofstream csv(fs::path(cfg.out_dir) / "bvp.csv", std::ios::binary);
  csv << "eps,seed,energy_eps,energy_hom,gap,l_dstar_distance,residual,"
         "iterations\n";
  for (const StudyRow& row : rep.rows)
    csv << fmt(row.eps) << "," << row.seed << "," << fmt(row.energy_eps) << ","
        << fmt(row.energy_hom) << "," << fmt(row.gap) << ","
        << fmt(row.l_dstar_distance) << "," << fmt(row.residual) << ","
        << row.iterations << "\n";

  json summary;
  summary["energy_hom"] = rep.energy_hom;
  summary["eps_list"] = rep.eps_list;
  summary["mean_gap"] = rep.mean_gap;
  summary["final_gap_rel"] = rep.final_gap_rel;
  summary["gaps_decreasing"] = rep.gaps_decreasing;
  summary["ok"] = rep.ok;
  write_text(fs::path(cfg.out_dir) / "bvp_summary.json", summary.dump(2) + "\n");

  if (!rep.ok) {
    std::cerr << "energy-gap trend assertion failed (final_gap_rel="
              << rep.final_gap_rel << ")\n";
    return 1;
  }
  if (flags.strict)
    for (const StudyRow& row : rep.rows)
      if (row.residual > cfg.solver.tol_grad) return 1;
  return 0;
}

// --- verify suites -----------------------------------------------------------

struct SuiteResult {
  std::string name;
  bool ok = true;
  json metrics;
};

std::vector<std::pair<Mat, double>> line_estimates(const ExperimentConfig& cfg,
                                                   std::uint64_t seed,
                                                   int count) {
  CellOptions opts = make_cell_options(cfg);
  opts.bc = BoundaryCondition::kDirichletZero;
  opts.resolution = cfg.verify.resolution;
  std::vector<std::pair<Mat, double>> out;
  for (int j = 0; j < count; ++j) {
    Mat xi(cfg.m, cfg.d);
    xi[0] = -cfg.verify.xi_radius +
            2.0 * cfg.verify.xi_radius * j / (count - 1);
    out.emplace_back(xi, multicell_estimate({xi, cfg.verify.t, seed, opts}));
  }
  return out;
}

SuiteResult suite_convexity(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "convexity";
  auto estimates =
      line_estimates(cfg, job_seed(cfg.master_seed, "verify/convexity"), 9);
  ConvexityReport rep = verify_convexity(estimates, 1e-6);
  res.ok = rep.ok;
  res.metrics = {{"n_triples", rep.n_triples},
                 {"n_violations", rep.n_violations},
                 {"max_violation", rep.max_violation}};
  return res;
}

SuiteResult suite_growth(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "growth";
  auto estimates =
      line_estimates(cfg, job_seed(cfg.master_seed, "verify/growth"), 9);
  double p_eff = cfg.integrand.family == Family::kQuadratic
                     ? 2.0
                     : cfg.integrand.p;
  GrowthVerifyReport rep = verify_growth(estimates, p_eff, 1e-9);
  double a_min = cfg.field.dist.uniform
                     ? cfg.field.dist.lo.a
                     : [&] {
                         double m = cfg.field.dist.states.front().a;
                         for (const auto& s : cfg.field.dist.states)
                           m = std::min(m, s.a);
                         return m;
                       }();
  bool a5_applies =
      (cfg.integrand.family == Family::kQuadratic && a_min >= 2.0) ||
      (cfg.integrand.family == Family::kPower && a_min >= cfg.integrand.p);
  res.ok = (!a5_applies || rep.a5_ok) && rep.c0 <= 1.0 + 1e-9;
  res.metrics = {{"a5_applies", a5_applies},
                 {"a5_min_margin", rep.a5_min_margin},
                 {"c0", rep.c0},
                 {"n_mask_pairs", rep.n_mask_pairs}};
  return res;
}

SuiteResult suite_structural(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "structural";
  int violations = 0;
  const Family families[] = {Family::kQuadratic, Family::kPower,
                             Family::kDoublePhase};
  for (int i = 0; i < cfg.verify.n_configs; ++i) {
    Rng rng{job_seed(cfg.master_seed, "verify/structural/" + std::to_string(i))};
    IntegrandSpec spec;
    spec.family = families[i % 3];
    spec.m = 1;
    spec.d = rng.next() < 0.5 ? 1 : 2;
    spec.p = rng.range(1.5, 3.0);
    spec.q = spec.p + rng.range(0.1, 1.0);

    FieldSpec field;
    field.d = spec.d;
    field.kind = i % 2 ? FieldKind::kLaminate : FieldKind::kCheckerboard;
    for (int s = 0; s < 2; ++s) {
      MaterialState st;
      st.a = rng.range(0.5, 4.0);
      st.p = rng.range(1.5, 3.0);
      field.dist.states.push_back(st);
      field.dist.probs.push_back(0.5);
    }

    CellOptions opts;
    opts.integrand = spec;
    opts.field = field;
    opts.bc = BoundaryCondition::kDirichletZero;
    opts.resolution = cfg.verify.resolution;
    opts.solve = cfg.solver;
    opts.threads = cfg.threads;

    Mat xi(1, spec.d);
    for (int q = 0; q < spec.d; ++q)
      xi[q] = rng.range(-cfg.verify.xi_radius, cfg.verify.xi_radius);
    std::uint64_t seed = job_seed(cfg.master_seed,
                                  "verify/structural/field/" + std::to_string(i));
    try {
      CellResult cell = multicell_estimate_full({xi, cfg.verify.t, seed, opts});
      if (cell.value < 0.0 ||
          cell.value > cell.affine_bound + 1e-12 * (1.0 + cell.affine_bound))
        ++violations;
      SubadditivityReport sub =
          subadditivity_check(xi, cfg.verify.t, seed, opts);
      if (!sub.ok) ++violations;
    } catch (const InvariantError&) {
      ++violations;
    }
  }
  res.ok = violations == 0;
  res.metrics = {{"n_configs", cfg.verify.n_configs},
                 {"violations", violations}};
  return res;
}

double gradient_fd_error(const Mat& xi, std::int64_t t,
                         const std::vector<std::uint64_t>& seeds,
                         const CellOptions& opts) {
  Mat grad = whom_gradient(xi, t, seeds, opts);
  const double h = 1e-4 * std::max(1.0, xi.norm());
  Mat fd(xi.rows(), xi.cols());
  for (int q = 0; q < xi.size(); ++q) {
    Mat lo = xi, hi = xi;
    lo[q] -= h;
    hi[q] += h;
    double v_hi = estimate_whom(hi, {t}, seeds, opts).value;
    double v_lo = estimate_whom(lo, {t}, seeds, opts).value;
    fd[q] = (v_hi - v_lo) / (2.0 * h);
  }
  return (grad - fd).norm() / std::max(grad.norm(), 1e-12);
}

SuiteResult suite_gradient(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "gradient";
  CellOptions opts = make_cell_options(cfg);
  opts.bc = BoundaryCondition::kPeriodic;
  Mat xi(cfg.m, cfg.d);
  for (int k = 0; k < std::min(cfg.m, cfg.d); ++k) xi(k, k) = 1.0;

  CellOptions det = opts;
  det.field.kind = FieldKind::kLaminate;
  double det_err = gradient_fd_error(
      xi, cfg.verify.t, derive_seeds(cfg, "verify/gradient/det", 2), det);

  CellOptions sto = opts;
  sto.field.kind = FieldKind::kCheckerboard;
  double sto_err = gradient_fd_error(
      xi, cfg.verify.t, derive_seeds(cfg, "verify/gradient/sto", 8), sto);

  res.ok = det_err <= 1e-3 && sto_err <= 5e-2;
  res.metrics = {{"deterministic_rel_error", det_err},
                 {"stochastic_rel_error", sto_err}};
  return res;
}

SuiteResult suite_duality(const ExperimentConfig& cfg) {
  if (cfg.d != 1 || cfg.m != 1)
    throw ConfigError("duality suite needs d = m = 1");
  SuiteResult res;
  res.name = "duality";
  CellOptions opts = make_cell_options(cfg);
  int n_seeds = std::max(cfg.whom.n_seeds, 32);
  auto seeds = derive_seeds(cfg, "verify/duality/seed", n_seeds);

  std::vector<std::array<double, 2>> graph;
  for (double x = -1.5; x <= 1.5 + 1e-12; x += 0.0625) {
    Mat xi(1, 1);
    xi[0] = x;
    graph.push_back({x, estimate_whom(xi, cfg.whom.t_list, seeds, opts).value});
  }

  // E[conjugate] sampled over the same realizations the graph came from, so
  // the shared sampling fluctuation cancels out of the comparison.
  std::vector<FieldRealization> windows;
  for (std::uint64_t seed : seeds)
    windows.push_back(realize_window(
        cfg.field, symmetric_window(1, cfg.whom.t_list.back()), seed));
  double max_rel = 0.0;
  for (double eta : {-1.8, -1.6, -1.4, -1.2, -1.0, 1.0, 1.2, 1.4, 1.6, 1.8}) {
    double lhs = conjugate_of_table(graph, eta);
    Mat eta_mat(1, 1);
    eta_mat[0] = eta;
    double rhs = 0.0;
    std::size_t n_cells = 0;
    for (const FieldRealization& cells : windows) {
      for (const MaterialState& s : cells.states())
        rhs += conjugate_auto(cfg.integrand, s, eta_mat);
      n_cells += cells.n_cells();
    }
    rhs /= static_cast<double>(n_cells);
    max_rel = std::max(max_rel, std::abs(lhs - rhs) / std::abs(rhs));
  }
  res.ok = max_rel <= 0.03;
  res.metrics = {{"max_rel_error", max_rel}};
  return res;
}

std::vector<MaterialState> draw_states(const ExperimentConfig& cfg, int count,
                                       const char* key) {
  std::vector<MaterialState> states;
  std::uint64_t seed = job_seed(cfg.master_seed, key);
  for (int i = 0; i < count; ++i)
    states.push_back(sample_cell_value(cfg.field, {i, 0, 0}, seed));
  return states;
}

std::vector<Mat> draw_mats(const ExperimentConfig& cfg, int count,
                           const char* key) {
  Rng rng{job_seed(cfg.master_seed, key)};
  std::vector<Mat> xis;
  for (int i = 0; i < count; ++i) {
    Mat xi(cfg.m, cfg.d);
    for (int q = 0; q < xi.size(); ++q)
      xi[q] = rng.range(-cfg.verify.xi_radius, cfg.verify.xi_radius);
    xis.push_back(xi);
  }
  return xis;
}

SuiteResult suite_evenness(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "evenness";
  auto states = draw_states(cfg, 8, "verify/evenness/states");
  auto xis = draw_mats(cfg, 16, "verify/evenness/xis");
  GrowthReport rep = check_almost_even(cfg.integrand, states, xis);
  res.ok = rep.c <= 1.0 + 1e-12 && rep.lambda <= 1e-12;
  res.metrics = {{"c", rep.c}, {"lambda", rep.lambda}, {"n_pairs", rep.n_pairs}};
  return res;
}

SuiteResult suite_monotonicity(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "monotonicity";
  auto states = draw_states(cfg, 8, "verify/monotonicity/states");
  auto xis = draw_mats(cfg, 16, "verify/monotonicity/xis");
  GrowthReport rep = check_mild_monotonicity(cfg.integrand, states, xis);
  res.ok = rep.c <= 1.0 + 1e-12 && rep.lambda <= 1e-12;
  res.metrics = {{"c", rep.c}, {"lambda", rep.lambda}, {"n_pairs", rep.n_pairs}};
  return res;
}

SuiteResult suite_cutoff(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "cutoff";
  const double ps[] = {1.5, 2.0, 3.0};
  const double deltas[] = {0.1, 0.25, 0.5};
  int failures = 0;
  double max_c = 0.0;
  Box box;
  box.d = 2;
  box.lo = {-1.0, -1.0, 0.0};
  box.hi = {1.0, 1.0, 0.0};
  Mesh mesh = build_mesh(box, 16);
  for (int i = 0; i < cfg.verify.n_configs; ++i) {
    Rng rng{job_seed(cfg.master_seed, "verify/cutoff/" + std::to_string(i))};
    double p = ps[i % 3];
    double delta = deltas[(i / 3) % 3];
    int n_fields = 1 + i % 3;
    std::vector<DiscreteField> fields;
    for (int f = 0; f < n_fields; ++f) {
      DiscreteField u(mesh, 1);
      for (double& v : u.values) v = rng.range(-1.0, 1.0);
      fields.push_back(std::move(u));
    }
    std::vector<const DiscreteField*> ptrs;
    for (const auto& f : fields) ptrs.push_back(&f);
    try {
      AnnulusData data =
          collect_annulus(mesh, ptrs, {0.0, 0.0, 0.0}, 1.0, delta, p);
      GoodRadii good = good_radii(data, p);
      RadialCutoff cut = build_cutoff(good, data);
      bool ok = cut.eval(0.5 * (1.0 - delta)) == 1.0;
      double prev = 2.0;
      for (double r = 0.0; r <= 1.05; r += delta / 50.0) {
        double v = cut.eval(r);
        ok = ok && v >= 0.0 && v <= 1.0 && v <= prev + 1e-12 &&
             cut.slope_mag_at(r) <= cut.lipschitz();
        prev = v;
      }
      ok = ok && cut.lipschitz() <= 2.0 / (delta * 1.0) * (1.0 + 1e-12);
      ProductBoundReport bound =
          verify_product_bound(cut, mesh, ptrs, data, 1.0);
      ok = ok && std::isfinite(bound.c_rho_n) && bound.c_rho_n >= 0.0;
      max_c = std::max(max_c, bound.c_rho_n);
      if (!ok) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  res.ok = failures == 0;
  res.metrics = {{"trials", cfg.verify.n_configs},
                 {"failures", failures},
                 {"max_c_rho_n", max_c}};
  return res;
}

SuiteResult suite_luxemburg(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "luxemburg";
  bool ok = true;
  double worst_scale = 0.0;
  for (int i = 0; i < cfg.verify.n_configs; ++i) {
    Rng rng{job_seed(cfg.master_seed, "verify/luxemburg/" + std::to_string(i))};
    auto states = draw_states(cfg, 8, "verify/luxemburg/states");
    std::vector<double> volumes(states.size(), 1.0 / double(states.size()));
    std::vector<Mat> g;
    for (std::size_t e = 0; e < states.size(); ++e) {
      Mat x(cfg.m, cfg.d);
      for (int q = 0; q < x.size(); ++q) x[q] = rng.range(-2.0, 2.0);
      g.push_back(x);
    }
    double n1 = luxemburg_norm(cfg.integrand, states, volumes, g);
    std::vector<Mat> g2 = g;
    for (Mat& x : g2) x *= 2.0;
    double n2 = luxemburg_norm(cfg.integrand, states, volumes, g2);
    double scale_err = std::abs(n2 - 2.0 * n1) / std::max(n2, 1e-12);
    worst_scale = std::max(worst_scale, scale_err);
    ok = ok && scale_err <= 1e-6;

    std::vector<Mat> bigger = g;
    bigger[0] *= 2.0;
    ok = ok && luxemburg_norm(cfg.integrand, states, volumes, bigger) >=
                   n1 * (1.0 - 1e-9);

    if (n1 > 0.0) {
      double unit = 0.0;
      for (std::size_t e = 0; e < states.size(); ++e) {
        Mat scaled = g[e];
        scaled *= 1.0 / n1;
        unit += volumes[e] * eval(cfg.integrand, states[e], scaled);
      }
      ok = ok && unit <= 1.0 + 1e-6;
    }
  }
  res.ok = ok;
  res.metrics = {{"max_homogeneity_error", worst_scale}};
  return res;
}

SuiteResult suite_truncation(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "truncation";
  auto states = draw_states(cfg, 4, "verify/truncation/states");
  const double q = cfg.d == 3 ? 1.25 : 1.5;
  const int ks[] = {1, 2, 4, 8};
  auto xis = draw_mats(cfg, 12, "verify/truncation/xis");
  for (int j = 0; j < 9; ++j) {
    Mat xi(cfg.m, cfg.d);
    xi[0] = -cfg.verify.xi_radius + 2.0 * cfg.verify.xi_radius * j / 8.0;
    xis.push_back(xi);
  }

  int violations = 0;
  std::vector<double> sup_gap;
  std::vector<std::vector<double>> wk_vals;
  for (int k : ks) {
    TruncatedIntegrand trunc =
        truncate_integrand(cfg.integrand, states, k, q);
    double gap = 0.0;
    std::vector<double> vals;
    for (std::size_t si = 0; si < states.size(); ++si) {
      for (const Mat& xi : xis) {
        double w = eval(cfg.integrand, states[si], xi);
        double wk = trunc.eval(static_cast<int>(si), xi);
        double growth =
            trunc.growth_constant() * (1.0 + std::pow(xi.norm(), q));
        if (wk > w + 1e-10 * (1.0 + std::abs(w))) ++violations;
        if (wk > growth * (1.0 + 1e-10)) ++violations;
        gap = std::max(gap, w - wk);
        vals.push_back(wk);
      }
    }
    for (std::size_t idx = 0; idx < vals.size(); ++idx)
      if (!wk_vals.empty() &&
          vals[idx] + 1e-10 * (1.0 + std::abs(vals[idx])) <
              wk_vals.back()[idx])
        ++violations;
    wk_vals.push_back(std::move(vals));
    if (!sup_gap.empty() && gap > sup_gap.back() + 1e-10 * (1.0 + gap))
      ++violations;
    sup_gap.push_back(gap);
  }
  res.ok = violations == 0;
  res.metrics = {{"violations", violations}, {"sup_gap", sup_gap}};
  return res;
}

SuiteResult suite_envelope(const ExperimentConfig& cfg) {
  SuiteResult res;
  res.name = "envelope";
  bool ok = true;
  for (int i = 0; i < cfg.verify.n_configs; ++i) {
    Rng rng{job_seed(cfg.master_seed, "verify/envelope/" + std::to_string(i))};
    std::vector<std::pair<double, double>> samples;
    for (int j = 0; j <= 12; ++j)
      samples.emplace_back(0.25 * j, rng.range(0.0, 3.0));
    RadialFunction f(samples, rng.range(1.0, 3.0) +
                                  (samples.back().second + 3.0) / 0.25);
    RadialFunction env = radial_convex_envelope(f, cfg.d);
    for (const auto& [r, v] : samples)
      ok = ok && env.eval(r) <= v + 1e-12 * (1.0 + std::abs(v));
    RadialFunction env2 = radial_convex_envelope(env, cfg.d);
    for (double r = 0.0; r <= 4.0; r += 0.05) {
      ok = ok && std::abs(env2.eval(r) - env.eval(r)) <= 1e-10;
      double mid = 0.5 * (env.eval(r) + env.eval(r + 0.2));
      ok = ok && env.eval(r + 0.1) <= mid + 1e-10;
    }
  }
  // Convex increasing input: the envelope is the identity.
  std::vector<std::pair<double, double>> conv;
  for (int j = 0; j <= 12; ++j) conv.emplace_back(0.25 * j, 0.0625 * j * j);
  RadialFunction g(conv, 7.0);
  RadialFunction env_g = radial_convex_envelope(g, cfg.d);
  for (const auto& [r, v] : conv) ok = ok && std::abs(env_g.eval(r) - v) <= 1e-12;
  res.ok = ok;
  res.metrics = {{"trials", cfg.verify.n_configs}};
  return res;
}

int cmd_verify(const ExperimentConfig& cfg, const Flags&) {
  if (cfg.verify.suites.empty())
    throw ConfigError("verify needs a nonempty suite selection");
  json report = json::array();
  bool all_ok = true;
  for (const std::string& name : cfg.verify.suites) {
    SuiteResult r;
    if (name == "convexity")
      r = suite_convexity(cfg);
    else if (name == "structural")
      r = suite_structural(cfg);
    else if (name == "growth")
      r = suite_growth(cfg);
    else if (name == "gradient")
      r = suite_gradient(cfg);
    else if (name == "duality")
      r = suite_duality(cfg);
    else if (name == "evenness")
      r = suite_evenness(cfg);
    else if (name == "monotonicity")
      r = suite_monotonicity(cfg);
    else if (name == "cutoff")
      r = suite_cutoff(cfg);
    else if (name == "luxemburg")
      r = suite_luxemburg(cfg);
    else if (name == "truncation")
      r = suite_truncation(cfg);
    else if (name == "envelope")
      r = suite_envelope(cfg);
    else
      throw ConfigError("unknown verify suite: " + name);
    std::cout << "suite " << r.name << ": " << (r.ok ? "pass" : "FAIL") << " "
              << r.metrics.dump() << "\n";
    json entry = {{"suite", r.name}, {"ok", r.ok}, {"metrics", r.metrics}};
    report.push_back(entry);
    all_ok = all_ok && r.ok;
  }
  write_text(fs::path(cfg.out_dir) / "verify_report.json",
             report.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

// --- field-dump ---------------------------------------------------------------

int cmd_field_dump(const ExperimentConfig& cfg, const Flags&) {
  CellWindow window = symmetric_window(cfg.d, cfg.whom.t_list.back());
  std::uint64_t seed = job_seed(cfg.master_seed, "field-dump");
  FieldRealization field = realize_window(cfg.field, window, seed);

  std::ofstream bin(fs::path(cfg.out_dir) / "field_states.bin",
                    std::ios::binary);
  for (const MaterialState& s : field.states()) {
    double row[3] = {s.a, s.p, s.lam};
    bin.write(reinterpret_cast<const char*>(row), sizeof row);
  }

  json header;
  header["kind"] = field_kind_name(cfg.field.kind);
  header["d"] = cfg.d;
  json lo = json::array(), hi = json::array();
  for (int a = 0; a < cfg.d; ++a) {
    lo.push_back(window.lo[a]);
    hi.push_back(window.hi[a]);
  }
  header["window"] = {{"lo", lo}, {"hi", hi}};
  header["seed"] = seed;
  header["n_cells"] = field.n_cells();
  header["layout"] = "a,p,lam per cell, first axis slowest";
  write_text(fs::path(cfg.out_dir) / "field_header.json",
             header.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homogenized integrand estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int threads_override = 0;
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment JSON file")
        ->required();
    sub->add_option("--threads", threads_override, "worker threads");
    sub->add_flag("--strict", flags.strict,
                  "nonzero exit on flagged estimates");
    sub->add_flag("--deterministic", flags.deterministic,
                  "suppress timestamps and wallclock columns");
    sub->add_option("--out", out_override, "output directory");
  };
  add_common(app.add_subcommand("whom", "multi-cell sweep"));
  add_common(app.add_subcommand("bvp", "eps-problem convergence study"));
  add_common(app.add_subcommand("verify", "property suites"));
  add_common(app.add_subcommand("field-dump", "write one field realization"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (threads_override > 0) cfg.threads = threads_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    fs::create_directories(cfg.out_dir);
    const std::string cmd = app.get_subcommands().front()->get_name();
    write_manifest(cfg, flags, cmd);
    if (cmd == "whom") return cmd_whom(cfg, flags);
    if (cmd == "bvp") return cmd_bvp(cfg, flags);
    if (cmd == "verify") return cmd_verify(cfg, flags);
    return cmd_field_dump(cfg, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
