#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "homog/homogenize.hpp"

namespace homog {

// Tabulated homogenized integrand on a uniform lattice per gradient entry,
// evaluated by multilinear interpolation (exact at lattice points, convex
// chordal overestimate between them in each axis).
struct WhomTable {
  int m = 1;
  int d = 1;
  double lo = 0.0;
  double step = 1.0;
  int n = 0;  // lattice points per entry
  std::vector<double> values;  // n^(m*d), first entry slowest

  bool empty() const { return values.empty(); }
  double hi() const { return lo + step * (n - 1); }
  double value(const Mat& xi) const;  // extrapolates linearly outside
  Mat gradient(const Mat& xi) const;
  bool in_range(const Mat& xi) const;
};

// Shape, finiteness, and per-axis discrete convexity of the lattice values.
void validate_table(const WhomTable& t);

// Fills the table by running estimate_whom at every lattice point.
WhomTable build_whom_table(const CellOptions& opts,
                           const std::vector<std::int64_t>& t_list,
                           const std::vector<std::uint64_t>& seeds, double lo,
                           double step, int n);

class TabulatedDensity final : public EnergyDensity {
 public:
  explicit TabulatedDensity(const WhomTable& table) : table_(&table) {}
  double value(const MaterialState&, const Mat& grad) const override {
    return table_->value(grad);
  }
  Mat deriv(const MaterialState&, const Mat& grad) const override {
    return table_->gradient(grad);
  }

 private:
  const WhomTable* table_;
};

struct ForceSpec {
  Vec constant;                // limit force f, m entries
  double osc_amplitude = 0.0;  // f_eps adds amplitude*sin(2 pi x_1 / eps)
};

struct BVPConfig {
  Box domain;
  IntegrandSpec integrand;
  FieldSpec field;
  AffineMap g;
  ForceSpec force;
  std::vector<double> eps_list;  // strictly decreasing
  int cells_per_eps = 4;         // mesh elements per eps-cell and axis
  SolveOptions solve;
  int threads = 1;
  double gap_threshold = 0.02;     // relative final-gap assertion
  bool compare_minimizers = false; // distances only for strictly convex setups
};

void validate_bvp_config(const BVPConfig& cfg);

// Empirical compactness bookkeeping: total >= bulk/2 - a_omega - C*|g|_W11,
// derived per solve from discrete Hoelder + Fenchel-Young with the realized
// constants. evaluated=false when the conjugate bound is unavailable.
struct CoercivityCertificate {
  bool evaluated = false;
  bool ok = true;
  double total_energy = 0.0;
  double lower_bound = 0.0;
  double a_omega = 0.0;
  double c_const = 0.0;
  double g_w11 = 0.0;
};

struct BVPSolution {
  DiscreteField u;  // lives on the owned mesh below
  std::shared_ptr<const Mesh> mesh;
  double total_energy = 0.0;
  double bulk_energy = 0.0;
  double el_residual = 0.0;
  double l_dstar_norm = 0.0;  // L^{d/(d-1)} of u (sup norm when d=1)
  bool converged = false;
  int iterations = 0;
  CoercivityCertificate coercivity;
};

BVPSolution solve_eps_problem(const BVPConfig& cfg, double eps,
                              std::uint64_t seed);

// Minimizes the tabulated-W_hom energy with the limit force. The returned
// solution must have all element gradients inside the table range, else a
// ConfigError asks for re-tabulation.
BVPSolution solve_homogenized(const BVPConfig& cfg, const WhomTable& whom);

// Sup over free nodal test functions of the discrete Euler-Lagrange pairing;
// equals the folded free-gradient sup-norm at u.
double el_residual(const EnergyProblem& problem, const DiscreteField& u);

struct StudyRow {
  double eps;
  std::uint64_t seed;
  double energy_eps;
  double energy_hom;
  double gap;
  double l_dstar_distance;
  double residual;
  int iterations;
};

struct StudyReport {
  std::vector<StudyRow> rows;  // eps-major, seed-minor
  std::vector<double> eps_list;
  std::vector<double> mean_gap;  // |mean_seed(E_eps) - E_hom| per eps
  double energy_hom = 0.0;
  double final_gap_rel = 0.0;
  bool gaps_decreasing = false;
  bool ok = false;
};

StudyReport convergence_study(const BVPConfig& cfg, const WhomTable& whom,
                              const std::vector<std::uint64_t>& seeds);

// Clamps every component to [-s, s] nodewise.
DiscreteField componentwise_truncate(const DiscreteField& u, double s);

}  // namespace homog
