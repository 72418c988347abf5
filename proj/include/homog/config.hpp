#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "homog/bvp.hpp"
#include "homog/homogenize.hpp"

namespace homog {

struct WhomTask {
  std::vector<Mat> xi_list;  // explicit sweep points
  bool use_grid = false;     // else a centered lattice per gradient entry
  double grid_lo = -1.0;
  double grid_step = 0.5;
  int grid_n = 5;
  std::vector<std::int64_t> t_list{8, 16, 32};
  int n_seeds = 8;
  BoundaryCondition bc = BoundaryCondition::kDirichletZero;
  int resolution = 8;
};

struct TableTask {
  double lo = -1.0;
  double step = 0.25;
  int n = 9;
  std::vector<std::int64_t> t_list{16, 32, 64};
  int n_seeds = 16;
  std::vector<double> values;  // when nonempty, used verbatim instead of estimating
};

struct BvpTask {
  Box domain;
  AffineMap g;
  ForceSpec force;
  std::vector<double> eps_list{0.25, 0.125, 0.0625};
  int cells_per_eps = 4;
  double gap_threshold = 0.02;
  bool compare_minimizers = false;
  int n_seeds = 8;
  TableTask table;
};

struct VerifyTask {
  std::vector<std::string> suites;
  int n_configs = 10;
  double xi_radius = 1.5;
  std::int64_t t = 4;
  int resolution = 4;
  int n_seeds = 4;
};

struct ExperimentConfig {
  int d = 1;
  int m = 1;
  IntegrandSpec integrand;
  FieldSpec field;
  SolveOptions solver;
  WhomTask whom;
  BvpTask bvp;
  VerifyTask verify;
  std::uint64_t master_seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  std::vector<std::string> notes;  // advisory validator findings
};

// Parses and validates; unknown keys, type mismatches and cross-field
// violations throw ConfigError (parse errors carry line:column positions).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin);

// Canonical JSON with every default made explicit.
std::string dump_config(const ExperimentConfig& cfg);

std::uint64_t config_hash(const ExperimentConfig& cfg);

// Per-job seed: stable under changes to the rest of the job set.
std::uint64_t job_seed(std::uint64_t master_seed, std::string_view job_key);

BVPConfig make_bvp_config(const ExperimentConfig& cfg);
CellOptions make_cell_options(const ExperimentConfig& cfg);

}  // namespace homog
