#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "homog/integrand.hpp"
#include "homog/la.hpp"

namespace homog {

enum class FieldKind {
  kConstant,
  kCheckerboard,  // iid state per unit cube
  kLaminate,      // iid state per unit slab in direction e1
};

const char* field_kind_name(FieldKind k);
FieldKind field_kind_from_name(const std::string& name);

// Distribution of the per-cell state: finite discrete support, or uniform
// intervals per parameter (bounded support keeps (A3) integrability at
// sample scale).
struct FieldDistribution {
  bool uniform = false;
  // Discrete case.
  std::vector<MaterialState> states;
  std::vector<double> probs;
  // Uniform case: per-parameter ranges.
  MaterialState lo;
  MaterialState hi;
};

struct FieldSpec {
  FieldKind kind = FieldKind::kConstant;
  int d = 1;
  FieldDistribution dist;
};

void validate_field(const FieldSpec& spec);

// Integer lattice cell index.
using CellIndex = std::array<std::int64_t, 3>;

// State of cell z: a pure function of (spec, z, seed) via counter-based
// hashing, so enlarging the window never changes existing cells.
MaterialState sample_cell_value(const FieldSpec& spec, const CellIndex& z,
                                std::uint64_t seed);

// Integer-cornered window of cells [lo, hi) per axis.
struct CellWindow {
  std::array<std::int64_t, 3> lo{0, 0, 0};
  std::array<std::int64_t, 3> hi{0, 0, 0};
  int d = 1;
};

class FieldRealization {
 public:
  FieldRealization(FieldSpec spec, CellWindow window, std::uint64_t seed);

  // State of the unit cell containing x (componentwise floor).
  const MaterialState& state_at(const Pt& x) const;
  const MaterialState& state_of_cell(const CellIndex& z) const;

  const FieldSpec& spec() const { return spec_; }
  const CellWindow& window() const { return window_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t n_cells() const {
    return static_cast<std::int64_t>(states_.size());
  }
  const std::vector<MaterialState>& states() const { return states_; }

 private:
  std::int64_t flat_index(const CellIndex& z) const;

  FieldSpec spec_;
  CellWindow window_;
  std::uint64_t seed_;
  std::vector<MaterialState> states_;
};

FieldRealization realize_window(const FieldSpec& spec, const CellWindow& window,
                                std::uint64_t seed);

// Convenience: the window of cells covering (-t, t)^d.
CellWindow symmetric_window(int d, std::int64_t t);

// Averages of observable(state) over the cells of (-t, t)^d, one entry per t.
struct ErgodicPoint {
  std::int64_t t;
  double average;
};
std::vector<ErgodicPoint> ergodic_average(
    const FieldSpec& spec,
    const std::function<double(const MaterialState&)>& observable,
    const std::vector<std::int64_t>& t_list, std::uint64_t seed);

}  // namespace homog
