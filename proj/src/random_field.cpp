#include "homog/random_field.hpp"

#include <cmath>

#include "homog/util.hpp"

namespace homog {

const char* field_kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::kConstant: return "constant";
    case FieldKind::kCheckerboard: return "checkerboard";
    case FieldKind::kLaminate: return "laminate";
  }
  return "?";
}

FieldKind field_kind_from_name(const std::string& name) {
  if (name == "constant") return FieldKind::kConstant;
  if (name == "checkerboard") return FieldKind::kCheckerboard;
  if (name == "laminate") return FieldKind::kLaminate;
  throw ConfigError("unknown field kind: " + name);
}

void validate_field(const FieldSpec& spec) {
  if (spec.d < 1 || spec.d > 3) throw ConfigError("field dimension must be 1..3");
  const auto& dist = spec.dist;
  if (dist.uniform) {
    if (!(dist.lo.a <= dist.hi.a && dist.lo.p <= dist.hi.p &&
          dist.lo.lam <= dist.hi.lam))
      throw ConfigError("uniform field ranges must satisfy lo <= hi");
    return;
  }
  if (dist.states.empty()) throw ConfigError("field distribution is empty");
  if (dist.states.size() != dist.probs.size())
    throw ConfigError("field states/probs length mismatch");
  double total = 0.0;
  for (double pr : dist.probs) {
    if (!(pr >= 0.0)) throw ConfigError("field probabilities must be >= 0");
    total += pr;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("field probabilities must sum to 1");
}

namespace {

std::uint64_t cell_hash(const FieldSpec& spec, const CellIndex& z,
                        std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  const int used = spec.kind == FieldKind::kLaminate ? 1 : spec.d;
  for (int k = 0; k < used; ++k)
    h = hash_combine(h, static_cast<std::uint64_t>(z[static_cast<std::size_t>(k)]));
  return h;
}

}  // namespace

MaterialState sample_cell_value(const FieldSpec& spec, const CellIndex& z,
                                std::uint64_t seed) {
  validate_field(spec);
  const auto& dist = spec.dist;
  if (spec.kind == FieldKind::kConstant)
    return dist.uniform ? dist.lo : dist.states.front();

  const std::uint64_t h = cell_hash(spec, z, seed);
  if (dist.uniform) {
    // Independent substream per parameter.
    MaterialState s;
    s.a = dist.lo.a +
          (dist.hi.a - dist.lo.a) * uniform01(splitmix64(hash_combine(h, 1)));
    s.p = dist.lo.p +
          (dist.hi.p - dist.lo.p) * uniform01(splitmix64(hash_combine(h, 2)));
    s.lam = dist.lo.lam + (dist.hi.lam - dist.lo.lam) *
                              uniform01(splitmix64(hash_combine(h, 3)));
    return s;
  }
  const double u = uniform01(splitmix64(h));
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.states.size(); ++i) {
    cum += dist.probs[i];
    if (u < cum) return dist.states[i];
  }
  return dist.states.back();
}

FieldRealization::FieldRealization(FieldSpec spec, CellWindow window,
                                   std::uint64_t seed)
    : spec_(std::move(spec)), window_(window), seed_(seed) {
  validate_field(spec_);
  if (window_.d != spec_.d) throw ConfigError("window/field dimension mismatch");
  std::int64_t n = 1;
  for (int k = 0; k < window_.d; ++k) {
    const auto extent = window_.hi[static_cast<std::size_t>(k)] -
                        window_.lo[static_cast<std::size_t>(k)];
    if (extent <= 0) throw ConfigError("window must have positive volume");
    n *= extent;
  }
  states_.resize(static_cast<std::size_t>(n));
  CellIndex z{0, 0, 0};
  for (std::int64_t flat = 0; flat < n; ++flat) {
    std::int64_t rem = flat;
    for (int k = window_.d - 1; k >= 0; --k) {
      const auto extent = window_.hi[static_cast<std::size_t>(k)] -
                          window_.lo[static_cast<std::size_t>(k)];
      z[static_cast<std::size_t>(k)] =
          window_.lo[static_cast<std::size_t>(k)] + rem % extent;
      rem /= extent;
    }
    states_[static_cast<std::size_t>(flat)] = sample_cell_value(spec_, z, seed_);
  }
}

std::int64_t FieldRealization::flat_index(const CellIndex& z) const {
  std::int64_t flat = 0;
  for (int k = 0; k < window_.d; ++k) {
    const auto lo = window_.lo[static_cast<std::size_t>(k)];
    const auto extent = window_.hi[static_cast<std::size_t>(k)] - lo;
    const auto zk = z[static_cast<std::size_t>(k)];
    if (zk < lo || zk >= window_.hi[static_cast<std::size_t>(k)])
      throw WindowError("cell lookup outside the realized window");
    flat = flat * extent + (zk - lo);
  }
  return flat;
}

const MaterialState& FieldRealization::state_of_cell(const CellIndex& z) const {
  return states_[static_cast<std::size_t>(flat_index(z))];
}

const MaterialState& FieldRealization::state_at(const Pt& x) const {
  CellIndex z{0, 0, 0};
  for (int k = 0; k < window_.d; ++k)
    z[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(
        std::floor(x[static_cast<std::size_t>(k)]));
  return state_of_cell(z);
}

FieldRealization realize_window(const FieldSpec& spec, const CellWindow& window,
                                std::uint64_t seed) {
  return FieldRealization(spec, window, seed);
}

CellWindow symmetric_window(int d, std::int64_t t) {
  if (t <= 0) throw ConfigError("window half-width must be positive");
  CellWindow w;
  w.d = d;
  for (int k = 0; k < d; ++k) {
    w.lo[static_cast<std::size_t>(k)] = -t;
    w.hi[static_cast<std::size_t>(k)] = t;
  }
  return w;
}

std::vector<ErgodicPoint> ergodic_average(
    const FieldSpec& spec,
    const std::function<double(const MaterialState&)>& observable,
    const std::vector<std::int64_t>& t_list, std::uint64_t seed) {
  validate_field(spec);
  std::vector<ErgodicPoint> out;
  out.reserve(t_list.size());
  for (const std::int64_t t : t_list) {
    const FieldRealization field =
        realize_window(spec, symmetric_window(spec.d, t), seed);
    const auto& states = field.states();
    const double sum = chunked_sum(
        field.n_cells(),
        [&](std::int64_t i) {
          return observable(states[static_cast<std::size_t>(i)]);
        },
        1);
    out.push_back({t, sum / static_cast<double>(field.n_cells())});
  }
  return out;
}

}  // namespace homog
