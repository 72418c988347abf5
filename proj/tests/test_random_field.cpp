#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "homog/random_field.hpp"
#include "homog/util.hpp"

using namespace homog;

namespace {

FieldSpec two_state_checkerboard(int d, double a0 = 1.0, double a1 = 4.0) {
  FieldSpec spec;
  spec.kind = FieldKind::kCheckerboard;
  spec.d = d;
  spec.dist.states.resize(2);
  spec.dist.states[0].a = a0;
  spec.dist.states[1].a = a1;
  spec.dist.probs = {0.5, 0.5};
  return spec;
}

}  // namespace

TEST_CASE("cell values are pure functions of spec, index, and seed") {
  FieldSpec spec = two_state_checkerboard(2);
  CellIndex z{3, -7, 0};
  MaterialState s1 = sample_cell_value(spec, z, 42);
  MaterialState s2 = sample_cell_value(spec, z, 42);
  CHECK(s1.a == s2.a);
  bool differs = false;
  for (std::int64_t i = 0; i < 64 && !differs; ++i)
    differs = sample_cell_value(spec, CellIndex{i, 0, 0}, 42).a !=
              sample_cell_value(spec, CellIndex{i, 0, 0}, 43).a;
  CHECK(differs);
}

TEST_CASE("enlarging the window never changes existing cells") {
  FieldSpec spec = two_state_checkerboard(2);
  auto small = realize_window(spec, symmetric_window(2, 4), 7);
  auto big = realize_window(spec, symmetric_window(2, 16), 7);
  for (std::int64_t i = -4; i < 4; ++i)
    for (std::int64_t j = -4; j < 4; ++j) {
      CellIndex z{i, j, 0};
      CHECK(small.state_of_cell(z).a == big.state_of_cell(z).a);
    }
}

TEST_CASE("symmetric windows cover the box with the right cell count") {
  CellWindow w1 = symmetric_window(1, 8);
  CHECK(w1.lo[0] == -8);
  CHECK(w1.hi[0] == 8);
  CHECK(realize_window(two_state_checkerboard(1), w1, 1).n_cells() == 16);
  CellWindow w3 = symmetric_window(3, 2);
  CHECK(w3.d == 3);
  FieldSpec spec3 = two_state_checkerboard(3);
  CHECK(realize_window(spec3, w3, 1).n_cells() == 64);
}

TEST_CASE("constant fields ignore the seed") {
  FieldSpec spec;
  spec.kind = FieldKind::kConstant;
  spec.d = 2;
  spec.dist.states.resize(1);
  spec.dist.states[0].a = 2.5;
  spec.dist.probs = {1.0};
  for (std::uint64_t seed : {1ull, 99ull}) {
    auto real = realize_window(spec, symmetric_window(2, 3), seed);
    for (const MaterialState& s : real.states()) CHECK(s.a == 2.5);
  }
}

TEST_CASE("fair two-state draws pass a chi-square balance check") {
  FieldSpec spec = two_state_checkerboard(2);
  auto real = realize_window(spec, symmetric_window(2, 32), 11);
  std::int64_t n0 = 0;
  for (const MaterialState& s : real.states()) n0 += s.a == 1.0;
  const double n = static_cast<double>(real.n_cells());
  const double e = n / 2.0;
  double stat = (n0 - e) * (n0 - e) / e + ((n - n0) - e) * ((n - n0) - e) / e;
  CHECK(chi2_tail(stat, 1) > 0.01);
}

TEST_CASE("disjoint regions look identically distributed") {
  FieldSpec spec = two_state_checkerboard(1);
  double stat = 0.0;
  for (std::int64_t block = 0; block < 2; ++block) {
    std::int64_t n0 = 0;
    const std::int64_t cells = 4096;
    for (std::int64_t i = 0; i < cells; ++i) {
      CellIndex z{block * 100000 + i, 0, 0};
      n0 += sample_cell_value(spec, z, 5).a == 1.0;
    }
    const double e = cells / 2.0;
    stat += (n0 - e) * (n0 - e) / e +
            ((cells - n0) - e) * ((cells - n0) - e) / e;
  }
  CHECK(chi2_tail(stat, 2) > 0.01);
}

TEST_CASE("laminates vary only along the first axis") {
  FieldSpec spec = two_state_checkerboard(2);
  spec.kind = FieldKind::kLaminate;
  auto real = realize_window(spec, symmetric_window(2, 8), 3);
  for (std::int64_t i = -8; i < 8; ++i) {
    double a = real.state_of_cell(CellIndex{i, -8, 0}).a;
    for (std::int64_t j = -8; j < 8; ++j)
      CHECK(real.state_of_cell(CellIndex{i, j, 0}).a == a);
  }
  spec.kind = FieldKind::kCheckerboard;
  auto checker = realize_window(spec, symmetric_window(2, 8), 3);
  bool varies = false;
  for (std::int64_t j = -8; j < 8 && !varies; ++j)
    varies = checker.state_of_cell(CellIndex{0, j, 0}).a !=
             checker.state_of_cell(CellIndex{0, -8, 0}).a;
  CHECK(varies);
}

TEST_CASE("state_at floors coordinates onto cells") {
  FieldSpec spec = two_state_checkerboard(2);
  auto real = realize_window(spec, symmetric_window(2, 4), 9);
  CHECK(real.state_at(Pt{0.5, 0.5, 0.0}).a ==
        real.state_of_cell(CellIndex{0, 0, 0}).a);
  CHECK(real.state_at(Pt{-0.25, 1.75, 0.0}).a ==
        real.state_of_cell(CellIndex{-1, 1, 0}).a);
}

TEST_CASE("uniform distributions respect their ranges") {
  FieldSpec spec;
  spec.kind = FieldKind::kCheckerboard;
  spec.d = 1;
  spec.dist.uniform = true;
  spec.dist.lo.a = 1.0;
  spec.dist.hi.a = 3.0;
  spec.dist.lo.p = 2.0;
  spec.dist.hi.p = 2.5;
  validate_field(spec);
  auto real = realize_window(spec, symmetric_window(1, 512), 17);
  double mean_a = 0.0;
  for (const MaterialState& s : real.states()) {
    REQUIRE(s.a >= 1.0);
    REQUIRE(s.a <= 3.0);
    REQUIRE(s.p >= 2.0);
    REQUIRE(s.p <= 2.5);
    mean_a += s.a;
  }
  mean_a /= static_cast<double>(real.n_cells());
  CHECK(std::abs(mean_a - 2.0) < 4.0 * (2.0 / std::sqrt(12.0)) / 32.0);
}

TEST_CASE("ergodic averages converge at the central-limit rate") {
  FieldSpec spec = two_state_checkerboard(1);
  auto obs = [](const MaterialState& s) { return s.a; };
  const std::vector<std::int64_t> ts{4, 16, 64};
  const int n_seeds = 64;
  std::vector<double> var(ts.size(), 0.0);
  for (int k = 0; k < n_seeds; ++k) {
    auto pts = ergodic_average(spec, obs, ts, 1000 + static_cast<std::uint64_t>(k));
    REQUIRE(pts.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      CHECK(pts[i].t == ts[i]);
      double d = pts[i].average - 2.5;
      var[i] += d * d;
    }
  }
  std::vector<double> log_t, log_var;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    log_t.push_back(std::log(static_cast<double>(ts[i])));
    log_var.push_back(std::log(var[i] / n_seeds));
  }
  LineFit fit = fit_line(log_t, log_var);
  CHECK(std::abs(fit.slope + 1.0) < 0.3);
}

TEST_CASE("invalid field specs are rejected") {
  FieldSpec spec = two_state_checkerboard(1);
  spec.dist.probs = {0.7, 0.7};
  CHECK_THROWS_AS(validate_field(spec), ConfigError);
  spec.dist.probs = {0.5};
  CHECK_THROWS_AS(validate_field(spec), ConfigError);
  spec.dist.probs = {-0.5, 1.5};
  CHECK_THROWS_AS(validate_field(spec), ConfigError);
  spec = two_state_checkerboard(1);
  spec.d = 4;
  CHECK_THROWS_AS(validate_field(spec), ConfigError);
  FieldSpec uni;
  uni.dist.uniform = true;
  uni.dist.lo.a = 2.0;
  uni.dist.hi.a = 1.0;
  CHECK_THROWS_AS(validate_field(uni), ConfigError);
  FieldSpec empty;
  empty.dist.states.clear();
  CHECK_THROWS_AS(validate_field(empty), ConfigError);
}

TEST_CASE("field kind names round-trip") {
  for (FieldKind k :
       {FieldKind::kConstant, FieldKind::kCheckerboard, FieldKind::kLaminate})
    CHECK(field_kind_from_name(field_kind_name(k)) == k);
  CHECK_THROWS_AS(field_kind_from_name("perlin"), ConfigError);
}
