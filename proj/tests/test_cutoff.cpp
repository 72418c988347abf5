#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "homog/cutoff.hpp"
#include "homog/util.hpp"

using namespace homog;

namespace {

double rnd01(std::uint64_t& ctr) { return uniform01(splitmix64(++ctr)); }

Box centered_box(int d, double half) {
  Box b;
  b.d = d;
  for (int k = 0; k < d; ++k) {
    b.lo[static_cast<std::size_t>(k)] = -half;
    b.hi[static_cast<std::size_t>(k)] = half;
  }
  return b;
}

// Hand-built shell data: one field, uniform mass per shell, fine enough
// shells that a single shell's own threshold coefficient sits below one.
AnnulusData uniform_shells(int n_shells, double r_outer, double delta,
                           double p) {
  AnnulusData data;
  data.r_outer = r_outer;
  data.delta = delta;
  data.d = 2;
  data.p = p;
  data.n_shells = n_shells;
  data.shell_width = delta * r_outer / n_shells;
  data.grad_p.assign(1, std::vector<double>(static_cast<std::size_t>(n_shells),
                                            1.0 / n_shells));
  data.value_p = data.grad_p;
  data.grad_total = {1.0};
  data.value_total = {1.0};
  return data;
}

}  // namespace

TEST_CASE("zero fields keep the whole annulus") {
  Mesh mesh(centered_box(2, 1.1), 16);
  DiscreteField u(mesh, 1);
  AnnulusData data = collect_annulus(mesh, {&u}, Pt{0, 0, 0}, 1.0, 0.5, 2.0);
  CHECK(data.n_shells >= 2);
  for (int k = 0; k < data.n_shells; ++k) {
    CHECK(data.grad_p[0][static_cast<std::size_t>(k)] == 0.0);
    CHECK(data.value_p[0][static_cast<std::size_t>(k)] == 0.0);
  }
  GoodRadii good = good_radii(data, 2.0);
  CHECK(good.measure == doctest::Approx(data.n_shells * data.shell_width));
  CHECK(good.delta_r == doctest::Approx(0.5));
  for (auto s : good.selected) CHECK(s == 1);
}

TEST_CASE("constant fields have zero shell gradients and consistent totals") {
  Mesh mesh(centered_box(2, 1.1), 16);
  DiscreteField u(mesh, 1);
  for (std::int64_t n = 0; n < mesh.n_nodes(); ++n) u.at(n, 0) = 3.0;
  AnnulusData data = collect_annulus(mesh, {&u}, Pt{0, 0, 0}, 1.0, 0.25, 1.5);
  double vsum = 0.0;
  for (int k = 0; k < data.n_shells; ++k) {
    CHECK(data.grad_p[0][static_cast<std::size_t>(k)] == 0.0);
    vsum += data.value_p[0][static_cast<std::size_t>(k)];
  }
  CHECK(vsum == doctest::Approx(data.value_total[0]).epsilon(1e-13));
  double binned_vol = data.value_total[0] / std::pow(3.0, 1.5);
  double exact = 3.14159265358979 * (1.0 - 0.75 * 0.75);
  CHECK(binned_vol == doctest::Approx(exact).epsilon(0.3));
}

TEST_CASE("mass concentrated in one shell excludes it and only it") {
  AnnulusData data = uniform_shells(64, 1.0, 0.5, 2.0);
  const int spike = 20;
  // move 90% of the value mass into one shell
  for (int k = 0; k < 64; ++k)
    data.value_p[0][static_cast<std::size_t>(k)] = k == spike ? 0.9 : 0.1 / 63.0;
  GoodRadii good = good_radii(data, 2.0);
  for (int k = 0; k < 64; ++k)
    CHECK(good.selected[static_cast<std::size_t>(k)] == (k == spike ? 0 : 1));
  CHECK(good.measure == doctest::Approx(63.0 / 64.0 * good.delta_r));
  CHECK(good.measure >= 0.5 * good.delta_r);
}

TEST_CASE("uniform shells are all good") {
  GoodRadii good = good_radii(uniform_shells(64, 1.0, 0.5, 2.0), 2.0);
  for (auto s : good.selected) CHECK(s == 1);
  CHECK(good.measure == doctest::Approx(good.delta_r));
}

TEST_CASE("enlarging a shell integral never enlarges the good set") {
  AnnulusData data = uniform_shells(64, 1.0, 0.5, 2.0);
  GoodRadii base = good_radii(data, 2.0);
  for (auto s : base.selected) REQUIRE(s == 1);

  for (int k = 0; k < 64; k += 7) {
    AnnulusData bumped = data;
    const double extra = 4.0 * bumped.value_total[0];
    bumped.value_p[0][static_cast<std::size_t>(k)] += extra;
    bumped.value_total[0] += extra;
    GoodRadii pert = good_radii(bumped, 2.0);
    for (int j = 0; j < 64; ++j)
      CHECK(pert.selected[static_cast<std::size_t>(j)] <=
            base.selected[static_cast<std::size_t>(j)]);
    CHECK(pert.selected[static_cast<std::size_t>(k)] == 0);
    CHECK(pert.measure <= base.measure);
    CHECK(pert.measure >= 0.5 * pert.delta_r - 1e-12);
  }
}

TEST_CASE("cutoff profiles plateau, ramp over the good set, and vanish at R") {
  Mesh mesh(centered_box(2, 1.1), 24);
  std::uint64_t ctr = 11;
  DiscreteField u(mesh, 1);
  for (std::int64_t n = 0; n < mesh.n_nodes(); ++n)
    u.at(n, 0) = 2.0 * rnd01(ctr) - 1.0;
  const double R = 1.0, delta = 0.5;
  AnnulusData data = collect_annulus(mesh, {&u}, Pt{0, 0, 0}, R, delta, 2.0);
  GoodRadii good = good_radii(data, 2.0);
  RadialCutoff cut = build_cutoff(good, data);

  CHECK(cut.u_measure == doctest::Approx(good.measure));
  CHECK(cut.eval(0.0) == 1.0);
  CHECK(cut.eval((1.0 - delta) * R) == 1.0);
  CHECK(cut.eval(R) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cut.eval(R + 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cut.lipschitz() <= 2.0 / (delta * R) + 1e-12);

  double prev = 1.0;
  for (double r = (1.0 - delta) * R; r <= R + 1e-9; r += delta * R / 512.0) {
    double v = cut.eval(r);
    CHECK(v >= -1e-12);
    CHECK(v <= prev + 1e-12);
    bool in_good = false;
    for (const auto& iv : cut.intervals) in_good |= r >= iv[0] && r < iv[1];
    if (in_good)
      CHECK(cut.slope_mag_at(r) == doctest::Approx(1.0 / cut.u_measure));
    else
      CHECK(cut.slope_mag_at(r) == 0.0);
    prev = v;
  }
}

TEST_CASE("full good sets make a linear ramp and gappy sets a steeper one") {
  AnnulusData data = uniform_shells(64, 1.0, 0.5, 2.0);
  GoodRadii good = good_radii(data, 2.0);
  RadialCutoff cut = build_cutoff(good, data);
  for (double r : {0.55, 0.7, 0.85})
    CHECK(cut.eval(r) == doctest::Approx(1.0 - (r - 0.5) / 0.5).epsilon(1e-10));
  CHECK(cut.lipschitz() == doctest::Approx(1.0 / 0.5));

  // two excluded shells leave a flat stretch in the middle of the ramp
  AnnulusData gap = uniform_shells(64, 1.0, 0.5, 2.0);
  for (int k = 0; k < 64; ++k)
    gap.value_p[0][static_cast<std::size_t>(k)] =
        (k == 10 || k == 11) ? 0.45 : 0.1 / 62.0;
  GoodRadii ggood = good_radii(gap, 2.0);
  CHECK(ggood.selected[10] == 0);
  CHECK(ggood.selected[11] == 0);
  CHECK(ggood.measure == doctest::Approx(62.0 * gap.shell_width));
  RadialCutoff gcut = build_cutoff(ggood, gap);
  CHECK(gcut.eval(gap.shell_lo(10)) ==
        doctest::Approx(gcut.eval(gap.shell_lo(12))).epsilon(1e-12));
  CHECK(gcut.eval(gap.shell_lo(10)) > 0.5);
  CHECK(gcut.eval(1.0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(gcut.lipschitz() == doctest::Approx(1.0 / ggood.measure));
  CHECK(gcut.lipschitz() <= 2.0 / 0.5 + 1e-12);
}

TEST_CASE("product bounds report finite constants on random fields") {
  std::uint64_t ctr = 21;
  Mesh mesh(centered_box(2, 1.1), 16);
  std::vector<DiscreteField> fields;
  for (int i = 0; i < 3; ++i) {
    DiscreteField u(mesh, 1);
    for (std::int64_t n = 0; n < mesh.n_nodes(); ++n)
      u.at(n, 0) = 2.0 * rnd01(ctr) - 1.0;
    fields.push_back(u);
  }
  std::vector<const DiscreteField*> ptrs;
  for (const auto& f : fields) ptrs.push_back(&f);
  AnnulusData data = collect_annulus(mesh, ptrs, Pt{0, 0, 0}, 1.0, 0.25, 1.5);
  GoodRadii good = good_radii(data, 1.5);
  RadialCutoff cut = build_cutoff(good, data);
  ProductBoundReport rep = verify_product_bound(cut, mesh, ptrs, data, 0.5);
  CHECK(rep.n_fields == 3);
  CHECK(rep.rho == doctest::Approx(0.5));
  CHECK(std::isfinite(rep.c_rho_n));
  CHECK(rep.c_rho_n >= 0.0);
  CHECK(std::isfinite(rep.max_lhs));

  DiscreteField zero(mesh, 1);
  std::vector<const DiscreteField*> zptr{&zero};
  AnnulusData zdata = collect_annulus(mesh, zptr, Pt{0, 0, 0}, 1.0, 0.25, 1.5);
  GoodRadii zgood = good_radii(zdata, 1.5);
  RadialCutoff zcut = build_cutoff(zgood, zdata);
  ProductBoundReport zrep = verify_product_bound(zcut, mesh, zptr, zdata, 0.5);
  CHECK(zrep.max_lhs == 0.0);
}

TEST_CASE("mismatched exponents are rejected") {
  Mesh mesh(centered_box(2, 1.1), 8);
  DiscreteField u(mesh, 1);
  AnnulusData data = collect_annulus(mesh, {&u}, Pt{0, 0, 0}, 1.0, 0.25, 2.0);
  CHECK_THROWS_AS(good_radii(data, 3.0), ParameterError);
}
