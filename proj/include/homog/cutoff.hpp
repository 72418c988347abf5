#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "homog/mesh.hpp"

namespace homog {

// Shell-binned p-integrals of a family of fields over the annulus
// B_R \ B_{(1-delta)R}: elements are binned by barycenter radius into
// uniform shells of roughly element width.
struct AnnulusData {
  double r_outer = 1.0;
  double delta = 0.25;
  Pt center{0, 0, 0};
  int d = 1;
  double p = 2.0;
  int n_shells = 0;
  double shell_width = 0.0;
  std::vector<std::vector<double>> grad_p;   // [field][shell]
  std::vector<std::vector<double>> value_p;  // [field][shell]
  std::vector<double> grad_total;            // per field
  std::vector<double> value_total;

  double shell_lo(int k) const {
    return (1.0 - delta) * r_outer + k * shell_width;
  }
};

AnnulusData collect_annulus(const Mesh& mesh,
                            const std::vector<const DiscreteField*>& fields,
                            const Pt& center, double r_outer, double delta,
                            double p, int n_shells = 0);

// Shells whose sphere-averaged gradient and value densities stay below
// 4N / (delta (1-delta)^{d-1} R^d) times the respective annulus totals,
// simultaneously for all N fields. Pigeonhole gives measure >= delta R / 2
// exactly in shell arithmetic; its failure is an invariant violation.
struct GoodRadii {
  std::vector<std::uint8_t> selected;
  double measure = 0.0;
  double delta_r = 0.0;  // delta * R, the annulus width
};

GoodRadii good_radii(const AnnulusData& data, double p);

// Radial profile: 1 inside B_{(1-delta)R}, sloping down only across the
// selected shells, 0 at R. The slope magnitude is 1/measure on the selected
// set and 0 off it, so the Lipschitz constant is at most 2/(delta R).
struct RadialCutoff {
  double r_outer = 1.0;
  double delta = 0.25;
  double u_measure = 0.0;
  std::vector<std::array<double, 2>> intervals;  // merged selected shells

  double eval(double r) const;
  double slope_mag_at(double r) const;
  double lipschitz() const { return u_measure > 0.0 ? 1.0 / u_measure : 0.0; }
};

RadialCutoff build_cutoff(const GoodRadii& good, const AnnulusData& data);

// Smallest empirical constant c such that on every binned element
//   |slope(r_e)| |u_i(bary)| <= (rho/delta) G_i^{1/p} + c/(delta R) V_i^{1/p}
// where G_i, V_i are the annulus-averaged p-integrals (normalized by
// delta R^d).
struct ProductBoundReport {
  double rho = 0.0;
  double c_rho_n = 0.0;
  double max_lhs = 0.0;
  int n_fields = 0;
};

ProductBoundReport verify_product_bound(
    const RadialCutoff& cutoff, const Mesh& mesh,
    const std::vector<const DiscreteField*>& fields, const AnnulusData& data,
    double rho);

}  // namespace homog
