#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homog/la.hpp"

namespace homog {

// Per-point random parameters of an integrand: coefficient a >= 0,
// exponent p > 1 (random-power family), lower-order weight lambda >= 0.
struct MaterialState {
  double a = 1.0;
  double p = 2.0;
  double lam = 0.0;
};

enum class Family {
  kQuadratic,    // a|xi|^2/2
  kPower,        // a|xi|^p/p, fixed p
  kRandomPower,  // |xi|^{p(x)}/p(x)
  kDoublePhase,  // |xi|^p + a(x)|xi|^q
  kExpPhase,     // |xi|^p + a(x)(exp(|xi|^q)-1)
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// A convex integrand family W(state, xi) on m x d matrices. All shipped
// families are radial: W(s, xi) = profile(s, |xi|) with a convex,
// nondecreasing profile, which the conjugate search and the Huber smoothing
// both rely on.
struct IntegrandSpec {
  Family family = Family::kQuadratic;
  int m = 1;
  int d = 1;
  double p = 2.0;  // family exponent (power, double-phase, exp-phase)
  double q = 2.0;  // secondary exponent (double-phase, exp-phase)
};

void validate_spec(const IntegrandSpec& spec);
void validate_state(const IntegrandSpec& spec, const MaterialState& s);

// Scalar radial profile and its derivative; +inf on overflow (exp-phase).
double radial_profile(const IntegrandSpec& spec, const MaterialState& s,
                      double r);
double radial_profile_deriv(const IntegrandSpec& spec, const MaterialState& s,
                            double r);

// W(s, xi); huber_delta > 0 evaluates the smoothed profile at
// sqrt(|xi|^2 + delta^2) - delta (convexity preserving).
double eval(const IntegrandSpec& spec, const MaterialState& s, const Mat& xi,
            double huber_delta = 0.0);

// dW/dxi; zero matrix at xi = 0 for smooth families, NonsmoothError at kinks.
Mat grad_xi(const IntegrandSpec& spec, const MaterialState& s, const Mat& xi,
            double huber_delta = 0.0);

// sup_{|xi| <= radius} (<eta, xi> - W(s, xi)) via 1D concave maximization
// along the ray through eta; analytic form for pure powers. Throws
// RadiusError when the sup sits on the search boundary.
double conjugate(const IntegrandSpec& spec, const MaterialState& s,
                 const Mat& eta, double radius);

// Conjugate with automatic radius doubling until the sup is interior.
double conjugate_auto(const IntegrandSpec& spec, const MaterialState& s,
                      const Mat& eta);

// sup_{|eta| <= r} W*(s, eta); equals the conjugate at |eta| = r because the
// conjugate of a radial integrand is radial and nondecreasing.
double conjugate_sup_on_ball(const IntegrandSpec& spec, const MaterialState& s,
                             double r);

// Piecewise-linear radial function: sorted samples plus a linear tail.
class RadialFunction {
 public:
  RadialFunction(std::vector<std::pair<double, double>> samples,
                 double tail_slope);

  double eval(double r) const;
  double min_value() const;
  double r_last() const { return samples_.back().first; }
  double tail_slope() const { return tail_slope_; }
  const std::vector<std::pair<double, double>>& samples() const {
    return samples_;
  }

 private:
  std::vector<std::pair<double, double>> samples_;
  double tail_slope_;
};

// Convex envelope of xi -> ell(|xi|) in dimension k_dim, reduced to the
// radial formula: the minimum value up to the largest minimizer r_max, the
// lower convex hull of the sampled epigraph beyond. The formula is the same
// for every k_dim >= 1; the parameter documents the ambient dimension.
RadialFunction radial_convex_envelope(const RadialFunction& ell, int k_dim);

// Deterministic probe points for supporting planes: leading zero matrix,
// then low-discrepancy directions scaled by a cycle of dyadic radii.
// Prefix-nested: probe_points(m, d, k) is a prefix of probe_points(m, d, k+1).
std::vector<Mat> probe_points(int m, int d, int k);

// Supporting plane of xi -> W(s, xi) at xi0: value a + <b, xi>.
struct AffinePiece {
  double a;
  Mat b;
};
AffinePiece supporting_plane(const IntegrandSpec& spec, const MaterialState& s,
                             const Mat& xi0);

// Monotone truncation W_k = max(supporting planes, radial floor): convex,
// 0 <= W_k <= W_{k+1} <= W, and W_k <= C_k (1 + |xi|^q). Pieces and floors
// are stored per sampled state; evaluation addresses states by sample index.
class TruncatedIntegrand {
 public:
  TruncatedIntegrand(IntegrandSpec base, std::vector<MaterialState> states,
                     int k, double q);

  double eval(int state_index, const Mat& xi) const;
  const std::vector<AffinePiece>& affine_pieces(int state_index) const;
  const RadialFunction& radial_floor(int state_index) const;

  const IntegrandSpec& base() const { return base_; }
  int k() const { return k_; }
  double q() const { return q_; }
  double growth_constant() const { return c_k_; }

 private:
  IntegrandSpec base_;
  std::vector<MaterialState> states_;
  int k_;
  double q_;
  double c_k_;
  std::vector<std::vector<AffinePiece>> pieces_;
  std::vector<RadialFunction> floors_;
};

TruncatedIntegrand truncate_integrand(const IntegrandSpec& spec,
                                      const std::vector<MaterialState>& states,
                                      int k, double q);

// Smallest (C, Lambda) with num <= C*den + Lambda over scanned pairs:
// C is the largest ratio seen where den >= 1, Lambda covers the rest.
struct GrowthReport {
  double c = 1.0;
  double lambda = 0.0;
  double max_ratio = 0.0;
  long n_pairs = 0;
};

GrowthReport growth_fit(std::span<const std::array<double, 2>> pairs);

using EvalFn = std::function<double(const MaterialState&, const Mat&)>;

// Scan W(s, zeroed-rows(xi)) <= C W(s, xi) + Lambda over all 2^m row masks.
GrowthReport check_mild_monotonicity(const IntegrandSpec& spec,
                                     std::span<const MaterialState> states,
                                     std::span<const Mat> xis);
GrowthReport check_mild_monotonicity_fn(const EvalFn& fn, int m,
                                        std::span<const MaterialState> states,
                                        std::span<const Mat> xis);

// Scan W(s, xi) <= C W(s, -xi) + Lambda over sign flips.
GrowthReport check_almost_even(const IntegrandSpec& spec,
                               std::span<const MaterialState> states,
                               std::span<const Mat> xis);
GrowthReport check_almost_even_fn(const EvalFn& fn,
                                  std::span<const MaterialState> states,
                                  std::span<const Mat> xis);

// Even envelope C * max{0, co(min{W(xi), W(-xi)}) - W(0)} as a radial
// profile; for the shipped (even) families this is C * (W - W(0)).
RadialFunction even_envelope(const IntegrandSpec& spec, const MaterialState& s,
                             double c_factor, double r_hi, int n_samples);

// Luxemburg gauge inf{alpha > 0 : sum_e vol_e phi(s_e, g_e/alpha) <= 1},
// bisected to relative tolerance rel_tol.
double luxemburg_norm(const IntegrandSpec& phi,
                      std::span<const MaterialState> states,
                      std::span<const double> volumes, std::span<const Mat> g,
                      double rel_tol = 1e-8);

}  // namespace homog
