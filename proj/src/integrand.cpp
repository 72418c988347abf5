#include "homog/integrand.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "homog/util.hpp"

namespace homog {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpArgMax = 700.0;  // exp beyond this overflows double
constexpr std::array<std::uint32_t, 16> kPrimes = {
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::kQuadratic: return "quadratic";
    case Family::kPower: return "power";
    case Family::kRandomPower: return "random_power";
    case Family::kDoublePhase: return "double_phase";
    case Family::kExpPhase: return "exp_phase";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "quadratic") return Family::kQuadratic;
  if (name == "power") return Family::kPower;
  if (name == "random_power") return Family::kRandomPower;
  if (name == "double_phase") return Family::kDoublePhase;
  if (name == "exp_phase") return Family::kExpPhase;
  throw ConfigError("unknown integrand family: " + name);
}

void validate_spec(const IntegrandSpec& spec) {
  if (spec.m < 1 || spec.d < 1)
    throw ConfigError("integrand shape must be positive");
  if (spec.m * spec.d > Mat::kMaxEntries)
    throw ConfigError("integrand shape out of supported range");
  switch (spec.family) {
    case Family::kQuadratic:
    case Family::kRandomPower:
      break;
    case Family::kPower:
      if (!(spec.p > 1.0)) throw ParameterError("power family needs p > 1");
      break;
    case Family::kDoublePhase:
    case Family::kExpPhase:
      if (!(spec.p > 1.0)) throw ParameterError("family needs p > 1");
      // q >= 1 keeps r -> r^q (resp. exp(r^q)-1) convex, hence (A2).
      if (!(spec.q >= 1.0)) throw ParameterError("family needs q >= 1");
      break;
  }
}

void validate_state(const IntegrandSpec& spec, const MaterialState& s) {
  if (!(s.a >= 0.0)) throw ParameterError("state coefficient must be >= 0");
  if (!(s.lam >= 0.0)) throw ParameterError("state weight must be >= 0");
  if (spec.family == Family::kRandomPower && !(s.p > 1.0))
    throw ParameterError("random-power state needs exponent p > 1");
}

double radial_profile(const IntegrandSpec& spec, const MaterialState& s,
                      double r) {
  switch (spec.family) {
    case Family::kQuadratic:
      return 0.5 * s.a * r * r;
    case Family::kPower:
      return s.a * std::pow(r, spec.p) / spec.p;
    case Family::kRandomPower:
      return std::pow(r, s.p) / s.p;
    case Family::kDoublePhase:
      return std::pow(r, spec.p) + s.a * std::pow(r, spec.q);
    case Family::kExpPhase: {
      const double rq = std::pow(r, spec.q);
      if (rq > kExpArgMax) return kInf;
      return std::pow(r, spec.p) + s.a * std::expm1(rq);
    }
  }
  return 0.0;
}

double radial_profile_deriv(const IntegrandSpec& spec, const MaterialState& s,
                            double r) {
  switch (spec.family) {
    case Family::kQuadratic:
      return s.a * r;
    case Family::kPower:
      return s.a * std::pow(r, spec.p - 1.0);
    case Family::kRandomPower:
      return std::pow(r, s.p - 1.0);
    case Family::kDoublePhase:
      return spec.p * std::pow(r, spec.p - 1.0) +
             s.a * spec.q * std::pow(r, spec.q - 1.0);
    case Family::kExpPhase: {
      const double rq = std::pow(r, spec.q);
      if (rq > kExpArgMax) return kInf;
      return spec.p * std::pow(r, spec.p - 1.0) +
             s.a * std::exp(rq) * spec.q * std::pow(r, spec.q - 1.0);
    }
  }
  return 0.0;
}

double eval(const IntegrandSpec& spec, const MaterialState& s, const Mat& xi,
            double huber_delta) {
  validate_spec(spec);
  validate_state(spec, s);
  const double r = xi.norm();
  if (huber_delta > 0.0) {
    const double rs = std::sqrt(r * r + huber_delta * huber_delta);
    return radial_profile(spec, s, rs - huber_delta);
  }
  return radial_profile(spec, s, r);
}

Mat grad_xi(const IntegrandSpec& spec, const MaterialState& s, const Mat& xi,
            double huber_delta) {
  validate_spec(spec);
  validate_state(spec, s);
  const double r = xi.norm();
  if (huber_delta > 0.0) {
    const double rs = std::sqrt(r * r + huber_delta * huber_delta);
    const double factor = radial_profile_deriv(spec, s, rs - huber_delta) / rs;
    Mat g = xi;
    g *= factor;
    return g;
  }
  if (r == 0.0) {
    const bool kink =
        (spec.family == Family::kDoublePhase ||
         spec.family == Family::kExpPhase) &&
        spec.q == 1.0 && s.a > 0.0;
    if (kink)
      throw NonsmoothError("gradient at a kink: subgradient needed");
    return Mat(spec.m, spec.d);
  }
  const double factor = radial_profile_deriv(spec, s, r) / r;
  Mat g = xi;
  g *= factor;
  return g;
}

// --- conjugate ---------------------------------------------------------------

namespace {

// Interior maximizer radius of r|eta| - profile(r) when it is known in
// closed form; nullopt otherwise.
std::optional<double> analytic_argmax(const IntegrandSpec& spec,
                                      const MaterialState& s, double eta_norm) {
  switch (spec.family) {
    case Family::kQuadratic:
      if (s.a == 0.0) return std::nullopt;
      return eta_norm / s.a;
    case Family::kPower:
      if (s.a == 0.0) return std::nullopt;
      return std::pow(eta_norm / s.a, 1.0 / (spec.p - 1.0));
    case Family::kRandomPower:
      return std::pow(eta_norm, 1.0 / (s.p - 1.0));
    default:
      return std::nullopt;
  }
}

}  // namespace

double conjugate(const IntegrandSpec& spec, const MaterialState& s,
                 const Mat& eta, double radius) {
  validate_spec(spec);
  validate_state(spec, s);
  if (!(radius > 0.0)) throw ConfigError("conjugate search radius must be > 0");
  const double en = eta.norm();
  if (en == 0.0) return -radial_profile(spec, s, 0.0);

  if (auto rstar = analytic_argmax(spec, s, en)) {
    if (*rstar > radius)
      throw RadiusError("conjugate sup outside search radius");
    return en * *rstar - radial_profile(spec, s, *rstar);
  }
  // Degenerate profile (a = 0 pure power): identically zero, sup on boundary.
  if ((spec.family == Family::kQuadratic || spec.family == Family::kPower) &&
      s.a == 0.0)
    throw RadiusError("conjugate of a degenerate integrand is unbounded");

  const auto objective = [&](double r) {
    return en * r - radial_profile(spec, s, r);
  };
  const ScalarMax best = golden_max(objective, 0.0, radius);
  if (best.x > radius * (1.0 - 1e-6))
    throw RadiusError("conjugate sup attained at search boundary");
  return best.value;
}

double conjugate_auto(const IntegrandSpec& spec, const MaterialState& s,
                      const Mat& eta) {
  double radius = 4.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    try {
      return conjugate(spec, s, eta, radius);
    } catch (const RadiusError&) {
      radius *= 2.0;
    }
  }
  throw RadiusError("conjugate appears unbounded");
}

double conjugate_sup_on_ball(const IntegrandSpec& spec, const MaterialState& s,
                             double r) {
  if (r < 0.0) throw ConfigError("ball radius must be >= 0");
  Mat eta(spec.m, spec.d);
  eta(0, 0) = r;
  return conjugate_auto(spec, s, eta);
}

// --- radial functions and their convex envelope ------------------------------

RadialFunction::RadialFunction(std::vector<std::pair<double, double>> samples,
                               double tail_slope)
    : samples_(std::move(samples)), tail_slope_(tail_slope) {
  if (samples_.empty()) throw ConfigError("radial function needs samples");
  double prev = -kInf;
  for (const auto& [r, v] : samples_) {
    if (!(r >= 0.0) || !std::isfinite(r) || !std::isfinite(v))
      throw ConfigError("radial function samples must be finite, r >= 0");
    if (!(r > prev))
      throw ConfigError("radial function radii must be strictly increasing");
    prev = r;
  }
  if (!std::isfinite(tail_slope_))
    throw ConfigError("radial function tail slope must be finite");
}

double RadialFunction::eval(double r) const {
  if (r <= samples_.front().first) return samples_.front().second;
  const auto& back = samples_.back();
  if (r >= back.first) return back.second + tail_slope_ * (r - back.first);
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), r,
      [](double a, const std::pair<double, double>& s) { return a < s.first; });
  const auto& [r1, v1] = *it;
  const auto& [r0, v0] = *(it - 1);
  const double w = (r - r0) / (r1 - r0);
  return v0 + w * (v1 - v0);
}

double RadialFunction::min_value() const {
  double m = kInf;
  for (const auto& [r, v] : samples_) m = std::min(m, v);
  return m;
}

RadialFunction radial_convex_envelope(const RadialFunction& ell, int k_dim) {
  if (k_dim < 1) throw ConfigError("envelope dimension must be >= 1");
  if (!(ell.tail_slope() > 0.0))
    throw ConfigError("envelope input must be coercive (tail slope > 0)");

  const auto& pts = ell.samples();
  const double min_v = ell.min_value();
  // Largest minimizer of the sampled function.
  std::size_t i_max = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].second == min_v) i_max = i;

  // Lower convex hull of the epigraph vertices right of r_max.
  std::vector<std::pair<double, double>> hull;
  for (std::size_t i = i_max; i < pts.size(); ++i) {
    const auto& p = pts[i];
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      const double cross = (b.first - a.first) * (p.second - a.second) -
                           (p.first - a.first) * (b.second - a.second);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }

  // The tail ray has slope beta; the envelope follows the hull only until the
  // vertex minimizing v - beta*r and continues linearly with slope beta.
  const double beta = ell.tail_slope();
  std::size_t j_star = 0;
  double best = kInf;
  for (std::size_t j = 0; j < hull.size(); ++j) {
    const double inter = hull[j].second - beta * hull[j].first;
    if (inter <= best) {
      best = inter;
      j_star = j;
    }
  }
  std::vector<std::pair<double, double>> out(hull.begin(),
                                             hull.begin() + j_star + 1);
  const double r_end = pts.back().first;
  if (out.back().first < r_end)
    out.emplace_back(r_end,
                     out.back().second + beta * (r_end - out.back().first));
  return RadialFunction(std::move(out), beta);
}

// --- truncation ---------------------------------------------------------------

std::vector<Mat> probe_points(int m, int d, int k) {
  if (m < 1 || d < 1 || k < 1) throw ConfigError("bad probe request");
  const int n = m * d;
  if (n > Mat::kMaxEntries) throw ConfigError("probe shape out of range");
  // Dyadic radius cycle 1, 2, 1/2, 4, 1/4, 8, 1/8.
  constexpr std::array<double, 7> radii = {1.0, 2.0, 0.5, 4.0, 0.25, 8.0, 0.125};
  std::vector<Mat> probes;
  probes.reserve(static_cast<std::size_t>(k));
  probes.emplace_back(m, d);  // the origin, the global minimum of each family
  for (int i = 1; i < k; ++i) {
    Mat dir(m, d);
    double norm2 = 0.0;
    for (int c = 0; c < n; ++c) {
      const double u = 2.0 * vdcorput(static_cast<std::uint64_t>(i),
                                      kPrimes[static_cast<std::size_t>(c)]) -
                       1.0;
      dir[c] = u;
      norm2 += u * u;
    }
    if (norm2 < 1e-24) {
      for (int c = 0; c < n; ++c) dir[c] = 1.0;
      norm2 = static_cast<double>(n);
    }
    dir *= 1.0 / std::sqrt(norm2);
    dir *= radii[static_cast<std::size_t>((i - 1) % radii.size())];
    probes.push_back(dir);
  }
  return probes;
}

AffinePiece supporting_plane(const IntegrandSpec& spec, const MaterialState& s,
                             const Mat& xi0) {
  Mat b(spec.m, spec.d);
  try {
    b = grad_xi(spec, s, xi0);
  } catch (const NonsmoothError&) {
    if (xi0.norm() > 0.0) throw;
    // At the global minimum the zero matrix is a valid subgradient.
  }
  const double a = eval(spec, s, xi0) - dot(b, xi0);
  return {a, b};
}

namespace {

// Radial profile sampled up to a cap where the values stay reasonably sized.
RadialFunction sampled_profile(const IntegrandSpec& spec,
                               const MaterialState& s, double r_hi) {
  constexpr double kValueCap = 1e12;
  while (r_hi > 1.0 && !(radial_profile(spec, s, r_hi) <= kValueCap))
    r_hi *= 0.5;
  const int n = 256;
  std::vector<std::pair<double, double>> samples;
  samples.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double r = r_hi * static_cast<double>(i) / n;
    samples.emplace_back(r, radial_profile(spec, s, r));
  }
  const double slope =
      std::max(1e-12, radial_profile_deriv(spec, s, r_hi));
  return RadialFunction(std::move(samples), slope);
}

}  // namespace

TruncatedIntegrand::TruncatedIntegrand(IntegrandSpec base,
                                       std::vector<MaterialState> states,
                                       int k, double q)
    : base_(base), states_(std::move(states)), k_(k), q_(q), c_k_(1.0) {
  validate_spec(base_);
  if (k_ < 1) throw ParameterError("truncation needs k >= 1");
  const double q_max =
      base_.d > 1 ? static_cast<double>(base_.d) / (base_.d - 1) : kInf;
  if (!(q_ > 1.0 && q_ < q_max))
    throw ParameterError("truncation exponent q must lie in (1, d/(d-1))");
  if (states_.empty()) throw ParameterError("truncation needs sampled states");

  const auto probes = probe_points(base_.m, base_.d, k_);
  double max_piece = 0.0;
  for (const auto& s : states_) {
    validate_state(base_, s);
    std::vector<AffinePiece> pieces;
    pieces.reserve(probes.size());
    for (const auto& xi0 : probes) {
      try {
        AffinePiece piece = supporting_plane(base_, s, xi0);
        if (!std::isfinite(piece.a) || !std::isfinite(piece.b.norm())) continue;
        max_piece = std::max(max_piece,
                             std::abs(piece.a) + piece.b.norm());
        pieces.push_back(std::move(piece));
      } catch (const NonsmoothError&) {
        // Skip kinked probes; the prefix structure keeps W_k monotone in k.
      }
    }
    pieces_.push_back(std::move(pieces));

    // Radial floor co(min{profile, r^q/q}), kept a certified lower bound:
    // piecewise-linear interpolation of convex functions overshoots between
    // knots, so the samples are shifted down by the worst chordal gap
    // (<= interval * slope increment / 4 for convex integrands).
    double r_end = 24.0;
    constexpr double kValueCap = 1e12;
    while (r_end > 1.0 && !(radial_profile(base_, s, r_end) <= kValueCap))
      r_end *= 0.5;
    const int n = 256;
    std::vector<std::pair<double, double>> msamples;
    msamples.reserve(static_cast<std::size_t>(n) + 1);
    double gap = 0.0;
    double prev_prof = radial_profile_deriv(base_, s, 0.0);
    double prev_pow = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double r = r_end * static_cast<double>(i) / n;
      msamples.emplace_back(
          r, std::min(radial_profile(base_, s, r), std::pow(r, q_) / q_));
      if (i > 0) {
        const double prof = radial_profile_deriv(base_, s, r);
        const double pows = std::pow(r, q_ - 1.0);
        gap = std::max(gap, (r_end / n) * 0.25 *
                                std::max(prof - prev_prof, pows - prev_pow));
        prev_prof = prof;
        prev_pow = pows;
      }
    }
    for (auto& [r, v] : msamples) v -= gap;
    const double mtail = std::min(radial_profile_deriv(base_, s, r_end),
                                  std::pow(r_end, q_ - 1.0));
    floors_.push_back(radial_convex_envelope(
        RadialFunction(std::move(msamples), std::max(mtail, 1e-12)), base_.d));
  }

  // Certified growth constant: affine pieces obey a + <b, xi> <=
  // 2(|a| + |b|)(1 + |xi|^q); the piecewise-linear floor is checked at its
  // breakpoints (linear-vs-convex comparison peaks at interval endpoints)
  // and along its tail.
  c_k_ = std::max(1.0, 2.0 * max_piece);
  for (const auto& floor : floors_) {
    for (const auto& [r, v] : floor.samples())
      c_k_ = std::max(c_k_, v / (1.0 + std::pow(r, q_)));
    const double r_end = floor.r_last();
    if (r_end > 0.0)
      c_k_ = std::max(c_k_, floor.tail_slope() /
                                (q_ * std::pow(r_end, q_ - 1.0)));
  }
}

double TruncatedIntegrand::eval(int state_index, const Mat& xi) const {
  const auto& pieces = pieces_.at(static_cast<std::size_t>(state_index));
  const auto& floor = floors_.at(static_cast<std::size_t>(state_index));
  double v = floor.eval(xi.norm());
  for (const auto& piece : pieces)
    v = std::max(v, piece.a + dot(piece.b, xi));
  return v;
}

const std::vector<AffinePiece>& TruncatedIntegrand::affine_pieces(
    int state_index) const {
  return pieces_.at(static_cast<std::size_t>(state_index));
}

const RadialFunction& TruncatedIntegrand::radial_floor(int state_index) const {
  return floors_.at(static_cast<std::size_t>(state_index));
}

TruncatedIntegrand truncate_integrand(const IntegrandSpec& spec,
                                      const std::vector<MaterialState>& states,
                                      int k, double q) {
  return TruncatedIntegrand(spec, states, k, q);
}

// --- assumption scans ---------------------------------------------------------

GrowthReport growth_fit(std::span<const std::array<double, 2>> pairs) {
  GrowthReport rep;
  rep.n_pairs = static_cast<long>(pairs.size());
  double c = 1.0;
  for (const auto& [num, den] : pairs)
    if (den >= 1.0) c = std::max(c, num / den);
  double lambda = 0.0, max_ratio = 0.0;
  for (const auto& [num, den] : pairs) {
    lambda = std::max(lambda, num - c * den);
    if (den > 0.0) max_ratio = std::max(max_ratio, num / den);
  }
  rep.c = c;
  rep.lambda = lambda;
  rep.max_ratio = max_ratio;
  return rep;
}

GrowthReport check_mild_monotonicity_fn(const EvalFn& fn, int m,
                                        std::span<const MaterialState> states,
                                        std::span<const Mat> xis) {
  std::vector<std::array<double, 2>> pairs;
  const unsigned n_masks = 1u << m;
  for (const auto& s : states) {
    for (const auto& xi : xis) {
      const double den = fn(s, xi);
      for (unsigned mask = 0; mask < n_masks; ++mask) {
        Mat xit = xi;
        for (int i = 0; i < m; ++i)
          if (mask & (1u << i))
            for (int j = 0; j < xi.cols(); ++j) xit(i, j) = 0.0;
        pairs.push_back({fn(s, xit), den});
      }
    }
  }
  return growth_fit(pairs);
}

GrowthReport check_mild_monotonicity(const IntegrandSpec& spec,
                                     std::span<const MaterialState> states,
                                     std::span<const Mat> xis) {
  return check_mild_monotonicity_fn(
      [&spec](const MaterialState& s, const Mat& xi) {
        return eval(spec, s, xi);
      },
      spec.m, states, xis);
}

GrowthReport check_almost_even_fn(const EvalFn& fn,
                                  std::span<const MaterialState> states,
                                  std::span<const Mat> xis) {
  std::vector<std::array<double, 2>> pairs;
  for (const auto& s : states) {
    for (const auto& xi : xis) {
      Mat neg = xi;
      neg *= -1.0;
      pairs.push_back({fn(s, xi), fn(s, neg)});
    }
  }
  return growth_fit(pairs);
}

GrowthReport check_almost_even(const IntegrandSpec& spec,
                               std::span<const MaterialState> states,
                               std::span<const Mat> xis) {
  return check_almost_even_fn(
      [&spec](const MaterialState& s, const Mat& xi) {
        return eval(spec, s, xi);
      },
      states, xis);
}

RadialFunction even_envelope(const IntegrandSpec& spec, const MaterialState& s,
                             double c_factor, double r_hi, int n_samples) {
  validate_spec(spec);
  validate_state(spec, s);
  if (!(c_factor > 0.0) || !(r_hi > 0.0) || n_samples < 2)
    throw ConfigError("even_envelope: bad parameters");
  const double w0 = radial_profile(spec, s, 0.0);
  Mat xi(spec.m, spec.d), neg(spec.m, spec.d);
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<std::size_t>(n_samples) + 1);
  for (int i = 0; i <= n_samples; ++i) {
    const double r = r_hi * static_cast<double>(i) / n_samples;
    xi(0, 0) = r;
    neg(0, 0) = -r;
    samples.emplace_back(r, std::min(eval(spec, s, xi), eval(spec, s, neg)));
  }
  const double slope = std::max(1e-12, radial_profile_deriv(spec, s, r_hi));
  const RadialFunction env = radial_convex_envelope(
      RadialFunction(std::move(samples), slope), spec.m * spec.d);
  std::vector<std::pair<double, double>> out;
  out.reserve(env.samples().size());
  for (const auto& [r, v] : env.samples())
    out.emplace_back(r, c_factor * std::max(0.0, v - w0));
  return RadialFunction(std::move(out), c_factor * env.tail_slope());
}

// --- Luxemburg gauge ----------------------------------------------------------

double luxemburg_norm(const IntegrandSpec& phi,
                      std::span<const MaterialState> states,
                      std::span<const double> volumes, std::span<const Mat> g,
                      double rel_tol) {
  validate_spec(phi);
  const std::size_t n = g.size();
  if (states.size() != n || volumes.size() != n)
    throw ConfigError("luxemburg_norm: mismatched cell data");
  double gmax = 0.0;
  for (const auto& ge : g) gmax = std::max(gmax, ge.norm());
  if (gmax == 0.0) return 0.0;

  const auto modular = [&](double alpha) {
    std::vector<double> terms(n);
    for (std::size_t e = 0; e < n; ++e) {
      Mat scaled = g[e];
      scaled *= 1.0 / alpha;
      terms[e] = volumes[e] * eval(phi, states[e], scaled);
    }
    return pairwise_sum(terms);
  };

  double hi = std::max(gmax, 1e-30);
  for (int it = 0; it < 200 && !(modular(hi) <= 1.0); ++it) hi *= 2.0;
  if (!(modular(hi) <= 1.0))
    throw NumericalError("luxemburg_norm: no admissible scale found");
  double lo = hi;
  while (lo > gmax * 1e-18 && modular(0.5 * lo) <= 1.0) lo *= 0.5;
  if (modular(0.5 * lo) <= 1.0) return 0.0;  // degenerate phi, every alpha works
  lo *= 0.5;
  // Invariant: modular(lo) > 1 >= modular(hi).
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (modular(mid) <= 1.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace homog
