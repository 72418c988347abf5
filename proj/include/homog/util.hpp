#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace homog {

// --- counter-based hashing ------------------------------------------------

// SplitMix64 finalizer; the workhorse behind all seeded lookups.
std::uint64_t splitmix64(std::uint64_t x);

// Order-dependent combination of a running hash with one more word.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

// FNV-1a over a byte string (config hashing, job keys).
std::uint64_t fnv1a(std::string_view s);

// Uniform double in [0,1) from 64 bits.
double uniform01(std::uint64_t bits);

// --- deterministic reductions ----------------------------------------------

// Pairwise (tree) summation; the result depends only on element order.
double pairwise_sum(std::span<const double> xs);

// Sum of fn(0..n-1) accumulated in fixed-size chunks whose partial sums are
// combined pairwise in chunk order, so the value is independent of how many
// threads computed the chunks.
double chunked_sum(std::int64_t n, const std::function<double(std::int64_t)>& fn,
                   int threads = 1);

// Run body(i) for i in [0,n) split over the given number of threads.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& body);

// As parallel_for but for coarse jobs: always spawns up to `threads` workers
// taking indices round-robin, however small n is.
void parallel_jobs(std::int64_t n, int threads,
                   const std::function<void(std::int64_t)>& body);

// --- small numerics ---------------------------------------------------------

// i-th element of the van der Corput sequence in the given prime base.
double vdcorput(std::uint64_t i, std::uint32_t base);

// Maximize a concave function on [lo, hi] by golden-section search.
struct ScalarMax {
  double x;
  double value;
};
ScalarMax golden_max(const std::function<double(double)>& f, double lo,
                     double hi, int iters = 160);

// Least squares fit y ~ intercept + slope*x with optional weights.
struct LineFit {
  double intercept;
  double slope;
  double residual_rms;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w = {});

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Upper tail probability of a chi-square statistic with dof degrees.
double chi2_tail(double stat, int dof);

}  // namespace homog
