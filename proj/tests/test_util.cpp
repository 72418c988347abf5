#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "homog/util.hpp"

using namespace homog;

TEST_CASE("splitmix64 is a stable pure function") {
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(1) != splitmix64(2));
  CHECK(splitmix64(0x9e3779b97f4a7c15ull) == splitmix64(0x9e3779b97f4a7c15ull));
  std::vector<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.push_back(splitmix64(i));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("hash_combine is order dependent and fnv1a separates keys") {
  CHECK(hash_combine(1, 2) != hash_combine(2, 1));
  CHECK(hash_combine(hash_combine(0, 1), 2) != hash_combine(hash_combine(0, 2), 1));
  CHECK(fnv1a("whom/seed/0") != fnv1a("whom/seed/1"));
  CHECK(fnv1a("") == fnv1a(""));
}

TEST_CASE("uniform01 stays in the half-open unit interval with mean one half") {
  double mean = 0.0;
  for (std::uint64_t i = 0; i < 4096; ++i) {
    double u = uniform01(splitmix64(i));
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
  }
  mean /= 4096.0;
  CHECK(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("pairwise_sum matches a compensated reference") {
  std::vector<double> xs;
  for (int i = 1; i <= 200000; ++i)
    xs.push_back((i % 2 ? 1.0 : -1.0) / static_cast<double>(i));
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  CHECK(pairwise_sum(xs) == doctest::Approx(s).epsilon(1e-13));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("chunked_sum is independent of the thread count") {
  auto term = [](std::int64_t i) {
    return std::sin(0.001 * static_cast<double>(i)) / (1.0 + static_cast<double>(i));
  };
  double s1 = chunked_sum(100000, term, 1);
  CHECK(s1 == chunked_sum(100000, term, 3));
  CHECK(s1 == chunked_sum(100000, term, 8));
}

TEST_CASE("parallel_for and parallel_jobs visit every index exactly once") {
  const std::int64_t n = 10000;
  std::vector<std::atomic<int>> hits(n);
  parallel_for(n, 4, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)]++; });
  for (auto& h : hits) REQUIRE(h.load() == 1);

  std::vector<std::atomic<int>> jhits(37);
  parallel_jobs(37, 5, [&](std::int64_t i) { jhits[static_cast<std::size_t>(i)]++; });
  for (auto& h : jhits) REQUIRE(h.load() == 1);
}

TEST_CASE("vdcorput base 2 fills a dyadic block exactly") {
  std::vector<double> xs;
  for (std::uint64_t i = 0; i < 256; ++i) xs.push_back(vdcorput(i, 2));
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < 256; ++i)
    CHECK(xs[static_cast<std::size_t>(i)] == doctest::Approx(i / 256.0).epsilon(1e-15));
}

TEST_CASE("golden_max locates an interior maximum") {
  auto f = [](double x) { return 1.0 - (x - 1.3) * (x - 1.3); };
  ScalarMax m = golden_max(f, 0.0, 3.0);
  CHECK(std::abs(m.x - 1.3) < 1e-6);
  CHECK(m.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fit_line recovers exact affine data, weighted or not") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.5, 7.0};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 + 3.0 * v);
  LineFit fit = fit_line(x, y);
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residual_rms < 1e-10);

  std::vector<double> w{1.0, 10.0, 0.5, 2.0, 4.0};
  LineFit wfit = fit_line(x, y, w);
  CHECK(wfit.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(wfit.slope == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("weighted fit_line follows the heavy points") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{0.0, 1.0, 102.0, 103.0};
  std::vector<double> w{1e6, 1e6, 1e-6, 1e-6};
  LineFit fit = fit_line(x, y, w);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(fit.intercept) < 1e-2);
}

TEST_CASE("gamma_p matches closed forms") {
  CHECK(gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-10));
  CHECK(gamma_p(0.5, 1.0) == doctest::Approx(std::erf(1.0)).epsilon(1e-8));
  CHECK(gamma_p(2.5, 0.0) == doctest::Approx(0.0));
  CHECK(gamma_p(2.5, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chi2_tail matches the two-dof exponential law") {
  CHECK(chi2_tail(2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(chi2_tail(0.0, 5) == doctest::Approx(1.0));
  CHECK(chi2_tail(100.0, 3) < 1e-10);
  CHECK(chi2_tail(1.0, 1) == doctest::Approx(2.0 * (1.0 - 0.841344746068543)).epsilon(1e-6));
}
