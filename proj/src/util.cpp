#include "homog/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "homog/la.hpp"

namespace homog {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

namespace {
constexpr std::int64_t kChunk = 2048;
}

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& body) {
  if (n <= 0) return;
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * kChunk) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  const std::int64_t per = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * per, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&body, &errors, t, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void parallel_jobs(std::int64_t n, int threads,
                   const std::function<void(std::int64_t)>& body) {
  if (n <= 0) return;
  threads = static_cast<int>(std::min<std::int64_t>(std::max(1, threads), n));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&body, &errors, w, n, threads] {
      try {
        for (std::int64_t i = w; i < n; i += threads) body(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double chunked_sum(std::int64_t n,
                   const std::function<double(std::int64_t)>& fn, int threads) {
  if (n <= 0) return 0.0;
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
  parallel_for(nchunks, threads, [&](std::int64_t c) {
    const std::int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
    std::vector<double> vals(static_cast<std::size_t>(hi - lo));
    for (std::int64_t i = lo; i < hi; ++i)
      vals[static_cast<std::size_t>(i - lo)] = fn(i);
    partial[static_cast<std::size_t>(c)] = pairwise_sum(vals);
  });
  return pairwise_sum(partial);
}

double vdcorput(std::uint64_t i, std::uint32_t base) {
  double x = 0.0, f = 1.0 / base;
  while (i > 0) {
    x += f * static_cast<double>(i % base);
    i /= base;
    f /= base;
  }
  return x;
}

ScalarMax golden_max(const std::function<double(double)>& f, double lo,
                     double hi, int iters) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters && b - a > 0.0; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  ScalarMax best{xm, fm};
  if (f1 > best.value) best = {x1, f1};
  if (f2 > best.value) best = {x2, f2};
  return best;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n)
    throw ConfigError("fit_line: empty or mismatched data");
  if (n == 1) return {y[0], 0.0, 0.0};
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
    sxx += wi * x[i] * x[i];
    sxy += wi * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw NumericalError("fit_line: singular fit");
  const double slope = (sw * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / sw;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - intercept - slope * x[i];
    rss += r * r;
  }
  return {intercept, slope, std::sqrt(rss / static_cast<double>(n))};
}

namespace {

double gamma_p_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  // Lentz's algorithm for the continued fraction of Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int k = 1; k < 500; ++k) {
    const double an = -k * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigError("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_tail(double stat, int dof) {
  if (dof <= 0) throw ConfigError("chi2_tail: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

}  // namespace homog
