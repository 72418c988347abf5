#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace homog {

// Errors are grouped by how the CLI maps them to exit codes:
// invariant violations (1), configuration problems (2), numerical failures (3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
// Invalid family/state parameters (p <= 1, negative coefficient, ...).
struct ParameterError : ConfigError {
  using ConfigError::ConfigError;
};
// Quadrature point left the realized field window.
struct WindowError : ConfigError {
  using ConfigError::ConfigError;
};
// Conjugate search hit the boundary of its search radius.
struct RadiusError : NumericalError {
  using NumericalError::NumericalError;
};
// Gradient requested at a kink; a subgradient would be needed.
struct NonsmoothError : NumericalError {
  using NumericalError::NumericalError;
};

// Dense m x d matrix with small inline storage, row-major.
// Targets are desk scale: m*d <= 16 is enforced at construction.
class Mat {
 public:
  static constexpr int kMaxEntries = 16;

  Mat() : m_(0), d_(0) { v_.fill(0.0); }
  Mat(int m, int d) : m_(m), d_(d) {
    if (m < 1 || d < 1 || m * d > kMaxEntries)
      throw ConfigError("matrix shape out of supported range");
    v_.fill(0.0);
  }

  int rows() const { return m_; }
  int cols() const { return d_; }
  int size() const { return m_ * d_; }

  double& operator()(int i, int j) { return v_[i * d_ + j]; }
  double operator()(int i, int j) const { return v_[i * d_ + j]; }
  double& operator[](int k) { return v_[k]; }
  double operator[](int k) const { return v_[k]; }

  Mat& operator+=(const Mat& o) {
    for (int k = 0; k < size(); ++k) v_[k] += o.v_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (int k = 0; k < size(); ++k) v_[k] -= o.v_[k];
    return *this;
  }
  Mat& operator*=(double c) {
    for (int k = 0; k < size(); ++k) v_[k] *= c;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double c, Mat a) { return a *= c; }

  friend double dot(const Mat& a, const Mat& b) {
    double s = 0.0;
    for (int k = 0; k < a.size(); ++k) s += a.v_[k] * b.v_[k];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this, *this)); }

  bool same_shape(const Mat& o) const { return m_ == o.m_ && d_ == o.d_; }

 private:
  int m_, d_;
  std::array<double, kMaxEntries> v_;
};

// Small m-vector (nodal value of a vector field).
class Vec {
 public:
  static constexpr int kMaxEntries = 8;

  Vec() : n_(0) { v_.fill(0.0); }
  explicit Vec(int n) : n_(n) {
    if (n < 1 || n > kMaxEntries)
      throw ConfigError("vector length out of supported range");
    v_.fill(0.0);
  }

  int size() const { return n_; }
  double& operator[](int k) { return v_[k]; }
  double operator[](int k) const { return v_[k]; }

  Vec& operator+=(const Vec& o) {
    for (int k = 0; k < n_; ++k) v_[k] += o.v_[k];
    return *this;
  }
  Vec& operator*=(double c) {
    for (int k = 0; k < n_; ++k) v_[k] *= c;
    return *this;
  }
  friend double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int k = 0; k < a.n_; ++k) s += a.v_[k] * b.v_[k];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this, *this)); }

 private:
  int n_;
  std::array<double, kMaxEntries> v_;
};

// Spatial point, d <= 3.
using Pt = std::array<double, 3>;

}  // namespace homog
