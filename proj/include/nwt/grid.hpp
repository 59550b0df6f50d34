#pragma once

// Discretization carrier: a periodic uniform position grid and its
// discrete-Fourier conjugate momentum lattice (hbar = 1 throughout).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "errors.hpp"

namespace nwt {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Uniform 1-D lattice: value(i) = first + i * step.
struct Lattice1D {
  double first = 0.0;
  double step = 1.0;
  std::size_t count = 0;

  static Lattice1D centered(double center, double step, std::size_t count) {
    return {center - 0.5 * step * static_cast<double>(count - 1), step, count};
  }
  /// Lattice of `count` points spanning [lo, hi] inclusive.
  static Lattice1D span(double lo, double hi, std::size_t count) {
    if (count < 2) return {lo, hi - lo, count};
    return {lo, (hi - lo) / static_cast<double>(count - 1), count};
  }

  double operator[](std::size_t i) const { return first + step * static_cast<double>(i); }
  double last() const { return (*this)[count - 1]; }
  double center() const { return first + 0.5 * step * static_cast<double>(count - 1); }
  std::vector<double> values() const {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = (*this)[i];
    return v;
  }
  bool operator==(const Lattice1D&) const = default;
};

/// Periodic position grid x_j = (j - n/2) h with h = extent / n; momentum
/// lattice p_k = 2 pi (k - n/2) / extent.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::size_t n_points, double x_extent) : n_(n_points), extent_(x_extent) {
    if (n_points < 2 || n_points % 2 != 0)
      throw ValidationError("grid: n_points must be even and >= 2");
    if (!(x_extent > 0.0) || !std::isfinite(x_extent))
      throw ValidationError("grid: x_extent must be positive");
  }

  std::size_t size() const { return n_; }
  double extent() const { return extent_; }
  double dx() const { return extent_ / static_cast<double>(n_); }
  double dp() const { return 2.0 * pi / extent_; }
  /// Largest representable momentum magnitude (Nyquist).
  double p_max() const { return pi / dx(); }

  double x(std::size_t j) const { return (static_cast<double>(j) - 0.5 * static_cast<double>(n_)) * dx(); }
  double p(std::size_t k) const { return (static_cast<double>(k) - 0.5 * static_cast<double>(n_)) * dp(); }

  Lattice1D x_lattice() const { return {x(0), dx(), n_}; }
  Lattice1D p_lattice() const { return {p(0), dp(), n_}; }

  RVector x_values() const {
    RVector v(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) v[static_cast<Eigen::Index>(j)] = x(j);
    return v;
  }
  RVector p_values() const {
    RVector v(static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < n_; ++k) v[static_cast<Eigen::Index>(k)] = p(k);
    return v;
  }

  bool operator==(const GridSpec&) const = default;

 private:
  std::size_t n_ = 2;
  double extent_ = 1.0;
};

namespace detail {

inline double parity(std::size_t j) { return (j % 2 == 0) ? 1.0 : -1.0; }

}  // namespace detail

/// Position amplitudes -> momentum amplitudes normalized so that
/// sum |a_k|^2 dp = sum |psi_j|^2 dx.
inline CVector to_momentum(const GridSpec& g, const CVector& psi) {
  const std::size_t n = g.size();
  std::vector<cplx> in(n), out;
  for (std::size_t j = 0; j < n; ++j) in[j] = psi[static_cast<Eigen::Index>(j)] * detail::parity(j);
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  // exp(-i p_k x_j) = exp(-2 pi i k j / n) (-1)^j (-1)^k (-1)^(n/2)
  const double sign_half = detail::parity(n / 2);
  const double scale = g.dx() / std::sqrt(2.0 * pi);
  CVector a(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k)
    a[static_cast<Eigen::Index>(k)] = out[k] * (scale * detail::parity(k) * sign_half);
  return a;
}

/// Inverse of to_momentum.
inline CVector from_momentum(const GridSpec& g, const CVector& a) {
  const std::size_t n = g.size();
  std::vector<cplx> in(n), out;
  for (std::size_t k = 0; k < n; ++k) in[k] = a[static_cast<Eigen::Index>(k)] * detail::parity(k);
  Eigen::FFT<double> fft;
  fft.inv(out, in);  // includes 1/n
  const double sign_half = detail::parity(n / 2);
  const double scale = static_cast<double>(n) * std::sqrt(2.0 * pi) / g.extent();
  CVector psi(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    psi[static_cast<Eigen::Index>(j)] = out[j] * (scale * detail::parity(j) * sign_half);
  return psi;
}

/// First column of the circulant matrix of exp(i v p) on the grid:
/// (exp(i v p) f)_b = sum_m t[m] f_{(b - m) mod n}. For v a multiple of the
/// step this is an exact cyclic shift f(x) -> f(x + v).
inline CVector translation_kernel(const GridSpec& g, double v) {
  const std::size_t n = g.size();
  std::vector<cplx> in(n), out;
  // t[m] = (1/n) sum_k exp(i p_k (m h + v))
  for (std::size_t k = 0; k < n; ++k) in[k] = std::exp(I * g.p(k) * v);
  // sum_k in[k] exp(i p_k m h) = sum_k in[k] exp(2 pi i (k - n/2) m / n)
  //                            = (-1)^m * n * ifft(in)[m]
  Eigen::FFT<double> fft;
  fft.inv(out, in);
  CVector t(static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) t[static_cast<Eigen::Index>(m)] = out[m] * detail::parity(m);
  return t;
}

/// Dense unitary matrix of exp(i v p) on the grid.
inline CMatrix translation_matrix(const GridSpec& g, double v) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const CVector t = translation_kernel(g, v);
  CMatrix T(n, n);
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a < n; ++a) T(b, a) = t[((b - a) % n + n) % n];
  return T;
}

/// Dense Hermitian matrices of the grid position and momentum operators.
inline CMatrix position_operator(const GridSpec& g) {
  return g.x_values().cast<cplx>().asDiagonal();
}

inline CMatrix momentum_operator(const GridSpec& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  CMatrix F(n, n);  // unitary DFT in the centered convention
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j)
      F(k, j) = std::exp(-I * g.p(static_cast<std::size_t>(k)) * g.x(static_cast<std::size_t>(j))) * norm;
  return F.adjoint() * g.p_values().cast<cplx>().asDiagonal() * F;
}

}  // namespace nwt
