#pragma once

// Longitudinal motional states on the grid and the test-state families:
// minimum-uncertainty Gaussians, freely evolved packets and two-hump cats.

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "grid.hpp"

namespace nwt {

/// Boundary density (relative to the peak) above which a state is rejected.
inline constexpr double kBoundaryTolerance = 1e-8;

/// Pure state sampled in the position basis; sum |psi|^2 dx = 1.
struct WavePacket {
  GridSpec grid;
  CVector amplitudes;

  double norm_squared() const { return amplitudes.squaredNorm() * grid.dx(); }
  RVector position_density() const { return amplitudes.cwiseAbs2(); }
  RVector momentum_density() const { return to_momentum(grid, amplitudes).cwiseAbs2(); }
  double mean_x() const {
    return (position_density().array() * grid.x_values().array()).sum() * grid.dx();
  }
  double variance_x() const {
    const double m = mean_x();
    const RVector d = position_density();
    return (d.array() * (grid.x_values().array() - m).square()).sum() * grid.dx();
  }
  double mean_p() const {
    return (momentum_density().array() * grid.p_values().array()).sum() * grid.dp();
  }
  double variance_p() const {
    const double m = mean_p();
    const RVector d = momentum_density();
    return (d.array() * (grid.p_values().array() - m).square()).sum() * grid.dp();
  }
};

/// Density operator in the grid basis, pre-weighted so that trace = 1
/// (matrix(a, b) = rho(x_a, x_b) dx).
struct DensityMatrix {
  GridSpec grid;
  CMatrix matrix;

  std::size_t dim() const { return grid.size(); }
  double trace() const { return matrix.trace().real(); }
  double purity() const { return (matrix * matrix).trace().real(); }
  double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
  RVector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (matrix + matrix.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
  /// <x|rho|x> as a density over x.
  RVector position_density() const { return matrix.diagonal().real() / grid.dx(); }

  static DensityMatrix maximally_mixed(const GridSpec& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    return {g, CMatrix::Identity(n, n) / static_cast<double>(n)};
  }
};

namespace detail {

inline void check_fits(const GridSpec& g, const CVector& psi, const char* what) {
  auto boundary_ratio = [](const RVector& d) {
    const double peak = d.maxCoeff();
    const Eigen::Index n = d.size();
    const double edge = std::max({d[0], d[1], d[n - 1]});
    return peak > 0.0 ? edge / peak : 1.0;
  };
  if (boundary_ratio(psi.cwiseAbs2()) > kBoundaryTolerance)
    throw GridError(std::string(what) + ": position density at the grid boundary exceeds 1e-8 of the peak");
  if (boundary_ratio(to_momentum(g, psi).cwiseAbs2()) > kBoundaryTolerance)
    throw GridError(std::string(what) + ": momentum density at the lattice edge exceeds 1e-8 of the peak");
}

inline CVector normalized(const GridSpec& g, CVector psi) {
  const double nrm = std::sqrt(psi.squaredNorm() * g.dx());
  if (!(nrm > 0.0)) throw GridError("state vanishes on the grid");
  return psi / nrm;
}

}  // namespace detail

/// Minimum-uncertainty packet with momentum amplitude
/// exp(-(k - p_center)^2 l_coh^2) exp(-i k x_center).
inline WavePacket make_gaussian(double l_coh, double x_center, double p_center, const GridSpec& g) {
  if (!(l_coh > 0.0)) throw ValidationError("make_gaussian: l_coh must be positive");
  // |psi(x)|^2 ~ exp(-(x - x0)^2 / (2 l^2)): position spread equals l_coh.
  if (g.extent() < 10.0 * l_coh)
    throw GridError("make_gaussian: x_extent must be at least 10 position spreads");
  CVector a(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double dk = g.p(k) - p_center;
    a[static_cast<Eigen::Index>(k)] = std::exp(-dk * dk * l_coh * l_coh - I * g.p(k) * x_center);
  }
  CVector psi = detail::normalized(g, from_momentum(g, a));
  detail::check_fits(g, psi, "make_gaussian");
  return {g, psi};
}

/// Multiplies momentum amplitudes by exp(i k^2 tau / 2), tau = T/m.
inline WavePacket evolve_free(const WavePacket& psi, double tau) {
  const GridSpec& g = psi.grid;
  // Predicted spread after dispersion: sqrt(var_x + tau^2 var_p).
  const double spread = std::sqrt(psi.variance_x() + tau * tau * psi.variance_p());
  if (spread > 0.25 * g.extent())
    throw GridError("evolve_free: dispersed packet spread exceeds x_extent/4");
  CVector a = to_momentum(g, psi.amplitudes);
  for (std::size_t k = 0; k < g.size(); ++k)
    a[static_cast<Eigen::Index>(k)] *= std::exp(0.5 * I * g.p(k) * g.p(k) * tau);
  CVector out = from_momentum(g, a);
  detail::check_fits(g, out, "evolve_free");
  return {g, out};
}

/// psi(x) -> psi(x + shift), exact on band-limited states via the momentum
/// representation.
inline WavePacket translate(const WavePacket& psi, double shift) {
  const GridSpec& g = psi.grid;
  CVector a = to_momentum(g, psi.amplitudes);
  for (std::size_t k = 0; k < g.size(); ++k)
    a[static_cast<Eigen::Index>(k)] *= std::exp(I * g.p(k) * shift);
  return {g, from_momentum(g, a)};
}

/// Normalized [1 + exp(i p separation)] |base>.
inline WavePacket make_cat(const WavePacket& base, double separation) {
  const WavePacket moved = translate(base, separation);
  CVector psi = detail::normalized(base.grid, base.amplitudes + moved.amplitudes);
  detail::check_fits(base.grid, psi, "make_cat");
  return {base.grid, psi};
}

inline DensityMatrix density_from_pure(const WavePacket& psi) {
  const CVector c = psi.amplitudes * std::sqrt(psi.grid.dx());
  CMatrix m = c * c.adjoint();
  m /= m.trace().real();
  return {psi.grid, m};
}

/// Convex mixture sum_i w_i |psi_i><psi_i|; weights are renormalized.
inline DensityMatrix mixture(const std::vector<WavePacket>& states, const std::vector<double>& weights) {
  if (states.empty() || states.size() != weights.size())
    throw DimensionError("mixture: states and weights must be non-empty and of equal length");
  const GridSpec g = states.front().grid;
  const auto n = static_cast<Eigen::Index>(g.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!(states[i].grid == g)) throw DimensionError("mixture: grids differ");
    m += weights[i] * density_from_pure(states[i]).matrix;
  }
  m /= m.trace().real();
  return {g, m};
}

/// Matrix square root of a Hermitian PSD matrix (negative eigenvalues clamped).
namespace detail {

// eigenvalues below the rounding floor of the decomposition count as zero
inline RVector floored(const RVector& ev) {
  const double floor = static_cast<double>(ev.size()) * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff();
  return ev.unaryExpr([floor](double x) { return x > floor ? x : 0.0; });
}

}  // namespace detail

inline CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const RVector ev = detail::floored(es.eigenvalues()).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim() || !(a.grid == b.grid)) throw DimensionError("fidelity: grids differ");
  const CMatrix sa = psd_sqrt(a.matrix);
  const CMatrix inner = sa * b.matrix * sa;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double t = detail::floored(es.eigenvalues()).cwiseSqrt().sum();
  return std::clamp(t * t, 0.0, 1.0);
}

}  // namespace nwt
