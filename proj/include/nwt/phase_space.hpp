#pragma once

// Phase-space objects of a state: the complex degree of coherence
// Gamma(u, v) = tr{rho exp(i u x) exp(i v p)}, its symmetrized form chi, the
// Wigner function and quadrature statistics.

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "state.hpp"

namespace nwt {

/// Diagonal of exp(i v p) rho: d[b] = sum_m t_v[m] rho(b - m, b).
inline CVector shifted_diagonal(const CMatrix& rho, const CVector& kernel) {
  const Eigen::Index n = rho.rows();
  CVector d = CVector::Zero(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const cplx t = kernel[m];
    if (std::abs(t) < 1e-300) continue;
    for (Eigen::Index b = 0; b < n; ++b) d[b] += t * rho((b - m + n) % n, b);
  }
  return d;
}

/// Gamma(u, v) with exp(i u x) to the left of exp(i v p); v is any real.
inline cplx gamma_of_state(const DensityMatrix& rho, double u, double v) {
  const GridSpec& g = rho.grid;
  const CVector d = shifted_diagonal(rho.matrix, translation_kernel(g, v));
  cplx s = 0.0;
  for (std::size_t b = 0; b < g.size(); ++b) s += std::exp(I * u * g.x(b)) * d[static_cast<Eigen::Index>(b)];
  return s;
}

/// Symmetrized characteristic function chi(u, v) = tr{rho exp(i(u x + v p))}
/// = Gamma(u, v) exp(i u v / 2).
inline cplx chi_of_state(const DensityMatrix& rho, double u, double v) {
  return gamma_of_state(rho, u, v) * std::exp(0.5 * I * u * v);
}

/// Characteristic function of the quadrature X = cos(theta) x + sin(theta) p
/// evaluated by exponentiating the grid operator directly.
inline cplx quadrature_characteristic(const DensityMatrix& rho, double theta, double omega) {
  const CMatrix X = std::cos(theta) * position_operator(rho.grid) + std::sin(theta) * momentum_operator(rho.grid);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (X + X.adjoint()));
  const CMatrix& V = es.eigenvectors();
  CVector phase(X.rows());
  for (Eigen::Index k = 0; k < X.rows(); ++k) phase[k] = std::exp(I * omega * es.eigenvalues()[k]);
  return (rho.matrix * V * phase.asDiagonal() * V.adjoint()).trace();
}

/// Output lattice of a Wigner evaluation.
struct WignerSpec {
  Lattice1D x;
  Lattice1D p;

  static WignerSpec native(const GridSpec& g) { return {g.x_lattice(), g.p_lattice()}; }
};

/// Real phase-space function sampled on an (x, p) lattice; values(i, j) is
/// W(x_i, p_j).
struct WignerGrid {
  Lattice1D x;
  Lattice1D p;
  RMatrix values;
  double imag_residue = 0.0;  // max |Im| of the inverse sum, diagnostic only

  double cell() const { return x.step * p.step; }
  double integral() const { return values.sum() * cell(); }
  /// Density over x: integral of W over p.
  RVector x_marginal() const { return values.rowwise().sum() * p.step; }
  RVector p_marginal() const { return values.colwise().sum().transpose() * x.step; }
  double max_abs() const { return values.cwiseAbs().maxCoeff(); }
};

/// Sum of max(-W, 0) dx dp.
inline double negativity_volume(const WignerGrid& w) {
  return (-w.values.array()).max(0.0).sum() * w.cell();
}

/// Relative L2 distance ||a - b|| / ||b|| on matching lattices.
inline double relative_l2(const WignerGrid& a, const WignerGrid& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw DimensionError("relative_l2: lattices differ");
  return (a.values - b.values).norm() / b.values.norm();
}

namespace detail {

/// (count x n) matrix of exp(-i f_k t_i).
inline CMatrix fourier_rows(const Lattice1D& t, const std::vector<double>& f) {
  CMatrix e(static_cast<Eigen::Index>(t.count), static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < t.count; ++i)
    for (std::size_t k = 0; k < f.size(); ++k)
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::exp(-I * f[k] * t[i]);
  return e;
}

/// W(x, p) = (du dv / 4 pi^2) sum_{u,v} chi(u, v) exp(-i(u x + v p)).
inline WignerGrid wigner_from_chi(const CMatrix& chi, const std::vector<double>& us, double du,
                                  const std::vector<double>& vs, double dv, const WignerSpec& out) {
  const CMatrix ex = fourier_rows(out.x, us);
  const CMatrix ep = fourier_rows(out.p, vs);
  const CMatrix w = (du * dv / (4.0 * pi * pi)) * (ex * chi * ep.transpose());
  WignerGrid res{out.x, out.p, w.real(), 0.0};
  const double peak = res.values.cwiseAbs().maxCoeff();
  res.imag_residue = peak > 0.0 ? w.imag().cwiseAbs().maxCoeff() / peak : 0.0;
  return res;
}

}  // namespace detail

/// chi sampled on the grid-native lattice: u = k dp for |k| <= n/2 and
/// v = m dx for |m| < n. The two u = +-p_max rows carry half weight so the
/// lattice stays conjugate-symmetric. The state is taken as zero outside the
/// grid, so no periodic wrap enters the Wigner function.
struct ChiLattice {
  std::vector<double> us, vs;
  double du = 0.0, dv = 0.0;
  CMatrix values;  // (u index, v index)
};

inline ChiLattice chi_lattice(const DensityMatrix& rho) {
  const GridSpec& g = rho.grid;
  const auto n = static_cast<Eigen::Index>(g.size());
  ChiLattice c;
  c.du = g.dp();
  c.dv = g.dx();
  for (Eigen::Index k = 0; k < n; ++k) c.us.push_back(g.p(static_cast<std::size_t>(k)));
  c.us.push_back(g.p_max());
  const auto nu = static_cast<Eigen::Index>(c.us.size());
  for (Eigen::Index m = -(n - 1); m <= n - 1; ++m) c.vs.push_back(static_cast<double>(m) * c.dv);

  const auto nv = static_cast<Eigen::Index>(c.vs.size());
  CMatrix diag = CMatrix::Zero(n, nv);  // rho(b + m, b)
  for (Eigen::Index col = 0; col < nv; ++col) {
    const Eigen::Index m = col - (n - 1);
    for (Eigen::Index b = std::max<Eigen::Index>(0, -m); b < std::min(n, n - m); ++b)
      diag(b, col) = rho.matrix(b + m, b);
  }
  CMatrix eu(nu, n);
  for (Eigen::Index k = 0; k < nu; ++k)
    for (Eigen::Index b = 0; b < n; ++b)
      eu(k, b) = std::exp(I * c.us[static_cast<std::size_t>(k)] * g.x(static_cast<std::size_t>(b)));
  c.values = eu * diag;
  c.values.row(0) *= 0.5;
  c.values.row(nu - 1) *= 0.5;
  for (Eigen::Index k = 0; k < nu; ++k)
    for (Eigen::Index col = 0; col < nv; ++col)
      c.values(k, col) *= std::exp(0.5 * I * c.us[static_cast<std::size_t>(k)] * c.vs[static_cast<std::size_t>(col)]);
  return c;
}

inline WignerGrid wigner_of_state(const DensityMatrix& rho, const WignerSpec& out) {
  const ChiLattice c = chi_lattice(rho);
  return detail::wigner_from_chi(c.values, c.us, c.du, c.vs, c.dv, out);
}

/// Wigner function at scattered phase-space points (x_i, p_i).
inline RVector wigner_at_points(const DensityMatrix& rho, const RVector& xs, const RVector& ps) {
  const ChiLattice c = chi_lattice(rho);
  RVector w(xs.size());
  CVector eu(static_cast<Eigen::Index>(c.us.size())), ev(static_cast<Eigen::Index>(c.vs.size()));
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < c.us.size(); ++k) eu[static_cast<Eigen::Index>(k)] = std::exp(-I * c.us[k] * xs[i]);
    for (std::size_t m = 0; m < c.vs.size(); ++m) ev[static_cast<Eigen::Index>(m)] = std::exp(-I * c.vs[m] * ps[i]);
    w[i] = (eu.transpose() * c.values * ev).real()(0, 0) * c.du * c.dv / (4.0 * pi * pi);
  }
  return w;
}

inline double wigner_at(const DensityMatrix& rho, double x, double p) {
  return wigner_at_points(rho, RVector::Constant(1, x), RVector::Constant(1, p))[0];
}

/// Analytic Wigner function of a Gaussian with position spread sx, momentum
/// spread sp and covariance cxp.
inline double gaussian_wigner(double x, double p, double sx, double sp, double cxp = 0.0) {
  const double det = sx * sx * sp * sp - cxp * cxp;
  const double q = (sp * sp * x * x - 2.0 * cxp * x * p + sx * sx * p * p) / det;
  return std::exp(-0.5 * q) / (2.0 * pi * std::sqrt(det));
}

}  // namespace nwt
