#pragma once

// Radon route: each kick samples the characteristic function of a quadrature
// X_theta = cos(theta) x + sin(theta) p at frequency omega. Binning by angle,
// Fourier inversion to quadrature marginals and filtered back-projection give
// the Wigner function.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "direct.hpp"

namespace nwt {

struct QuadratureCoordinates {
  double theta = 0.0;
  double omega = 0.0;
};

/// theta = atan2(dx, dp), omega = hypot(dx, dp); (0, 0) maps to theta = 0.
inline QuadratureCoordinates quadrature_angle(double dp, double dx) {
  if (dp == 0.0 && dx == 0.0) return {0.0, 0.0};
  return {std::atan2(dx, dp), std::hypot(dx, dp)};
}

/// Samples of C_theta(omega) = tr{rho exp(i omega X_theta)} along one ray.
struct QuadratureSamples {
  double theta = 0.0;
  std::vector<double> omega;
  std::vector<cplx> values;
};

struct AngleBins {
  std::vector<QuadratureSamples> bins;
  std::vector<std::size_t> empty;  // indices of bins that received no sample
};

/// Bins paired (plain, aux) settings by angle into n_bins equal bins over
/// [0, pi). Bin b is centred on b pi / n_bins; ties go to the lower bin.
/// Settings with theta outside [0, pi) are folded in with C(-w) = conj C(w).
/// Each bin is sorted by omega and starts with C(0) = 1.
inline AngleBins group_by_angle(const CountDataset& data, std::size_t n_bins) {
  if (n_bins == 0) throw ValidationError("group_by_angle: n_bins must be positive");
  const CoherenceTable t = estimate_gamma(data);
  const double width = pi / static_cast<double>(n_bins);
  std::vector<std::map<double, cplx>> acc(n_bins);
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (!t.present(ii, jj)) continue;
      const double u = t.dp[i], v = t.dx[j];
      if (u == 0.0 && v == 0.0) continue;
      cplx c = t.values(ii, jj) * std::exp(0.5 * I * u * v);
      QuadratureCoordinates q = quadrature_angle(u, v);
      if (q.theta < 0.0) {
        q.theta += pi;
        c = std::conj(c);
      }
      if (q.theta >= pi - 1e-12) {  // theta = pi is the ray theta = 0 reversed
        q.theta = 0.0;
        c = std::conj(c);
      }
      const double pos = q.theta / width;
      auto b = static_cast<std::size_t>(std::floor(pos));
      if (pos - static_cast<double>(b) > 0.5 + 1e-12) ++b;
      if (b == n_bins) {  // closest to pi: fold onto theta = 0
        b = 0;
        c = std::conj(c);
      }
      acc[b].emplace(q.omega, c);
    }
  AngleBins out;
  for (std::size_t b = 0; b < n_bins; ++b) {
    QuadratureSamples s;
    s.theta = static_cast<double>(b) * width;
    s.omega.push_back(0.0);
    s.values.push_back(1.0);
    for (const auto& [w, c] : acc[b]) {
      s.omega.push_back(w);
      s.values.push_back(c);
    }
    if (acc[b].empty()) out.empty.push_back(b);
    out.bins.push_back(std::move(s));
  }
  return out;
}

/// Linear interpolation of C onto the uniform lattice omega_k = k omega_max / (count - 1).
inline QuadratureSamples resample_uniform(const QuadratureSamples& q, std::size_t count) {
  if (q.omega.empty()) throw DataError("resample_uniform: no samples");
  QuadratureSamples r;
  r.theta = q.theta;
  if (q.omega.size() == 1 || count < 2) {
    r.omega = {0.0};
    r.values = {q.values.front()};
    return r;
  }
  const double wmax = q.omega.back();
  for (std::size_t k = 0; k < count; ++k) {
    const double w = wmax * static_cast<double>(k) / static_cast<double>(count - 1);
    auto it = std::upper_bound(q.omega.begin(), q.omega.end(), w);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - q.omega.begin()), q.omega.size() - 1);
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    if (w >= q.omega.back()) lo = hi = q.omega.size() - 1;
    const double span = q.omega[hi] - q.omega[lo];
    const double f = span > 0.0 ? (w - q.omega[lo]) / span : 0.0;
    r.omega.push_back(w);
    r.values.push_back((1.0 - f) * q.values[lo] + f * q.values[hi]);
  }
  return r;
}

/// Samples C on the polar lattice (theta_b = b pi / n_bins, omega_k) by
/// bilinear interpolation of chi over a completed uniform Cartesian table.
/// Each ray runs to the edge of the measured rectangle.
inline std::vector<QuadratureSamples> polar_resample(const CoherenceTable& table, std::size_t n_bins,
                                                     std::size_t n_omega) {
  if (n_bins == 0 || n_omega < 2) throw ValidationError("polar_resample: need n_bins >= 1 and n_omega >= 2");
  const CoherenceTable t = symmetric_completion(table);
  const double du = detail::uniform_step(t.dp, "dp"), dv = detail::uniform_step(t.dx, "dx");
  const auto nr = static_cast<Eigen::Index>(t.rows()), nc = static_cast<Eigen::Index>(t.cols());
  CMatrix chi(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) {
      if (!t.present(i, j)) throw DataError("polar_resample: table has unmeasured cells after completion");
      chi(i, j) = t.values(i, j) * std::exp(0.5 * I * t.dp[static_cast<std::size_t>(i)] * t.dx[static_cast<std::size_t>(j)]);
    }
  const double umax = std::min(-t.dp.front(), t.dp.back()), vmax = std::min(-t.dx.front(), t.dx.back());
  auto at = [&](double u, double v) {
    const double a = std::clamp((u - t.dp.front()) / du, 0.0, static_cast<double>(nr - 1));
    const double b = std::clamp((v - t.dx.front()) / dv, 0.0, static_cast<double>(nc - 1));
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(a), nr - 2);
    const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(b), nc - 2);
    const double fa = a - static_cast<double>(i), fb = b - static_cast<double>(j);
    return (1 - fa) * (1 - fb) * chi(i, j) + fa * (1 - fb) * chi(i + 1, j) + (1 - fa) * fb * chi(i, j + 1) +
           fa * fb * chi(i + 1, j + 1);
  };
  std::vector<QuadratureSamples> out;
  for (std::size_t b = 0; b < n_bins; ++b) {
    QuadratureSamples q;
    q.theta = pi * static_cast<double>(b) / static_cast<double>(n_bins);
    const double c = std::cos(q.theta), s = std::sin(q.theta);
    double wmax = std::numeric_limits<double>::infinity();
    if (std::abs(c) > 1e-12) wmax = std::min(wmax, umax / std::abs(c));
    if (std::abs(s) > 1e-12) wmax = std::min(wmax, vmax / std::abs(s));
    for (std::size_t k = 0; k < n_omega; ++k) {
      const double w = wmax * static_cast<double>(k) / static_cast<double>(n_omega - 1);
      q.omega.push_back(w);
      q.values.push_back(k == 0 ? cplx(1.0) : at(w * c, w * s));
    }
    out.push_back(std::move(q));
  }
  return out;
}

struct Marginal {
  double theta = 0.0;
  Lattice1D s;
  RVector density;
  RVector raw;  // before clipping and renormalization
};

using MarginalSet = std::vector<Marginal>;

/// P(s) = (dw / 2 pi) [C(0) + 2 Re sum_{k >= 1} C(w_k) exp(-i w_k s)], then
/// negative ripples are clipped and the density renormalized.
inline Marginal marginal_from_characteristic(const QuadratureSamples& q, const Lattice1D& s) {
  if (q.omega.empty() || q.omega.front() != 0.0)
    throw DataError("marginal_from_characteristic: omega lattice must start at 0");
  Marginal m{q.theta, s, RVector::Zero(static_cast<Eigen::Index>(s.count)), {}};
  if (q.omega.size() == 1) {
    m.density.setConstant(1.0 / (s.step * static_cast<double>(s.count)));
    m.raw = m.density;
    return m;
  }
  const double dw = q.omega[1] - q.omega[0];
  for (std::size_t k = 2; k < q.omega.size(); ++k)
    if (std::abs(q.omega[k] - q.omega[k - 1] - dw) > 1e-9 * dw)
      throw DataError("marginal_from_characteristic: non-uniform omega lattice");
  for (std::size_t i = 0; i < s.count; ++i) {
    double acc = q.values.front().real();
    for (std::size_t k = 1; k < q.omega.size(); ++k)
      acc += 2.0 * std::real(q.values[k] * std::exp(-I * q.omega[k] * s[i]));
    m.density[static_cast<Eigen::Index>(i)] = acc * dw / (2.0 * pi);
  }
  m.raw = m.density;
  m.density = m.density.cwiseMax(0.0);
  const double mass = m.density.sum() * s.step;
  if (mass > 0.0) m.density /= mass;
  return m;
}

/// Exact quadrature marginal of a state: the grid Wigner function integrated
/// along lines x cos(theta) + p sin(theta) = s. The grid Wigner function is
/// periodic (x period = extent, p period = 2 p_max); only the principal cell
/// contributes.
inline Marginal radon_projection(const DensityMatrix& rho, double theta, const Lattice1D& s,
                                 const Lattice1D& t) {
  const double c = std::cos(theta), sn = std::sin(theta);
  const double xh = 0.5 * rho.grid.extent(), ph = rho.grid.p_max();
  std::vector<double> xv, pv;
  std::vector<Eigen::Index> row;
  for (std::size_t i = 0; i < s.count; ++i)
    for (std::size_t k = 0; k < t.count; ++k) {
      const double x = s[i] * c - t[k] * sn, p = s[i] * sn + t[k] * c;
      if (x < -xh || x >= xh || p < -ph || p >= ph) continue;
      xv.push_back(x);
      pv.push_back(p);
      row.push_back(static_cast<Eigen::Index>(i));
    }
  const RVector w = wigner_at_points(rho, Eigen::Map<const RVector>(xv.data(), static_cast<Eigen::Index>(xv.size())),
                                     Eigen::Map<const RVector>(pv.data(), static_cast<Eigen::Index>(pv.size())));
  Marginal m{theta, s, RVector::Zero(static_cast<Eigen::Index>(s.count)), {}};
  for (std::size_t j = 0; j < row.size(); ++j) m.density[row[j]] += w[static_cast<Eigen::Index>(j)] * t.step;
  m.raw = m.density;
  return m;
}

enum class RampWindow { ram_lak, hann };

inline const char* window_name(RampWindow w) { return w == RampWindow::hann ? "hann" : "ram-lak"; }

struct BackprojectionInfo {
  double covered = 0.0;  // angular range represented by the marginals, radians out of pi
  std::string window;
};

namespace detail {

/// Ramp-filtered projection q(s) = (1 / 2 pi) int |w| C(w) H(w) exp(-i w s) dw
/// from samples of P(s), using the band-limited spatial Ram-Lak kernel.
inline RVector ramp_filter(const RVector& P, double ds, RampWindow window) {
  const auto n = static_cast<std::size_t>(P.size());
  std::size_t M = 1;
  while (M < 2 * n) M <<= 1;
  std::vector<cplx> h(M, 0.0), f(M, 0.0), H, F, out;
  // g(t) = (1/2pi) int |w| exp(-iwt) dw band-limited to |w| < pi/ds
  for (std::size_t j = 0; j < M; ++j) {
    const long m = j <= M / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(M);
    double g = 0.0;
    if (m == 0) g = pi / (2.0 * ds * ds);
    else if (m % 2 != 0) g = -2.0 / (pi * ds * ds * static_cast<double>(m * m));
    h[j] = g;
  }
  for (std::size_t j = 0; j < n; ++j) f[j] = P[static_cast<Eigen::Index>(j)];
  Eigen::FFT<double> fft;
  fft.fwd(H, h);
  fft.fwd(F, f);
  for (std::size_t k = 0; k < M; ++k) {
    double win = 1.0;
    if (window == RampWindow::hann) {
      const double r = static_cast<double>(std::min(k, M - k)) / (0.5 * static_cast<double>(M));
      win = 0.5 * (1.0 + std::cos(pi * r));
    }
    F[k] *= H[k] * win;
  }
  fft.inv(out, F);
  RVector q(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) q[static_cast<Eigen::Index>(j)] = out[j].real() * ds;
  return q;
}

inline double interpolate(const RVector& q, const Lattice1D& s, double at) {
  const double pos = (at - s.first) / s.step;
  if (pos < 0.0 || pos > static_cast<double>(s.count - 1)) return 0.0;
  const auto i = std::min(static_cast<std::size_t>(pos), s.count - 2);
  const double f = pos - static_cast<double>(i);
  return (1.0 - f) * q[static_cast<Eigen::Index>(i)] + f * q[static_cast<Eigen::Index>(i + 1)];
}

}  // namespace detail

/// W(x, p) = (1 / 2 pi) sum_theta dtheta q_theta(x cos theta + p sin theta).
/// Angles are folded into [0, pi); each angle is weighted by half the gap to
/// its neighbours, with gaps wider than twice the median spacing treated as
/// unmeasured.
inline WignerGrid filtered_backprojection(const MarginalSet& marginals, const WignerSpec& out,
                                          RampWindow window = RampWindow::hann,
                                          BackprojectionInfo* info = nullptr) {
  struct Ray {
    double theta;
    const Marginal* m;
    bool mirrored;
  };
  std::vector<Ray> rays;
  for (const auto& m : marginals) {
    double th = std::fmod(m.theta, 2.0 * pi);
    if (th < 0.0) th += 2.0 * pi;
    bool mirrored = false;
    if (th >= pi) {
      th -= pi;
      mirrored = true;
    }
    rays.push_back({th, &m, mirrored});
  }
  std::sort(rays.begin(), rays.end(), [](const Ray& a, const Ray& b) { return a.theta < b.theta; });
  std::vector<double> distinct;
  for (const auto& r : rays)
    if (distinct.empty() || r.theta - distinct.back() > 1e-9) distinct.push_back(r.theta);
  if (distinct.size() < 8)
    throw DataError("filtered_backprojection: at least 8 distinct angles are required, got " +
                    std::to_string(distinct.size()));

  const std::size_t n = rays.size();
  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i) gaps[i] = (i + 1 < n ? rays[i + 1].theta : rays[0].theta + pi) - rays[i].theta;
  std::vector<double> sorted_gaps;
  for (double g : gaps)
    if (g > 1e-9) sorted_gaps.push_back(g);
  std::sort(sorted_gaps.begin(), sorted_gaps.end());
  const double cap = 2.0 * sorted_gaps[sorted_gaps.size() / 2];
  std::vector<double> weight(n, 0.0);
  double covered = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gaps[i] <= cap ? gaps[i] : 0.5 * cap;
    covered += g;
    weight[i] += 0.5 * g;
    weight[(i + 1) % n] += 0.5 * g;
  }

  RMatrix w = RMatrix::Zero(static_cast<Eigen::Index>(out.x.count), static_cast<Eigen::Index>(out.p.count));
  for (std::size_t r = 0; r < n; ++r) {
    const Marginal& m = *rays[r].m;
    if (m.s.count < 2) throw DataError("filtered_backprojection: marginal needs at least 2 samples");
    const RVector q = detail::ramp_filter(m.density, m.s.step, window);
    const double c = std::cos(rays[r].theta), sn = std::sin(rays[r].theta);
    const double sign = rays[r].mirrored ? -1.0 : 1.0;  // P_{theta+pi}(s) = P_theta(-s)
    for (std::size_t i = 0; i < out.x.count; ++i)
      for (std::size_t j = 0; j < out.p.count; ++j)
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            weight[r] * detail::interpolate(q, m.s, sign * (out.x[i] * c + out.p[j] * sn));
  }
  w /= 2.0 * pi;
  if (info) *info = {covered, window_name(window)};
  return {out.x, out.p, w, 0.0};
}

enum class Regrid { automatic, nearest_bin, polar };

inline const char* regrid_name(Regrid r) {
  switch (r) {
    case Regrid::nearest_bin: return "nearest-bin";
    case Regrid::polar: return "polar-bilinear";
    default: return "automatic";
  }
}

struct RadonOptions {
  std::size_t n_bins = 64;
  std::size_t n_omega = 128;
  std::size_t n_s = 512;
  double s_extent = 0.0;  // 0: twice the output diagonal, capped by the alias-free period
  RampWindow window = RampWindow::hann;
  Regrid regrid = Regrid::automatic;
};

struct RadonResult {
  WignerGrid wigner;
  MarginalSet marginals;
  std::vector<std::size_t> empty_bins;
  BackprojectionInfo info;
  Regrid regrid = Regrid::automatic;
};

namespace detail {

inline bool complete_cartesian(const CoherenceTable& t) {
  const CoherenceTable s = symmetric_completion(t);
  if (s.present.count() != s.present.size()) return false;
  try {
    uniform_step(s.dp, "dp");
    uniform_step(s.dx, "dx");
  } catch (const DataError&) {
    return false;
  }
  return true;
}

}  // namespace detail

/// dataset -> C on rays -> marginals on a common s lattice -> back-projection.
/// Cartesian tables are regridded onto the polar lattice; anything else is
/// binned by nearest angle and resampled along omega. Empty bins are skipped.
inline RadonResult radon_reconstruct(const CountDataset& data, const WignerSpec& out, const RadonOptions& opt = {}) {
  RadonResult res;
  std::vector<QuadratureSamples> rays;
  const CoherenceTable table = estimate_gamma(data);
  res.regrid = opt.regrid;
  if (res.regrid == Regrid::automatic)
    res.regrid = detail::complete_cartesian(table) ? Regrid::polar : Regrid::nearest_bin;
  if (res.regrid == Regrid::polar) {
    rays = polar_resample(table, opt.n_bins, opt.n_omega);
  } else {
    const AngleBins bins = group_by_angle(data, opt.n_bins);
    res.empty_bins = bins.empty;
    for (std::size_t b = 0; b < bins.bins.size(); ++b)
      if (bins.bins[b].omega.size() > 1) rays.push_back(resample_uniform(bins.bins[b], opt.n_omega));
  }
  double period = std::numeric_limits<double>::infinity();
  for (const auto& r : rays)
    if (r.omega.size() > 1) period = std::min(period, 2.0 * pi / (r.omega[1] - r.omega[0]));
  if (!std::isfinite(period)) throw DataError("radon_reconstruct: no ray carries samples beyond omega = 0");
  const double radius = std::max({std::hypot(out.x.first, out.p.first), std::hypot(out.x.last(), out.p.last()),
                                  std::hypot(out.x.first, out.p.last()), std::hypot(out.x.last(), out.p.first)});
  const double extent = opt.s_extent > 0.0 ? opt.s_extent : std::min(period, 4.0 * radius);
  const Lattice1D s = Lattice1D::centered(0.0, extent / static_cast<double>(opt.n_s), opt.n_s);
  for (const auto& r : rays) res.marginals.push_back(marginal_from_characteristic(r, s));
  res.wigner = filtered_backprojection(res.marginals, out, opt.window, &res.info);
  return res;
}

}  // namespace nwt
