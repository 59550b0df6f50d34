#pragma once

// Direct inversion: estimate the complex degree of coherence from paired
// plain/auxiliary intensities and Fourier-invert it to the Wigner function by
// plain Riemann sums.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "apparatus.hpp"

namespace nwt {

/// Gamma samples on a (dp, dx) lattice; values(i, j) = Gamma(dp[i], dx[j]).
struct CoherenceTable {
  std::vector<double> dp;
  std::vector<double> dx;
  CMatrix values;
  CMatrix raw;  // before radial clipping
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present;

  std::size_t rows() const { return dp.size(); }
  std::size_t cols() const { return dx.size(); }
  double filled_fraction() const {
    return static_cast<double>(present.count()) / static_cast<double>(present.size());
  }
};

/// Table of exact Gamma values of a state (noise-free reference).
inline CoherenceTable gamma_table(const DensityMatrix& rho, const std::vector<double>& dp,
                                  const std::vector<double>& dx) {
  CoherenceTable t{dp, dx, CMatrix(dp.size(), dx.size()), CMatrix(), {}};
  t.present.setConstant(static_cast<Eigen::Index>(dp.size()), static_cast<Eigen::Index>(dx.size()), true);
  for (std::size_t j = 0; j < dx.size(); ++j) {
    const CVector d = shifted_diagonal(rho.matrix, translation_kernel(rho.grid, dx[j]));
    for (std::size_t i = 0; i < dp.size(); ++i) {
      cplx s = 0.0;
      for (std::size_t b = 0; b < rho.grid.size(); ++b)
        s += std::exp(I * dp[i] * rho.grid.x(b)) * d[static_cast<Eigen::Index>(b)];
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
  }
  t.raw = t.values;
  return t;
}

namespace detail {

inline std::vector<double> distinct_sorted(std::vector<double> v, double tol = 1e-12) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || std::abs(x - out.back()) > tol * std::max(1.0, std::abs(x))) out.push_back(x);
  return out;
}

inline std::optional<std::size_t> find_value(const std::vector<double>& v, double x, double tol = 1e-9) {
  auto it = std::lower_bound(v.begin(), v.end(), x - tol * std::max(1.0, std::abs(x)));
  if (it != v.end() && std::abs(*it - x) <= tol * std::max(1.0, std::abs(x)))
    return static_cast<std::size_t>(it - v.begin());
  return std::nullopt;
}

}  // namespace detail

/// Probability estimates P = counts / exposure, paired into
/// chi = (2 P_plain - 1) + i (1 - 2 P_aux) and Gamma = chi exp(-i dp dx / 2).
inline CoherenceTable estimate_gamma(const CountDataset& data) {
  struct Pair {
    std::optional<double> plain, aux;
  };
  std::map<std::pair<double, double>, Pair> pairs;
  for (const auto& r : data.records) {
    if (!(r.setting.exposure > 0.0)) throw DataError("estimate_gamma: zero exposure");
    const double P = static_cast<double>(r.counts) / r.setting.exposure;
    Pair& p = pairs[{r.setting.dp, r.setting.dx}];
    (r.setting.aux ? p.aux : p.plain) = P;
  }
  if (pairs.empty()) throw DataError("estimate_gamma: empty dataset");
  std::vector<double> dps, dxs;
  for (const auto& [k, p] : pairs) {
    if (!p.plain || !p.aux)
      throw DataError("estimate_gamma: missing plain/aux pair at dp=" + std::to_string(k.first) +
                      " dx=" + std::to_string(k.second));
    dps.push_back(k.first);
    dxs.push_back(k.second);
  }
  CoherenceTable t;
  t.dp = detail::distinct_sorted(dps);
  t.dx = detail::distinct_sorted(dxs);
  const auto nr = static_cast<Eigen::Index>(t.dp.size()), nc = static_cast<Eigen::Index>(t.dx.size());
  t.values = CMatrix::Zero(nr, nc);
  t.present.setConstant(nr, nc, false);
  for (const auto& [k, p] : pairs) {
    const auto i = static_cast<Eigen::Index>(*detail::find_value(t.dp, k.first));
    const auto j = static_cast<Eigen::Index>(*detail::find_value(t.dx, k.second));
    const cplx chi(2.0 * *p.plain - 1.0, 1.0 - 2.0 * *p.aux);
    t.values(i, j) = chi * std::exp(-0.5 * I * k.first * k.second);
    t.present(i, j) = true;
  }
  t.raw = t.values;
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double a = std::abs(t.values(i, j));
      if (a > 1.0) t.values(i, j) /= a;
    }
  return t;
}

/// Extends the table to the lattice closed under (u, v) -> (-u, -v) using
/// Gamma(-u, -v) = conj(Gamma(u, v)) exp(-i u v). Cells reachable by neither
/// a measurement nor its mirror stay absent.
inline CoherenceTable symmetric_completion(const CoherenceTable& t) {
  std::vector<double> dp = t.dp, dx = t.dx;
  for (double u : t.dp) dp.push_back(-u);
  for (double v : t.dx) dx.push_back(-v);
  CoherenceTable s;
  s.dp = detail::distinct_sorted(dp, 1e-9);
  s.dx = detail::distinct_sorted(dx, 1e-9);
  const auto nr = static_cast<Eigen::Index>(s.dp.size()), nc = static_cast<Eigen::Index>(s.dx.size());
  s.values = CMatrix::Zero(nr, nc);
  s.raw = CMatrix::Zero(nr, nc);
  s.present.setConstant(nr, nc, false);
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double u = s.dp[static_cast<std::size_t>(i)], v = s.dx[static_cast<std::size_t>(j)];
      auto oi = detail::find_value(t.dp, u), oj = detail::find_value(t.dx, v);
      if (oi && oj && t.present(static_cast<Eigen::Index>(*oi), static_cast<Eigen::Index>(*oj))) {
        s.values(i, j) = t.values(static_cast<Eigen::Index>(*oi), static_cast<Eigen::Index>(*oj));
        s.raw(i, j) = t.raw(static_cast<Eigen::Index>(*oi), static_cast<Eigen::Index>(*oj));
        s.present(i, j) = true;
        continue;
      }
      auto mi = detail::find_value(t.dp, -u), mj = detail::find_value(t.dx, -v);
      if (mi && mj && t.present(static_cast<Eigen::Index>(*mi), static_cast<Eigen::Index>(*mj))) {
        const cplx ph = std::exp(-I * u * v);
        s.values(i, j) = std::conj(t.values(static_cast<Eigen::Index>(*mi), static_cast<Eigen::Index>(*mj))) * ph;
        s.raw(i, j) = std::conj(t.raw(static_cast<Eigen::Index>(*mi), static_cast<Eigen::Index>(*mj))) * ph;
        s.present(i, j) = true;
      }
    }
  return s;
}

namespace detail {

inline double uniform_step(const std::vector<double>& v, const char* axis) {
  if (v.size() < 2) throw DataError(std::string("invert_wigner: ") + axis + " lattice needs at least 2 points");
  const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs((v[i] - v[i - 1]) - step) > 1e-6 * std::abs(step))
      throw DataError(std::string("invert_wigner: non-uniform ") + axis + " lattice");
  return step;
}

}  // namespace detail

struct InversionDiagnostics {
  double filled_fraction = 1.0;  // of the completed lattice
  double imag_residue = 0.0;
};

/// W(x, p) = (du dv / 4 pi^2) sum Gamma(u, v) exp(i u v / 2) exp(-i(u x + v p)),
/// the discrete form of W = (1/4 pi^2) int int Gamma(-u, v) exp(-iuv/2 + iux - ivp).
inline WignerGrid invert_wigner(const CoherenceTable& table, const WignerSpec& out,
                                InversionDiagnostics* diag = nullptr) {
  const CoherenceTable t = symmetric_completion(table);
  const double du = detail::uniform_step(t.dp, "dp");
  const double dv = detail::uniform_step(t.dx, "dx");
  CMatrix chi(t.values.rows(), t.values.cols());
  for (Eigen::Index i = 0; i < chi.rows(); ++i)
    for (Eigen::Index j = 0; j < chi.cols(); ++j)
      chi(i, j) = t.present(i, j) ? t.values(i, j) * std::exp(0.5 * I * t.dp[static_cast<std::size_t>(i)] *
                                                               t.dx[static_cast<std::size_t>(j)])
                                  : cplx(0.0);
  WignerGrid w = detail::wigner_from_chi(chi, t.dp, du, t.dx, dv, out);
  if (diag) *diag = {t.filled_fraction(), w.imag_residue};
  return w;
}

/// Output lattice matched to a table: x spans the alias-free period 2 pi / du,
/// p spans 2 pi / dv, each sampled with `count` points.
inline WignerSpec default_output_spec(const CoherenceTable& t, std::size_t count) {
  const CoherenceTable s = symmetric_completion(t);
  const double du = detail::uniform_step(s.dp, "dp"), dv = detail::uniform_step(s.dx, "dx");
  const double xr = 2.0 * pi / du, pr = 2.0 * pi / dv;
  return {Lattice1D::centered(0.0, xr / static_cast<double>(count), count),
          Lattice1D::centered(0.0, pr / static_cast<double>(count), count)};
}

}  // namespace nwt
