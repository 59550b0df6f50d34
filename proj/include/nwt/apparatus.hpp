#pragma once

// Measurement device model: RF-coil momentum kick followed by free flight and
// polarization erasure. Hardware settings (B, L) map to phase-space kicks
// (dp, dx); each kick defines a two-outcome POVM element
//   Pi = 1/2 + (D + D^dagger)/4,   D = exp(i(dp x + dx p)),
// so the detection probability is 1/2 + Re{chi(dp, dx)}/2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "phase_space.hpp"

namespace nwt {

/// CODATA 2018 values, SI.
namespace si {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double neutron_mass = 1.67492749804e-27;
inline constexpr double neutron_moment = 9.6623651e-27;  // |mu_n|, J/T
}  // namespace si

struct PhysicalConfig {
  double wavelength = 0.37e-9;  // m
  double mass = si::neutron_mass;
  double moment = si::neutron_moment;
  /// Meters per natural length unit; momenta scale by hbar / length_unit.
  double length_unit = 1e-9;
  double efficiency = 1.0;
  double background = 0.0;

  double p0() const { return 2.0 * pi * si::hbar / wavelength; }
  double p0_natural() const { return p0() * length_unit / si::hbar; }
  /// Auxiliary position shift pi / (2 p0) in natural units.
  double aux_shift() const { return pi / (2.0 * p0_natural()); }

  void validate() const {
    if (!(wavelength > 0 && mass > 0 && moment > 0 && length_unit > 0))
      throw ValidationError("physical constants must be strictly positive");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ValidationError("efficiency must lie in (0, 1]");
    if (background < 0.0) throw ValidationError("background must be non-negative");
  }
};

struct HardwareKick {
  double dp = 0.0;  // kg m / s
  double dx = 0.0;  // m
};

/// dp = 2 mu B m / p0 and dx = dp L / p0.
inline HardwareKick kicks_from_hardware(double B, double L, const PhysicalConfig& cfg) {
  if (B < 0.0 || L < 0.0) throw ValidationError("kicks_from_hardware: B and L must be non-negative");
  const double dp = 2.0 * cfg.moment * B * cfg.mass / cfg.p0();
  return {dp, dp * L / cfg.p0()};
}

/// SI kick -> natural units (length_unit, hbar / length_unit).
inline HardwareKick to_natural(const HardwareKick& k, const PhysicalConfig& cfg) {
  return {k.dp * cfg.length_unit / si::hbar, k.dx / cfg.length_unit};
}

struct ResolutionLimits {
  double dx_min = 0.0;  // m
  double dp_min = 0.0;  // kg m / s
};

/// dx_min = hbar p0 / (2 mu m B_max), dp_min = (p0 / L) dx_min.
inline ResolutionLimits resolution_limits(double B_max, double L, const PhysicalConfig& cfg) {
  if (!(B_max > 0.0 && L > 0.0)) throw ValidationError("resolution_limits: B_max and L must be positive");
  const double dx_min = si::hbar * cfg.p0() / (2.0 * cfg.moment * cfg.mass * B_max);
  return {dx_min, cfg.p0() / L * dx_min};
}

/// One measurement configuration in natural units.
struct KickSetting {
  double dp = 0.0;
  double dx = 0.0;
  bool aux = false;  // extra position shift of pi / (2 p0)
  double exposure = 1.0;

  auto key() const { return std::make_tuple(dp, dx, aux); }
  bool operator==(const KickSetting&) const = default;
};

struct Schedule {
  std::vector<KickSetting> settings;
  double aux_shift = 0.0;
  std::size_t rows = 0, cols = 0;  // shape of the dp x dx lattice when Cartesian
  std::uint64_t seed = 0;
};

struct CountRecord {
  KickSetting setting;
  std::int64_t counts = 0;
  bool operator==(const CountRecord&) const = default;
};

struct CountDataset {
  std::vector<CountRecord> records;
  double aux_shift = 0.0;
  double length_unit = 1e-9;  // meters per natural length unit
  std::uint64_t seed = 0;
  std::string tag;  // true-state label when simulated

  std::int64_t total_counts() const {
    std::int64_t s = 0;
    for (const auto& r : records) s += r.counts;
    return s;
  }
  void sort_canonical() {
    std::sort(records.begin(), records.end(),
              [](const CountRecord& a, const CountRecord& b) { return a.setting.key() < b.setting.key(); });
  }
  bool operator==(const CountDataset&) const = default;
};

/// Displacement phase convention: D = phase * exp(i u x) exp(i v_eff p) with
/// v_eff = dx (+ aux_shift) and phase = exp(i u v_eff / 2) (times i when the
/// auxiliary shift is on: exp(i p0 pi/(2 p0)) in the co-moving frame).
struct Displacement {
  double u = 0.0;
  double v = 0.0;
  cplx phase = 1.0;
};

inline Displacement displacement_of(const KickSetting& s, double aux_shift) {
  const double v = s.dx + (s.aux ? aux_shift : 0.0);
  cplx ph = std::exp(0.5 * I * s.dp * v);
  if (s.aux) ph *= I;
  return {s.dp, v, ph};
}

inline void check_representable(const KickSetting& s, double aux_shift, const GridSpec& g) {
  const Displacement d = displacement_of(s, aux_shift);
  if (!std::isfinite(d.u) || !std::isfinite(d.v)) throw ValidationError("kick must be finite");
  if (std::abs(d.u) > g.p_max() * (1.0 + 1e-12))
    throw AliasingError("|dp| = " + std::to_string(std::abs(d.u)) + " exceeds the grid Nyquist bound " +
                        std::to_string(g.p_max()));
  if (std::abs(d.v) > 0.5 * g.extent() * (1.0 + 1e-12))
    throw AliasingError("|dx| = " + std::to_string(std::abs(d.v)) + " exceeds half the grid extent");
}

/// Dense POVM element for one setting.
inline CMatrix povm_element(const KickSetting& s, const GridSpec& g, double aux_shift) {
  check_representable(s, aux_shift, g);
  const Displacement d = displacement_of(s, aux_shift);
  const auto n = static_cast<Eigen::Index>(g.size());
  CVector ex(n);
  for (Eigen::Index b = 0; b < n; ++b) ex[b] = std::exp(I * d.u * g.x(static_cast<std::size_t>(b)));
  const CMatrix D = d.phase * (ex.asDiagonal() * translation_matrix(g, d.v));
  return 0.5 * CMatrix::Identity(n, n) + 0.25 * (D + D.adjoint());
}

/// P = tr{Pi rho} = 1/2 + Re{phase * Gamma(u, v_eff)} / 2.
inline double detect_probability(const DensityMatrix& rho, const KickSetting& s, double aux_shift) {
  check_representable(s, aux_shift, rho.grid);
  const Displacement d = displacement_of(s, aux_shift);
  return std::clamp(0.5 + 0.5 * std::real(d.phase * gamma_of_state(rho, d.u, d.v)), 0.0, 1.0);
}

/// Batch evaluation of tr{rho D_j} and of weighted POVM sums for a fixed set of
/// settings. Settings sharing the same effective position shift share one
/// translation kernel.
class DisplacementBank {
 public:
  DisplacementBank(const GridSpec& g, const std::vector<KickSetting>& settings, double aux_shift) : grid_(g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    std::map<double, std::size_t> v_index, u_index;
    for (const auto& s : settings) {
      check_representable(s, aux_shift, g);
      const Displacement d = displacement_of(s, aux_shift);
      auto [vi, vnew] = v_index.try_emplace(d.v, kernels_.size());
      if (vnew) kernels_.push_back(translation_kernel(g, d.v));
      auto [ui, unew] = u_index.try_emplace(d.u, u_phases_.size());
      if (unew) {
        CVector e(n);
        for (Eigen::Index b = 0; b < n; ++b) e[b] = std::exp(I * d.u * g.x(static_cast<std::size_t>(b)));
        u_phases_.push_back(std::move(e));
      }
      entries_.push_back({vi->second, ui->second, d.phase});
    }
  }

  std::size_t size() const { return entries_.size(); }
  const GridSpec& grid() const { return grid_; }

  /// tr{rho D_j} for every setting.
  CVector expectations(const CMatrix& rho) const {
    std::vector<CVector> diags;
    diags.reserve(kernels_.size());
    for (const auto& t : kernels_) diags.push_back(shifted_diagonal(rho, t));
    CVector out(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      const Entry& e = entries_[j];
      out[static_cast<Eigen::Index>(j)] = e.phase * u_phases_[e.u].cwiseProduct(diags[e.v]).sum();
    }
    return out;
  }

  RVector probabilities(const CMatrix& rho) const {
    return (0.5 + 0.5 * expectations(rho).real().array()).cwiseMax(0.0).cwiseMin(1.0);
  }

  /// sum_j w_j Pi_j.
  CMatrix weighted_povm_sum(const RVector& w) const {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    std::vector<CVector> coeff(kernels_.size(), CVector::Zero(n));
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      const Entry& e = entries_[j];
      coeff[e.v] += (w[static_cast<Eigen::Index>(j)] * e.phase) * u_phases_[e.u];
    }
    CMatrix K = CMatrix::Zero(n, n);
    for (std::size_t v = 0; v < kernels_.size(); ++v) {
      const CVector& t = kernels_[v];
      const CVector& c = coeff[v];
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) K(b, a) += c[b] * t[((b - a) % n + n) % n];
    }
    return 0.5 * w.sum() * CMatrix::Identity(n, n) + 0.25 * (K + K.adjoint());
  }

 private:
  struct Entry {
    std::size_t v = 0, u = 0;
    cplx phase;
  };
  GridSpec grid_;
  std::vector<CVector> kernels_;
  std::vector<CVector> u_phases_;
  std::vector<Entry> entries_;
};

/// Cartesian product dp_list x dx_list, doubled with aux variants when asked.
inline Schedule make_schedule(const std::vector<double>& dp_list, const std::vector<double>& dx_list,
                              double exposure, bool with_aux, double aux_shift) {
  if (dp_list.empty() || dx_list.empty()) throw ValidationError("make_schedule: kick lists must be non-empty");
  if (!(exposure > 0.0)) throw ValidationError("make_schedule: exposure must be positive");
  auto has_duplicates = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) != v.end();
  };
  if (has_duplicates(dp_list) || has_duplicates(dx_list))
    throw ValidationError("make_schedule: kick lists contain duplicate values");
  Schedule s;
  s.aux_shift = aux_shift;
  s.rows = dp_list.size();
  s.cols = dx_list.size();
  for (double dp : dp_list)
    for (double dx : dx_list) {
      s.settings.push_back({dp, dx, false, exposure});
      if (with_aux) s.settings.push_back({dp, dx, true, exposure});
    }
  return s;
}

/// Schedule over hardware pairs (B_j, L_k) converted to natural units.
/// Pairs that map onto the same kick (e.g. B = 0 for every L) are merged.
inline Schedule make_hardware_schedule(const std::vector<double>& b_list, const std::vector<double>& l_list,
                                       const PhysicalConfig& cfg, double exposure, bool with_aux) {
  if (b_list.empty() || l_list.empty()) throw ValidationError("make_hardware_schedule: lists must be non-empty");
  if (!(exposure > 0.0)) throw ValidationError("make_hardware_schedule: exposure must be positive");
  Schedule s;
  s.aux_shift = cfg.aux_shift();
  s.rows = b_list.size();
  s.cols = l_list.size();
  std::map<std::tuple<double, double, bool>, bool> seen;
  for (double B : b_list)
    for (double L : l_list) {
      const HardwareKick k = to_natural(kicks_from_hardware(B, L, cfg), cfg);
      for (int aux = 0; aux <= (with_aux ? 1 : 0); ++aux) {
        KickSetting ks{k.dp, k.dx, aux == 1, exposure};
        if (seen.emplace(ks.key(), true).second) s.settings.push_back(ks);
      }
    }
  return s;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Engine keyed by (seed, stream index); streams are independent of the order
/// in which they are drawn.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t k0 = detail::splitmix64(seed);
  const std::uint64_t k1 = detail::splitmix64(k0 ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(k1), static_cast<std::uint32_t>(k1 >> 32),
                    static_cast<std::uint32_t>(k0), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

inline RVector schedule_probabilities(const DensityMatrix& rho, const Schedule& sched) {
  return DisplacementBank(rho.grid, sched.settings, sched.aux_shift).probabilities(rho.matrix);
}

/// counts_j ~ Poisson(exposure_j * P_j); deterministic given the seed.
inline CountDataset simulate_counts(const DensityMatrix& rho, const Schedule& sched, std::uint64_t seed,
                                    const PhysicalConfig& cfg = {}) {
  const RVector prob = schedule_probabilities(rho, sched);
  CountDataset data;
  data.aux_shift = sched.aux_shift;
  data.length_unit = cfg.length_unit;
  data.seed = seed;
  for (std::size_t j = 0; j < sched.settings.size(); ++j) {
    const KickSetting& s = sched.settings[j];
    const double mean = s.exposure * (cfg.efficiency * prob[static_cast<Eigen::Index>(j)] + cfg.background);
    auto eng = keyed_engine(seed, j);
    std::int64_t c = 0;
    if (mean > 0.0) c = std::poisson_distribution<std::int64_t>(mean)(eng);
    data.records.push_back({s, c});
  }
  return data;
}

/// Counts equal to the rounded expectation: a noiseless record.
inline CountDataset expected_counts(const DensityMatrix& rho, const Schedule& sched) {
  const RVector prob = schedule_probabilities(rho, sched);
  CountDataset data;
  data.aux_shift = sched.aux_shift;
  for (std::size_t j = 0; j < sched.settings.size(); ++j) {
    const KickSetting& s = sched.settings[j];
    data.records.push_back({s, std::llround(s.exposure * prob[static_cast<Eigen::Index>(j)])});
  }
  return data;
}

}  // namespace nwt
