#pragma once

// Maximum-likelihood reconstruction from raw counts: maximizes
// sum_j f_j log p_j with f, p the normalized frequencies and model
// probabilities (equivalently minimizes their Kullback-Leibler distance) by a
// diluted R rho R fixed-point iteration gauged for a POVM whose elements do
// not sum to the identity.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "apparatus.hpp"
#include "phase_space.hpp"

namespace nwt {

enum class MLInit { maximally_mixed, supplied };

struct MLConfig {
  std::size_t dim = 0;  // reconstruction grid points; 0 keeps the forward grid
  double dilution = 0.5;  // initial step t
  double max_step = 64.0;
  std::size_t max_iter = 2000;
  double tol = 1e-9;
  std::size_t patience = 5;  // consecutive iterations below tol
  MLInit init = MLInit::maximally_mixed;
  std::optional<DensityMatrix> initial;
  bool use_aux = false;  // plain records only by default

  void validate() const {
    if (!(dilution > 0.0 && dilution <= 1.0)) throw ValidationError("ml: dilution must lie in (0, 1]");
    if (!(max_step >= dilution)) throw ValidationError("ml: max_step must be at least the dilution");
    if (!(tol > 0.0)) throw ValidationError("ml: tol must be positive");
    if (dim == 1) throw ValidationError("ml: dim must be at least 2");
    if (max_iter == 0) throw ValidationError("ml: max_iter must be positive");
    if (init == MLInit::supplied && !initial) throw ValidationError("ml: supplied init requires an initial state");
  }
};

struct MLReport {
  DensityMatrix state;
  std::vector<double> log_likelihood;  // entry 0 is the initial state
  std::size_t iterations = 0;
  bool converged = false;
  double kl = 0.0;
  std::size_t decimation = 1;
  double final_dilution = 0.0;
  std::string note;
};

/// Called with (iteration, iterate, log-likelihood) after every accepted step.
using MLObserver = std::function<void(std::size_t, const DensityMatrix&, double)>;

namespace detail {

struct Frequencies {
  std::vector<KickSetting> settings;
  RVector f;  // counts / total
};

inline Frequencies frequencies(const CountDataset& data, bool use_aux) {
  Frequencies fr;
  std::vector<double> c;
  for (const auto& r : data.records) {
    if (r.setting.aux && !use_aux) continue;
    if (r.counts < 0) throw DataError("negative count");
    fr.settings.push_back(r.setting);
    c.push_back(static_cast<double>(r.counts));
  }
  if (fr.settings.empty()) throw DataError("ml: dataset has no usable records");
  fr.f = Eigen::Map<RVector>(c.data(), static_cast<Eigen::Index>(c.size()));
  const double total = fr.f.sum();
  if (!(total > 0.0)) throw DataError("ml: dataset has no counts");
  fr.f /= total;
  return fr;
}

inline double normalized_log_likelihood(const RVector& f, const RVector& p) {
  const double sp = p.sum();
  double ll = 0.0;
  for (Eigen::Index j = 0; j < f.size(); ++j)
    if (f[j] > 0.0) ll += f[j] * std::log(std::max(p[j], 1e-300) / sp);
  return ll;
}

inline CMatrix hermitian_inverse(const CMatrix& g) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()));
  const double floor = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
  const RVector inv = es.eigenvalues().unaryExpr([floor](double e) { return e > floor ? 1.0 / e : 0.0; });
  return es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline CMatrix normalized_trace(const CMatrix& m) {
  CMatrix h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

}  // namespace detail

/// sum_j f_j log p_j with f = counts / sum counts and p = P_j / sum_k P_k.
inline double log_likelihood(const DensityMatrix& rho, const CountDataset& data, bool use_aux = true) {
  const auto fr = detail::frequencies(data, use_aux);
  const RVector p = DisplacementBank(rho.grid, fr.settings, data.aux_shift).probabilities(rho.matrix);
  return detail::normalized_log_likelihood(fr.f, p);
}

/// sum_j f_j log(f_j / p_j) over all records, normalized as above.
inline double kl_divergence(const DensityMatrix& rho, const CountDataset& data, bool use_aux = true) {
  const auto fr = detail::frequencies(data, use_aux);
  const RVector p = DisplacementBank(rho.grid, fr.settings, data.aux_shift).probabilities(rho.matrix);
  const double sp = p.sum();
  double kl = 0.0;
  for (Eigen::Index j = 0; j < fr.f.size(); ++j) {
    if (fr.f[j] == 0.0) continue;
    if (!(p[j] > 0.0))
      throw DataError("kl_divergence: model probability vanishes on a setting with counts (truncation too aggressive?)");
    kl += fr.f[j] * std::log(fr.f[j] * sp / p[j]);
  }
  return std::max(kl, 0.0);
}

/// Grid with every factor-th point of g (same extent).
inline GridSpec decimated_grid(const GridSpec& g, std::size_t factor) {
  if (factor == 0 || g.size() % factor != 0) throw ValidationError("decimation factor must divide n_points");
  return GridSpec(g.size() / factor, g.extent());
}

/// Restriction of a density matrix to every factor-th grid point, renormalized.
inline DensityMatrix decimate(const DensityMatrix& rho, std::size_t factor) {
  const GridSpec cg = decimated_grid(rho.grid, factor);
  const auto n = static_cast<Eigen::Index>(cg.size());
  const auto f = static_cast<Eigen::Index>(factor);
  CMatrix m(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) m(a, b) = rho.matrix(a * f, b * f);
  return {cg, detail::normalized_trace(m)};
}

/// rho <- N[B_t rho B_t^dagger] with B_t = (1 - t) + t G^{-1} R(rho),
/// R = sum_j (f_j / p_j) Pi_j, G = sum_j Pi_j. t = 1 is the plain R rho R
/// step; each iteration tries twice the last accepted t (capped at max_step)
/// and halves it until the log-likelihood does not decrease.
inline MLReport ml_reconstruct(const CountDataset& data, const MLConfig& cfg, const GridSpec& grid,
                               const MLObserver& observer = {}) {
  cfg.validate();
  std::size_t factor = 1;
  if (cfg.dim != 0 && cfg.dim != grid.size()) {
    if (cfg.dim > grid.size() || grid.size() % cfg.dim != 0)
      throw ValidationError("ml: dim must divide the forward grid size");
    factor = grid.size() / cfg.dim;
    if ((factor & (factor - 1)) != 0) throw ValidationError("ml: decimation factor must be a power of two");
  }
  const GridSpec g = factor == 1 ? grid : decimated_grid(grid, factor);
  const auto fr = detail::frequencies(data, cfg.use_aux);
  const DisplacementBank bank(g, fr.settings, data.aux_shift);
  const CMatrix Ginv = detail::hermitian_inverse(bank.weighted_povm_sum(RVector::Ones(fr.f.size())));

  DensityMatrix rho = DensityMatrix::maximally_mixed(g);
  if (cfg.init == MLInit::supplied) {
    if (!(cfg.initial->grid == g)) throw DimensionError("ml: initial state grid differs from the reconstruction grid");
    rho = *cfg.initial;
  }

  MLReport rep;
  rep.decimation = factor;
  RVector p = bank.probabilities(rho.matrix);
  double ll = detail::normalized_log_likelihood(fr.f, p);
  rep.log_likelihood.push_back(ll);
  double lambda = cfg.dilution;
  std::size_t quiet = 0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    const double sp = p.sum();
    RVector w(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) w[j] = fr.f[j] > 0.0 ? fr.f[j] * sp / std::max(p[j], 1e-300) : 0.0;
    const CMatrix B = Ginv * bank.weighted_povm_sum(w);
    const auto n = B.rows();

    bool accepted = false;
    CMatrix next;
    RVector pn;
    double lln = ll;
    for (double t = std::min(2.0 * lambda, cfg.max_step); t > 1e-10; t *= 0.5) {
      const CMatrix Bt = (1.0 - t) * CMatrix::Identity(n, n) + t * B;
      next = detail::normalized_trace(Bt * rho.matrix * Bt.adjoint());
      pn = bank.probabilities(next);
      lln = detail::normalized_log_likelihood(fr.f, pn);
      if (lln >= ll) {
        accepted = true;
        lambda = t;
        break;
      }
    }
    if (!accepted) {
      rep.converged = true;
      rep.note = "no ascent step found; stationary to working precision";
      break;
    }
    const double change = std::abs(lln - ll) / std::max(std::abs(ll), 1e-300);
    rho.matrix = next;
    p = pn;
    ll = lln;
    rep.log_likelihood.push_back(ll);
    rep.iterations = it;
    if (observer) observer(it, rho, ll);
    quiet = change < cfg.tol ? quiet + 1 : 0;
    if (quiet >= cfg.patience) {
      rep.converged = true;
      break;
    }
  }
  rep.state = rho;
  rep.final_dilution = lambda;
  const double sp = p.sum();
  double kl = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    if (fr.f[j] > 0.0) kl += fr.f[j] * std::log(fr.f[j] * sp / std::max(p[j], 1e-300));
  rep.kl = std::max(kl, 0.0);
  return rep;
}

inline WignerGrid wigner_of_ml(const MLReport& report, const WignerSpec& out) {
  return wigner_of_state(report.state, out);
}

}  // namespace nwt
