#include <gtest/gtest.h>

#include <random>

#include <nwt/ml.hpp>

using namespace nwt;

namespace {

std::vector<double> span(double lo, double hi, std::size_t n) { return Lattice1D::span(lo, hi, n).values(); }

DensityMatrix random_density(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  const auto n = static_cast<Eigen::Index>(g.size());
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(n01(rng), n01(rng));
  CMatrix m = a * a.adjoint();
  return {g, m / m.trace().real()};
}

// sum_j f_j log(f_j / p_j) with both sides normalized, p_j from explicit POVM matrices
double brute_kl(const DensityMatrix& rho, const CountDataset& d) {
  std::vector<double> f, p;
  for (const auto& r : d.records) {
    f.push_back(static_cast<double>(r.counts));
    p.push_back((povm_element(r.setting, rho.grid, d.aux_shift) * rho.matrix).trace().real());
  }
  double fs = 0, ps = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    fs += f[j];
    ps += p[j];
  }
  double kl = 0;
  for (std::size_t j = 0; j < f.size(); ++j)
    if (f[j] > 0) kl += f[j] / fs * std::log((f[j] / fs) / (p[j] / ps));
  return kl;
}

}  // namespace

TEST(KL, ZeroAtExactFrequencies) {
  const GridSpec g(32, 24.0);
  const DensityMatrix rho = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const CountDataset d = expected_counts(rho, make_schedule(span(-1, 1, 5), span(-2, 2, 5), 1e12, true, 0.0));
  EXPECT_NEAR(kl_divergence(rho, d), 0.0, 1e-12);
  EXPECT_GT(kl_divergence(DensityMatrix::maximally_mixed(g), d), 1e-3);
}

TEST(KL, MatchesBruteForceSum) {
  const GridSpec g(32, 24.0);
  const DensityMatrix truth = density_from_pure(make_gaussian(1.0, 0.5, 0.0, g));
  const CountDataset d = simulate_counts(truth, make_schedule(span(-1.5, 1.5, 6), span(-3, 3, 6), 1e3, true, 0.0), 8);
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(g);
  EXPECT_NEAR(kl_divergence(mixed, d), brute_kl(mixed, d), 1e-12);
  EXPECT_NEAR(kl_divergence(truth, d), brute_kl(truth, d), 1e-12);
}

TEST(KL, VanishingModelProbabilityIsAnError) {
  const GridSpec g(16, 16.0);
  CMatrix m = CMatrix::Zero(16, 16);
  m(9, 9) = 1.0;  // point mass at x = dx
  const DensityMatrix rho{g, m};
  CountDataset d;
  d.records = {{{g.p_max(), 0.0, false, 10.0}, 3}, {{0.0, 0.0, false, 10.0}, 10}};
  EXPECT_THROW(kl_divergence(rho, d), DataError);
}

TEST(FixedPoint, TruthIsStationaryUnderGaugedMap) {
  // exact frequencies make R = G, so G^{-1} R is the identity (8-point toy by explicit matrices)
  const GridSpec g(8, 8.0);
  const DensityMatrix rho = random_density(g, 2);
  std::vector<KickSetting> ks;
  for (double u : span(-1.5, 1.5, 4))
    for (double v : span(-3, 3, 4)) ks.push_back({u, v, false, 1.0});
  CMatrix G = CMatrix::Zero(8, 8), R = CMatrix::Zero(8, 8);
  std::vector<double> p;
  for (const auto& k : ks) p.push_back((povm_element(k, g, 0.0) * rho.matrix).trace().real());
  double ps = 0;
  for (double x : p) ps += x;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const CMatrix P = povm_element(ks[j], g, 0.0);
    G += P;
    R += ((p[j] / ps) / (p[j] / ps)) * P;
  }
  const CMatrix B = G.inverse() * R;
  EXPECT_LT((B - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);

  CountDataset d;
  for (std::size_t j = 0; j < ks.size(); ++j) d.records.push_back({ks[j], std::llround(p[j] * 1e15)});
  MLConfig cfg;
  cfg.init = MLInit::supplied;
  cfg.initial = rho;
  cfg.max_iter = 3;
  const MLReport rep = ml_reconstruct(d, cfg, g);
  EXPECT_LT((rep.state.matrix - rho.matrix).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ML, NoiselessGaussianFidelity) {
  const GridSpec g(64, 32.0);
  const DensityMatrix truth = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const CountDataset d = expected_counts(truth, make_schedule(span(-4, 4, 50), span(-8, 8, 50), 1e15, false, 0.0));
  MLConfig cfg;
  cfg.tol = 1e-13;
  const MLReport rep = ml_reconstruct(d, cfg, g);
  EXPECT_GE(fidelity(truth, rep.state), 0.999);
  EXPECT_LE(rep.iterations, 2000u);
}

TEST(ML, PhysicalAndMonotone) {
  const GridSpec g(32, 24.0);
  const DensityMatrix truth = density_from_pure(make_cat(make_gaussian(1.0, 2.5, 0.0, g), 5.0));
  const CountDataset d = simulate_counts(truth, make_schedule(span(-2, 2, 16), span(-8, 8, 16), 1e3, false, 0.0), 3);
  double worst_eig = 0.0, worst_herm = 0.0, worst_trace = 0.0;
  const MLReport rep = ml_reconstruct(d, MLConfig{}, g, [&](std::size_t, const DensityMatrix& r, double) {
    worst_eig = std::min(worst_eig, r.eigenvalues().minCoeff());
    worst_herm = std::max(worst_herm, r.hermiticity_error());
    worst_trace = std::max(worst_trace, std::abs(r.trace() - 1.0));
  });
  EXPECT_GT(worst_eig, -1e-10);
  EXPECT_LT(worst_herm, 1e-10);
  EXPECT_LT(worst_trace, 1e-10);
  ASSERT_EQ(rep.log_likelihood.size(), rep.iterations + 1);
  for (std::size_t k = 1; k < rep.log_likelihood.size(); ++k)
    EXPECT_GE(rep.log_likelihood[k] - rep.log_likelihood[k - 1], -1e-12);
  EXPECT_NEAR(rep.kl, kl_divergence(rep.state, d, false), 1e-10);
}

TEST(ML, FlatDataKeepsMaximallyMixed) {
  // far-out kicks see Gamma ~ 0 for any localized state: flat data, no preferred state
  const GridSpec g(32, 24.0);
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(g);
  const CountDataset d = expected_counts(mixed, make_schedule(span(2.0, 3.5, 4), span(5, 11, 4), 1e6, false, 0.0));
  MLConfig cfg;
  cfg.max_iter = 200;
  const MLReport rep = ml_reconstruct(d, cfg, g);
  EXPECT_GE(fidelity(mixed, rep.state), 0.99);
}

TEST(ML, DecimationAndConfigErrors) {
  const GridSpec g(64, 32.0);
  const DensityMatrix truth = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const CountDataset d = expected_counts(truth, make_schedule(span(-2, 2, 12), span(-6, 6, 12), 1e9, false, 0.0));
  MLConfig cfg;
  cfg.dim = 32;
  cfg.tol = 1e-10;
  const MLReport rep = ml_reconstruct(d, cfg, g);
  EXPECT_EQ(rep.decimation, 2u);
  EXPECT_EQ(rep.state.dim(), 32u);
  EXPECT_GE(fidelity(decimate(truth, 2), rep.state), 0.99);

  MLConfig bad;
  bad.dim = 48;
  EXPECT_THROW(ml_reconstruct(d, bad, g), ValidationError);
  bad.dim = 0;
  bad.dilution = 0.0;
  EXPECT_THROW(ml_reconstruct(d, bad, g), ValidationError);
  bad = MLConfig{};
  bad.tol = 0.0;
  EXPECT_THROW(ml_reconstruct(d, bad, g), ValidationError);
  bad = MLConfig{};
  bad.init = MLInit::supplied;
  EXPECT_THROW(ml_reconstruct(d, bad, g), ValidationError);
  EXPECT_THROW(ml_reconstruct(CountDataset{}, MLConfig{}, g), DataError);
}

TEST(ML, NonConvergenceIsAFlag) {
  const GridSpec g(32, 24.0);
  const DensityMatrix truth = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const CountDataset d = simulate_counts(truth, make_schedule(span(-2, 2, 10), span(-6, 6, 10), 1e4, false, 0.0), 1);
  MLConfig cfg;
  cfg.max_iter = 2;
  const MLReport rep = ml_reconstruct(d, cfg, g);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 2u);
}

TEST(ML, WignerOfGaussianReconstruction) {
  const GridSpec g(64, 32.0);
  const DensityMatrix truth = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const CountDataset d = simulate_counts(truth, make_schedule(span(-4, 4, 30), span(-8, 8, 30), 1e5, false, 0.0), 2);
  const MLReport rep = ml_reconstruct(d, MLConfig{}, g);
  const WignerSpec out{Lattice1D::span(-6, 6, 49), Lattice1D::span(-3, 3, 49)};
  const WignerGrid w = wigner_of_ml(rep, out);
  const double F = fidelity(truth, rep.state);
  ASSERT_GE(F, 0.99);
  // |W_a - W_b| <= |a - b|_1 / pi (parity operator has unit norm), |a - b|_1 <= 2 sqrt(1 - F)
  EXPECT_GT(w.values.minCoeff(), -2.0 * std::sqrt(1.0 - F) / pi);
  EXPECT_LT(w.imag_residue, 1e-10);
  EXPECT_LT(relative_l2(w, wigner_of_state(truth, out)), 0.05);
}
