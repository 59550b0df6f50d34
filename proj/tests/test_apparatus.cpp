#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include <nwt/apparatus.hpp>
#include <nwt/radon.hpp>

using namespace nwt;

namespace {

const PhysicalConfig kNeutron{};

DensityMatrix random_state(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-2.0, 2.0), up(-0.5, 0.5), ul(1.0, 1.4), uw(0.1, 1.0);
  std::vector<WavePacket> s;
  std::vector<double> w;
  for (int k = 0; k < 2; ++k) {
    s.push_back(make_gaussian(ul(rng), ux(rng), up(rng), g));
    w.push_back(uw(rng));
  }
  return mixture(s, w);
}

}  // namespace

TEST(Hardware, ZeroFieldGivesZeroKick) {
  const HardwareKick k = kicks_from_hardware(0.0, 3.0, kNeutron);
  EXPECT_EQ(k.dp, 0.0);
  EXPECT_EQ(k.dx, 0.0);
  EXPECT_THROW(kicks_from_hardware(-0.1, 1.0, kNeutron), ValidationError);
}

TEST(Hardware, ReferenceKick) {
  // dp = 2 mu B m / p0, dx = dp L / p0 with p0 = 2 pi hbar / lambda, evaluated by hand
  const double p0 = 2.0 * pi * 1.054571817e-34 / 0.37e-9;
  const double dp = 2.0 * 9.6623651e-27 * 0.1 * 1.67492749804e-27 / p0;
  const HardwareKick k = kicks_from_hardware(0.1, 1.0, kNeutron);
  EXPECT_NEAR(k.dp / dp, 1.0, 1e-12);
  EXPECT_NEAR(k.dx / (dp / p0), 1.0, 1e-12);
  EXPECT_NEAR(k.dp, 1.81e-30, 0.01e-30);
  EXPECT_NEAR(k.dx, 1.01e-6, 0.01e-6);
}

TEST(Hardware, LinearInFieldAndLength) {
  const HardwareKick a = kicks_from_hardware(0.05, 1.0, kNeutron), b = kicks_from_hardware(0.1, 1.0, kNeutron);
  EXPECT_NEAR(b.dp / a.dp, 2.0, 1e-12);
  EXPECT_NEAR(b.dx / a.dx, 2.0, 1e-12);
  const HardwareKick c = kicks_from_hardware(0.05, 3.0, kNeutron);
  EXPECT_NEAR(c.dx / a.dx, 3.0, 1e-12);
  EXPECT_NEAR(c.dp / a.dp, 1.0, 1e-12);
}

TEST(Hardware, AngleDependsOnLengthOnly) {
  for (double L : {0.2, 1.0, 5.0}) {
    const HardwareKick a = to_natural(kicks_from_hardware(0.01, L, kNeutron), kNeutron);
    const HardwareKick b = to_natural(kicks_from_hardware(0.07, L, kNeutron), kNeutron);
    EXPECT_NEAR(quadrature_angle(a.dp, a.dx).theta, quadrature_angle(b.dp, b.dx).theta, 1e-12);
  }
}

TEST(Resolution, ReferenceNumbers) {
  const ResolutionLimits r = resolution_limits(0.1, 1.0, kNeutron);
  EXPECT_NEAR(r.dx_min, 60e-6, 3e-6);
  EXPECT_NEAR(r.dp_min / (1.054571817e-34 * 1e6), 1.0, 0.05);
  // dx_min * dp_max = hbar and dx_max * dp_min = hbar
  const HardwareKick k = kicks_from_hardware(0.1, 1.0, kNeutron);
  EXPECT_NEAR(r.dx_min * k.dp / 1.054571817e-34, 1.0, 1e-12);
  EXPECT_NEAR(r.dp_min * k.dx / 1.054571817e-34, 1.0, 1e-12);
  EXPECT_THROW(resolution_limits(0.0, 1.0, kNeutron), ValidationError);
}

TEST(Physical, MomentumConsistency) {
  EXPECT_NEAR(kNeutron.p0() * kNeutron.wavelength / (2.0 * pi * 1.054571817e-34), 1.0, 1e-12);
  EXPECT_NEAR(kNeutron.aux_shift(), pi / (2.0 * kNeutron.p0_natural()), 1e-15);
  PhysicalConfig bad;
  bad.wavelength = -1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Povm, ZeroKickIsIdentity) {
  const GridSpec g(32, 24.0);
  const CMatrix P = povm_element({0.0, 0.0, false, 1.0}, g, 0.0);
  EXPECT_EQ((P - CMatrix::Identity(32, 32)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Povm, SpectrumInUnitInterval) {
  std::mt19937_64 rng(17);
  const GridSpec g(32, 24.0);
  std::uniform_real_distribution<double> uu(-g.p_max(), g.p_max()), uv(-12.0, 12.0);
  for (int k = 0; k < 50; ++k) {
    const KickSetting s{uu(rng), uv(rng), k % 2 == 1, 1.0};
    const CMatrix P = povm_element(s, g, 0.0925);
    EXPECT_LT((P - P.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(P, Eigen::EigenvaluesOnly).eigenvalues();
    EXPECT_GT(ev.minCoeff(), -1e-10);
    EXPECT_LT(ev.maxCoeff(), 1.0 + 1e-10);
  }
}

TEST(Povm, AliasingRejected) {
  const GridSpec g(32, 24.0);
  EXPECT_THROW(povm_element({g.p_max() * 1.01, 0.0, false, 1.0}, g, 0.0), AliasingError);
  EXPECT_THROW(povm_element({0.0, 13.0, false, 1.0}, g, 0.0), AliasingError);
}

TEST(Probability, ThreeFormsAgree) {
  std::mt19937_64 rng(23);
  const GridSpec g(32, 24.0);
  std::uniform_real_distribution<double> uu(-1.0, 1.0), uv(-3.0, 3.0);
  for (int k = 0; k < 4; ++k) {
    const DensityMatrix rho = random_state(g, rng);
    for (int j = 0; j < 10; ++j) {
      const KickSetting s{uu(rng), uv(rng), false, 1.0};
      const double trace_form = (povm_element(s, g, 0.0) * rho.matrix).trace().real();
      const double gamma_form =
          0.5 + 0.5 * std::real(gamma_of_state(rho, s.dp, s.dx) * std::exp(0.5 * I * s.dp * s.dx));
      const QuadratureCoordinates q = quadrature_angle(s.dp, s.dx);
      const double quad_form = 0.5 + 0.5 * std::real(quadrature_characteristic(rho, q.theta, q.omega));
      EXPECT_NEAR(trace_form, gamma_form, 1e-10);
      EXPECT_NEAR(trace_form, quad_form, 1e-10);
      EXPECT_NEAR(detect_probability(rho, s, 0.0), trace_form, 1e-12);
    }
  }
}

TEST(Probability, LimitsAndBatch) {
  const GridSpec g(64, 32.0);
  const DensityMatrix rho = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  EXPECT_NEAR(detect_probability(rho, {0.0, 0.0, false, 1.0}, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(detect_probability(rho, {5.5, 14.0, false, 1.0}, 0.0), 0.5, 1e-6);
  // the aux variant at zero kick sees Re{i} = 0
  EXPECT_NEAR(detect_probability(rho, {0.0, 0.0, true, 1.0}, 0.0), 0.5, 1e-12);
  const std::vector<KickSetting> ss{{0.3, 1.0, false, 1}, {0.3, 1.0, true, 1}, {-1.2, 2.5, false, 1}};
  const RVector p = DisplacementBank(g, ss, 0.09).probabilities(rho.matrix);
  for (std::size_t j = 0; j < ss.size(); ++j)
    EXPECT_NEAR(p[static_cast<Eigen::Index>(j)], (povm_element(ss[j], g, 0.09) * rho.matrix).trace().real(), 1e-12);
  const RVector w = RVector::LinSpaced(3, 0.5, 2.0);
  CMatrix brute = CMatrix::Zero(64, 64);
  for (std::size_t j = 0; j < ss.size(); ++j) brute += w[static_cast<Eigen::Index>(j)] * povm_element(ss[j], g, 0.09);
  EXPECT_LT((DisplacementBank(g, ss, 0.09).weighted_povm_sum(w) - brute).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Schedule, CartesianProduct) {
  std::vector<double> dp(50), dx(50);
  for (int i = 0; i < 50; ++i) {
    dp[i] = 0.1 * i;
    dx[i] = 0.2 * i;
  }
  const Schedule s = make_schedule(dp, dx, 1e4, true, 0.1);
  EXPECT_EQ(s.settings.size(), 5000u);
  std::set<std::tuple<double, double, bool>> keys;
  for (const auto& k : s.settings) keys.insert(k.key());
  EXPECT_EQ(keys.size(), 5000u);
  EXPECT_EQ(make_schedule({1.0}, {2.0}, 1.0, false, 0.0).settings.size(), 1u);
  EXPECT_THROW(make_schedule({}, {1.0}, 1.0, false, 0.0), ValidationError);
  EXPECT_THROW(make_schedule({1.0, 1.0}, {1.0}, 1.0, false, 0.0), ValidationError);
  EXPECT_THROW(make_schedule({1.0}, {1.0}, 0.0, false, 0.0), ValidationError);
}

TEST(Schedule, HardwareListsMergeZeroField) {
  const Schedule s = make_hardware_schedule({0.0, 0.05}, {0.5, 1.0, 2.0}, kNeutron, 100.0, false);
  EXPECT_EQ(s.settings.size(), 4u);  // B = 0 collapses onto a single zero kick
  EXPECT_NEAR(s.aux_shift, kNeutron.aux_shift(), 1e-15);
}

TEST(Simulate, DeterministicAndLawOfLargeNumbers) {
  const GridSpec g(64, 32.0);
  const DensityMatrix rho = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const Schedule s = make_schedule({0.0, 0.5, 1.0}, {0.0, 1.0, 2.0}, 1e7, true, 0.0);
  const CountDataset a = simulate_counts(rho, s, 99), b = simulate_counts(rho, s, 99);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, simulate_counts(rho, s, 100));
  const RVector p = schedule_probabilities(rho, s);
  for (std::size_t j = 0; j < s.settings.size(); ++j) {
    const double mean = 1e7 * p[static_cast<Eigen::Index>(j)];
    EXPECT_LE(std::abs(static_cast<double>(a.records[j].counts) - mean), 3.0 * std::sqrt(mean) + 1.0);
  }
}

TEST(Simulate, ZeroKickCountsArePoisson) {
  const GridSpec g(32, 24.0);
  const DensityMatrix rho = density_from_pure(make_gaussian(1.0, 0.0, 0.0, g));
  const Schedule s = make_schedule({0.0}, {0.0}, 400.0, false, 0.0);
  double sum = 0.0, sq = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const double c = static_cast<double>(simulate_counts(rho, s, static_cast<std::uint64_t>(r)).records[0].counts);
    sum += c;
    sq += c * c;
  }
  const double mean = sum / reps, var = sq / reps - mean * mean;
  EXPECT_LT(std::abs(mean - 400.0), 4.0 * std::sqrt(400.0));
  EXPECT_NEAR(var / 400.0, 1.0, 0.25);
}

TEST(Dataset, CanonicalSortIsOrderInsensitive) {
  CountDataset a;
  a.records = {{{1.0, 2.0, true, 1.0}, 3}, {{0.0, 0.0, false, 1.0}, 1}, {{1.0, 2.0, false, 1.0}, 2}};
  CountDataset b = a;
  std::reverse(b.records.begin(), b.records.end());
  a.sort_canonical();
  b.sort_canonical();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.total_counts(), 6);
}
