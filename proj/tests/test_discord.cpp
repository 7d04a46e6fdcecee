#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cvdiscord/discord.hpp"
#include "oracles.hpp"

using namespace cvdiscord;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Povm, CompletenessOnTheQubitSpan) {
  for (double t : {0.0, 0.7, kPi / 2, 2.9})
    for (double p : {0.0, 1.3, 4.0}) {
      const QubitPOVM m = displaced_povm(t, p, 0.8);
      const Eigen::Vector2cd u = m.vector(0), v = m.vector(1);
      EXPECT_NEAR(std::abs(u.dot(v)), 0.0, 1e-15);
      EXPECT_NEAR(u.norm(), 1.0, 1e-15);
      const CMatrix sum = m.element(0, 20) + m.element(1, 20);
      const CMatrix e = displaced_qubit_basis(20, 0.8);
      EXPECT_LT((sum - e * e.adjoint()).norm(), 1e-10);
      EXPECT_LT((m.element(0, 20) * m.element(0, 20) - m.element(0, 20)).norm(), 1e-10);
    }
  EXPECT_THROW(displaced_povm(0, 0, 0).vector(2), InvalidArgument);
}

TEST(Povm, CanonicalAngles) {
  const auto a = canonical_bloch_angles(kPi / 2, 3 * kPi / 2);
  EXPECT_NEAR(a[0], kPi / 2, 1e-15);
  EXPECT_NEAR(a[1], kPi / 2, 1e-15);
  const auto b = canonical_bloch_angles(-0.3, 0.2);
  EXPECT_NEAR(b[0], kPi - 0.3, 1e-15);
  EXPECT_NEAR(b[1], 0.2, 1e-15);
  // Swapping outcomes leaves the conditional entropy unchanged.
  const QubitPairState q = scattering_mixture(ChannelKind::PAC, 1.0, 0.6);
  EXPECT_NEAR(conditional_entropy(q, displaced_povm(0.4, 4.0, q.alpha_b)),
              conditional_entropy(q, displaced_povm(kPi - 0.4, 4.0 - kPi, q.alpha_b)), 1e-14);
}

TEST(ConditionalModel, BranchesSumToReducedState) {
  const QubitPairState q = scattering_mixture(ChannelKind::PAC, 1.2, 0.6);
  const ConditionalModel m = conditional_model(q);
  const QubitPOVM povm = displaced_povm(1.1, 0.4, q.alpha_b);
  CMatrix ra = CMatrix::Zero(2, 2);
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a)
      for (int a2 = 0; a2 < 2; ++a2) ra(a, a2) += q.rho(2 * a + b, 2 * a2 + b);
  EXPECT_LT((m.branch(povm, 0) + m.branch(povm, 1) - ra).norm(), 1e-14);
  const auto p = m.probabilities(povm);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-14);
  EXPECT_EQ(m.leakage(), 0.0);
}

TEST(ConditionalModel, FockAndQubitPathsAgree) {
  const QubitPairState q = scattering_mixture(ChannelKind::PAC, 1.0, 0.7);
  const HilbertSpec s = channel_space(1.0);
  const DensityMatrix rho = to_fock(q, s);
  const ConditionalModel fock = conditional_model(rho, q.alpha_b);
  EXPECT_LT(fock.leakage(), 1e-9);
  for (double t : {0.3, kPi / 2})
    for (double p : {0.0, kPi / 2}) {
      const QubitPOVM m = displaced_povm(t, p, q.alpha_b);
      EXPECT_NEAR(conditional_entropy(rho, m), conditional_entropy(q, m), 1e-9);
    }
}

TEST(ConditionalModel, LeakageIsReported) {
  // Mode B in |2>, outside the displaced-qubit span at alpha = 0.
  const HilbertSpec s({12, 12});
  CVector v = CVector::Zero(144);
  v(2) = 1.0;
  const DensityMatrix rho = DensityMatrix::from_ket(Ket(s, v));
  EXPECT_THROW(conditional_model(rho, 0.0), TruncationError);
  const ConditionalModel m = conditional_model(rho, 0.0, 2.0);
  EXPECT_NEAR(m.leakage(), 1.0, 1e-12);
}

TEST(ClosedForms, DpcMatchesSpectralOracle) {
  for (int k = 1; k < 20; ++k) {
    const double eta = 0.05 * k;
    EXPECT_NEAR(discord_dp_closed(eta), oracle::dp_discord(eta), 1e-12) << eta;
    EXPECT_NEAR(discord_dp_from_variance((1 + eta) / 2), discord_dp_closed(eta), 1e-10) << eta;
  }
}

TEST(ClosedForms, EndpointsAndLimitBranches) {
  EXPECT_EQ(discord_dp_closed(1.0), 1.0);
  EXPECT_EQ(discord_dp_closed(0.0), 0.0);
  EXPECT_EQ(discord_dp_from_variance(1.0), 1.0);
  EXPECT_EQ(discord_dp_from_variance(0.5), 0.0);
  EXPECT_NEAR(discord_dp_closed(1e-9), oracle::dp_discord(1e-9), 1e-12);
  EXPECT_NEAR(discord_dp_closed(1 - 1e-9), oracle::dp_discord(1 - 1e-9), 1e-8);
  EXPECT_THROW(discord_dp_closed(1.1), InvalidArgument);
  EXPECT_THROW(discord_dp_from_variance(0.4), InvalidArgument);
  EXPECT_THROW(discord_dp_from_variance(std::nan("")), InvalidArgument);
}

TEST(ClosedForms, FitValuesAndDomain) {
  EXPECT_NEAR(discord_pa_fit(0.0, 1.0), 0.997938, 1e-6);
  EXPECT_THROW(discord_pa_fit(11.0, 0.8), InvalidArgument);
  EXPECT_THROW(discord_pa_fit(1.0, 0.4), InvalidArgument);
  for (double a : {0.0, 2.0, 5.0})
    for (double e : {0.5, 0.75, 1.0}) EXPECT_TRUE(std::isfinite(discord_pa_fit(a, e)));
}

TEST(ClosedForms, FitTracksNumericOnGrid) {
  for (double a0 : {0.0, 1.0, 2.0, 3.0})
    for (double e : {0.5, 0.75, 1.0}) {
      const double numeric = discord_numeric(scattering_mixture(ChannelKind::PAC, a0, e)).value;
      EXPECT_NEAR(discord_pa_fit(a0, e), numeric, 0.05) << a0 << " " << e;
    }
}

TEST(ClosedForms, FitNearDpcAtZeroAmplitude) {
  for (double e : {0.5, 0.75, 1.0}) EXPECT_NEAR(discord_pa_fit(0.0, e), discord_dp_closed(e), 0.05) << e;
}

TEST(Variance, ClosedFormsMatchMomentOracle) {
  for (ChannelKind k : {ChannelKind::DPC, ChannelKind::PAC})
    for (double a0 : {0.0, 1.5})
      for (double eta : {0.6, 1.0})
        for (double sigma : {0.0, 0.7})
          for (double lam : {0.0, 1.0, kPi / 2}) {
            const HilbertSpec s({22, 22});
            const DensityMatrix rho = noisy_channel_state(k, a0, eta, sigma, s).state;
            EXPECT_NEAR(quadrature_variance(k, lam, a0, eta, sigma), oracle::variance_a(rho.matrix(), 22, 22, lam), 1e-7)
                << to_string(k) << " " << a0 << " " << eta << " " << sigma << " " << lam;
          }
}

TEST(Discord, DpcNumericEqualsClosedFormForAnyAmplitude) {
  for (double a0 : {0.0, 2.0})
    for (double eta : {0.2, 0.5, 0.9}) {
      const DiscordResult r = discord_numeric(scattering_mixture(ChannelKind::DPC, a0, eta));
      EXPECT_NEAR(r.value, discord_dp_closed(eta), 1e-7);
      EXPECT_NEAR(r.theta, kPi / 2, 1e-3);
      EXPECT_EQ(r.phi, 0.0);
      EXPECT_LT(r.phi_spread, 1e-8);
      EXPECT_NEAR(r.identity_residual(), 0.0, 1e-12);
      EXPECT_NEAR(r.probabilities[0], 0.5, 1e-6);
    }
}

TEST(Discord, PacFrozenValues) {
  const struct {
    double a0, eta, value;
  } cases[] = {{1.0, 0.7, oracle::frozen::kPacDiscordA1Eta07},
               {2.0, 0.8, oracle::frozen::kPacDiscordA2Eta08},
               {0.5, 0.9, oracle::frozen::kPacDiscordA05Eta09},
               {3.0, 0.5, oracle::frozen::kPacDiscordA3Eta05}};
  for (const auto &c : cases) {
    const DiscordResult r = discord_numeric(scattering_mixture(ChannelKind::PAC, c.a0, c.eta));
    EXPECT_NEAR(r.value, c.value, 1e-7) << c.a0 << " " << c.eta;
    EXPECT_NEAR(r.theta, kPi / 2, 1e-2);
    EXPECT_NEAR(r.phi, kPi / 2, 1e-2);
  }
}

TEST(Discord, ProductStateHasNone) {
  const QubitPairState q = scattering_mixture(ChannelKind::PAC, 1.0, 0.0);
  EXPECT_NEAR(discord_numeric(q).value, 0.0, 1e-8);
  EXPECT_NEAR(discord_numeric(scattering_mixture(ChannelKind::DPC, 1.0, 0.0)).value, 0.0, 1e-8);
}

TEST(Discord, Deterministic) {
  const QubitPairState q = scattering_mixture(ChannelKind::PAC, 1.3, 0.75);
  const DiscordResult a = discord_numeric(q), b = discord_numeric(q);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.phi, b.phi);
}

TEST(Discord, MonotoneInTransmittance) {
  for (ChannelKind k : {ChannelKind::DPC, ChannelKind::PAC}) {
    double prev = -1.0;
    for (int i = 0; i <= 8; ++i) {
      const double v = channel_discord(k, 1.0, 0.2 + 0.1 * i, 0.0).discord.value;
      EXPECT_GE(v, prev - 1e-6);
      prev = v;
    }
  }
}

TEST(ChannelDiscord, FockPathAgreesWithQubitPathAtSmallNoise) {
  const ChannelDiscord exact = channel_discord(ChannelKind::PAC, 1.0, 0.8, 0.0);
  const ChannelDiscord noisy = channel_discord(ChannelKind::PAC, 1.0, 0.8, 1e-4);
  EXPECT_EQ(exact.truncation_dim, 2);
  EXPECT_GT(noisy.truncation_dim, 2);
  EXPECT_NEAR(noisy.discord.value, exact.discord.value, 1e-3);
  EXPECT_EQ(noisy.phase_rule, "gauss-hermite");
}

TEST(ChannelDiscord, FrozenNoisyValue) {
  const ChannelDiscord r = channel_discord(ChannelKind::DPC, 0.0, 1.0, 1.5);
  EXPECT_NEAR(r.discord.value, oracle::frozen::kDpcDiscordN0Sigma15, 1e-6);
}

TEST(Parametric, SweepShapeAndFlags) {
  const auto pts = qd_variance_parametric(ChannelKind::DPC, 1.0, {0.0, 0.5, 1.0}, {0.0});
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_TRUE(pts[0].limit_flag);
  EXPECT_FALSE(pts[1].limit_flag);
  EXPECT_TRUE(pts[2].limit_flag);
  for (const auto &p : pts) {
    EXPECT_NEAR(p.variance, (1 + p.eta) / 2, 1e-12);
    EXPECT_NEAR(p.discord, discord_dp_from_variance(p.variance), 1e-7);
  }
  EXPECT_THROW(qd_variance_parametric(ChannelKind::DPC, 1.0, {}, {0.0}), InvalidArgument);
}
