#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "detphoton/analytic_model.hpp"
#include "detphoton/errors.hpp"
#include "detphoton/fock_oracle.hpp"
#include "detphoton/sweep.hpp"

using namespace detphoton;
using namespace detphoton::fock;

namespace {

double rel(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

std::vector<double> grid(double lo, double hi, int n, bool log) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    v.push_back(log ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
  }
  return v;
}

}  // namespace

TEST(TmsDistribution, Vacuum) {
  const PhotonNumberDist d = tms_distribution(0.0);
  EXPECT_EQ(d.probs[0], 1.0);
  for (int n = 1; n <= d.n_max(); ++n) EXPECT_EQ(d.probs[n], 0.0);
}

TEST(TmsDistribution, NormalizedAndGeometric) {
  for (double nbar : {1e-4, 0.0376, 0.2, 1.0}) {
    const PhotonNumberDist d = tms_distribution(nbar, required_max_number(nbar));
    EXPECT_LE(d.total(), 1.0 + 1e-15);
    EXPECT_GE(d.total(), 1.0 - kTailBound);
    EXPECT_NEAR(d.probs[1] / d.probs[0], nbar / (1 + nbar), 1e-15);
    EXPECT_NEAR(d.mean(), nbar, 1e-11 * std::max(1.0, nbar));
  }
}

TEST(TmsDistribution, RatioMatchesTanhSquared) {
  const double nbar = mean_excitation(0.003, 0.08);
  const double chi = std::asinh(std::sqrt(nbar));
  const PhotonNumberDist d = tms_distribution(nbar);
  EXPECT_NEAR(d.probs[1] / d.probs[0], std::pow(std::tanh(chi), 2), 1e-15);
}

TEST(TmsDistribution, TruncationError) {
  EXPECT_THROW(tms_distribution(5.0, 64), TruncationError);
  try {
    tms_distribution(5.0, 64);
  } catch (const TruncationError& e) {
    EXPECT_GT(e.tail(), kTailBound);
  }
  EXPECT_NO_THROW(tms_distribution(5.0, required_max_number(5.0)));
  EXPECT_THROW(tms_distribution(-1.0, 64), DomainError);
  EXPECT_THROW(tms_distribution(0.1, 0), DomainError);
}

TEST(ConditionalDistribution, NoVacuumAndNormalized) {
  for (double p1 : {1e-4, 0.003, 0.1}) {
    for (double eta_s : {0.01, 0.08, 1.0}) {
      const double nbar = mean_excitation(p1, eta_s);
      const PhotonNumberDist d =
          conditional_distribution(nbar, eta_s, required_max_number(nbar, 64, p1));
      EXPECT_EQ(d.probs[0], 0.0);
      EXPECT_NEAR(d.total(), 1.0, 1e-12);
      EXPECT_GE(d.mean(), 1.0);
    }
  }
}

TEST(ConditionalDistribution, PerfectHeraldingIsRenormalizedThermalTail) {
  const double nbar = 0.3;
  const PhotonNumberDist c = conditional_distribution(nbar, 1.0);
  const PhotonNumberDist t = tms_distribution(nbar);
  const double tail = 1.0 - t.probs[0];
  for (int n = 1; n < 20; ++n) EXPECT_NEAR(c.probs[n], t.probs[n] / tail, 1e-15);
}

TEST(ConditionalDistribution, SignalBackgroundLeavesVacuumWeight) {
  const PhotonNumberDist d = conditional_distribution(0.0376, 0.08, 64, 1e-3);
  EXPECT_GT(d.probs[0], 0.0);
  EXPECT_NEAR(d.total(), 1.0, 1e-12);
}

TEST(ApplyLoss, Commutes) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    PhotonNumberDist d;
    d.probs.resize(30);
    double sum = 0.0;
    for (double& p : d.probs) sum += (p = u(gen));
    for (double& p : d.probs) p /= sum;
    const double a = u(gen), b = u(gen);
    const PhotonNumberDist two = apply_loss(apply_loss(d, a), b);
    const PhotonNumberDist one = apply_loss(d, a * b);
    for (int n = 0; n <= d.n_max(); ++n) EXPECT_NEAR(two.probs[n], one.probs[n], 1e-14);
  }
}

TEST(DetectionProbs, Examples) {
  const PhotonNumberDist thermal = tms_distribution(0.2);
  const DetectionProbs zero = detection_probs(thermal, 0.0);
  EXPECT_EQ(zero.click_one, 0.0);
  EXPECT_EQ(zero.coincidence, 0.0);

  PhotonNumberDist single;
  single.probs = {0.0, 1.0};
  const DetectionProbs s = detection_probs(single, 0.3);
  EXPECT_NEAR(s.click_one, 0.15, 1e-16);
  EXPECT_EQ(s.coincidence, 0.0);
}

TEST(DetectionProbs, UnconditionalOracleExample) {
  // n = 0.2 thermal, eta = 0.1: p_k = 0.01 / 1.01
  const DetectionProbs d = detection_probs(tms_distribution(0.2), 0.1);
  EXPECT_NEAR(d.click_one, 0.00990099009901, 1e-13);
}

TEST(DetectionProbs, ReferenceParametersMatchClosedForms) {
  const double p1 = 0.003, eta_s = 0.08;
  const PhotonNumberDist d = conditional_distribution(mean_excitation(p1, eta_s), eta_s);
  for (double eta : {0.0375, 0.075, 0.3, 1.0}) {
    const DetectionProbs o = detection_probs(d, eta);
    const double p2 = pi_click(eta / 2, p1, eta_s);
    EXPECT_LT(rel(o.click_one, p2), 1e-10);
    EXPECT_LT(rel(o.coincidence, 2 * p2 - pi_click(eta, p1, eta_s)), 1e-10);
  }
}

// 5 x 5 x 5 grid with n_max raised where the thermal tail needs it. The
// fixed-64 version of this check is in the acceptance binary.
TEST(OracleEquivalence, GridWithSufficientTruncation) {
  for (double p1 : grid(1e-4, 0.3, 5, true)) {
    for (double eta_s : grid(0.01, 1.0, 5, true)) {
      for (double eta : grid(0.0, 1.0, 5, false)) {
        SourceParams sp;
        sp.p1 = p1;
        sp.eta_s = eta_s;
        sp.eta_i0 = std::max(eta, 1e-300);
        sp.tau_c = std::numeric_limits<double>::infinity();
        if (eta == 0.0) continue;  // covered below
        const ConditionalProbs a = conditional_probs(0.0, sp);
        const ConditionalProbs o = oracle_conditional_probs(0.0, sp);
        EXPECT_LT(rel(a.p2_1, o.p2_1), 1e-10) << p1 << " " << eta_s << " " << eta;
        EXPECT_LT(rel(a.p23_1, o.p23_1), 1e-10) << p1 << " " << eta_s << " " << eta;
      }
      const PhotonNumberDist d = conditional_distribution(
          mean_excitation(p1, eta_s), eta_s, required_max_number(mean_excitation(p1, eta_s), 64, p1));
      EXPECT_EQ(detection_probs(d, 0.0).click_one, pi_click(0.0, p1, eta_s));
    }
  }
}

TEST(OracleEquivalence, BackgroundAndProtocol) {
  SourceParams sp;
  sp.bg_idler = 2e-4;
  sp.bg_signal = 1e-4;
  sp.read_factor = 2.0 / 3.0;
  for (double tau : {0.0, 20e-6}) {
    const ConditionalProbs a = conditional_probs(tau, sp);
    const ConditionalProbs o = oracle_conditional_probs(tau, sp);
    EXPECT_LT(rel(a.p2_1, o.p2_1), 1e-10);
    EXPECT_LT(rel(a.p23_1, o.p23_1), 1e-10);
    const UnconditionalProbs ua = unconditional_probs(sp, tau);
    const UnconditionalProbs uo = oracle_unconditional_probs(sp, tau);
    EXPECT_LT(rel(ua.p2, uo.p2), 1e-10);
    EXPECT_LT(rel(ua.p23, uo.p23), 1e-10);
    EXPECT_LT(rel(*ua.g_si, *uo.g_si), 1e-10);
  }
  for (int n : {1, 10, 150}) {
    const ProtocolObservables a = protocol_observables(sp, n);
    const ProtocolObservables o = oracle_protocol_observables(sp, n);
    EXPECT_LT(rel(a.P2, o.P2), 1e-10);
    EXPECT_LT(rel(a.P23, o.P23), 1e-10);
    EXPECT_LT(rel(*a.g2, *o.g2), 1e-10);
  }
}

TEST(RequiredMaxNumber, Floors) {
  EXPECT_EQ(required_max_number(0.01), kDefaultMaxNumber);
  EXPECT_GT(required_max_number(42.9), 64);
  EXPECT_EQ(required_max_number(0.01, 8), 8);
}
