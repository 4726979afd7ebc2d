#include <gtest/gtest.h>

#include <random>

#include "survplane/head.hpp"

using namespace survplane;

namespace {

HyperplaneHead make_head(std::vector<double> w, double beta, double alpha_eff,
                         double gamma_eff = 1.0) {
  HyperplaneHead head;
  head.w = std::move(w);
  head.beta = beta;
  head.alpha_raw = inverse_softplus(alpha_eff);
  head.gamma_raw = inverse_softplus(gamma_eff);
  return head;
}

}  // namespace

TEST(Softplus, InverseRoundTrip) {
  for (double y : {1e-3, 0.1, 1.0, 5.0, 40.0})
    EXPECT_NEAR(softplus(inverse_softplus(y)), y, 1e-9 * y + 1e-12);
}

TEST(Risk, ZeroWeights) {
  const HyperplaneHead head = make_head({0.0, 0.0}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(risk(head, {3.0, -5.0}), 0.0);
}

TEST(Risk, BasisProjection) {
  const HyperplaneHead head = make_head({1.0, 0.0}, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(risk(head, {3.0, 5.0}), 3.0);
}

TEST(Risk, DotProduct) {
  // 0.5*2 - 0.25*4 + 2*1 = 2
  const HyperplaneHead head = make_head({0.5, -0.25, 2.0}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(risk(head, {2.0, 4.0, 1.0}), 2.0);
}

TEST(Risk, DimensionMismatchThrows) {
  const HyperplaneHead head = make_head({1.0, 2.0}, 0.0, 1.0);
  EXPECT_THROW(risk(head, {1.0}), std::invalid_argument);
}

TEST(Risk, LinearInEmbedding) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    HyperplaneHead head = make_head({u(gen), u(gen), u(gen), u(gen)}, u(gen), 1.0);
    std::vector<double> f1(4), f2(4), combo(4);
    const double a = u(gen);
    for (int i = 0; i < 4; ++i) {
      f1[i] = u(gen);
      f2[i] = u(gen);
      combo[i] = a * f1[i] + f2[i];
    }
    EXPECT_NEAR(risk(head, combo), a * risk(head, f1) + risk(head, f2), 1e-12);
  }
}

TEST(BiasAt, ZeroTimeGivesBeta) {
  const HyperplaneHead head = make_head({1.0}, -0.7, 3.3);
  EXPECT_DOUBLE_EQ(bias_at(head, 0.0), -0.7);
}

TEST(BiasAt, ArrangedCancellation) {
  const HyperplaneHead head = make_head({1.0}, -1.0, 2.0);
  EXPECT_NEAR(bias_at(head, 0.5), 0.0, 1e-9);
}

TEST(BiasAt, AffineEvaluation) {
  const HyperplaneHead head = make_head({1.0}, 0.2, 1.5);
  EXPECT_NEAR(bias_at(head, 1.0), 1.7, 1e-9);
}

TEST(CdfAt, SigmoidSymmetryPoint) {
  const HyperplaneHead head = make_head({0.0, 0.0}, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(cdf_at(head, {1.0, 2.0}, 0.0), 0.5);
}

TEST(CdfAt, HighPrecisionSigmoid) {
  const HyperplaneHead head = make_head({1.0}, 0.0, 1.0);
  EXPECT_NEAR(cdf_at(head, {2.0}, 0.0), 0.880797, 1e-6);
}

TEST(CdfAt, StageProbabilityIsFamilyMemberAtZero) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    HyperplaneHead head = make_head({u(gen), u(gen)}, u(gen), softplus(u(gen)));
    const std::vector<double> f = {u(gen), u(gen)};
    EXPECT_DOUBLE_EQ(cdf_at(head, f, 0.0), sigmoid(risk(head, f) + head.beta));
  }
}

TEST(CdfAt, NonDecreasingInTime) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    HyperplaneHead head;
    head.w = {u(gen), u(gen), u(gen)};
    head.beta = u(gen);
    head.alpha_raw = u(gen);  // any raw value gives alpha >= 0
    head.gamma_raw = u(gen);
    const std::vector<double> f = {u(gen), u(gen), u(gen)};
    double prev = cdf_at(head, f, 0.0);
    for (int g = 1; g <= 20; ++g) {
      const double p = cdf_at(head, f, 0.1 * g);
      EXPECT_GE(p, prev);
      prev = p;
    }
  }
}
