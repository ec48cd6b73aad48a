#include "oracles.hpp"

#include "sarbot/errors.hpp"
#include "sarbot/netcore.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace {

using namespace sarbot;
using net::Matrix;
using net::Network;
using net::RuleKind;
using net::UpdateRule;
using net::Vector;

constexpr double kLambda = -0.2;

Network two_two_one() {
  const std::vector<net::LayerSpec> spec = {{2}, {2}, {1}};
  Vector m(1);
  m << 2.0;
  Network n(spec, m, 1);
  Matrix w1(2, 2);
  w1 << 0.3, -0.5, 0.8, 0.1;
  Matrix w2(1, 2);
  w2 << -0.7, 0.4;
  n.set_weights(0, w1);
  n.set_weights(1, w2);
  return n;
}

TEST(Network, ReferenceArchitectureShape) {
  const auto spec = net::reference_architecture();
  ASSERT_EQ(spec.size(), 12u);
  EXPECT_EQ(spec.front().neuron_count, 240u);
  for (std::size_t i = 1; i <= 10; ++i) EXPECT_EQ(spec[i].neuron_count, 14 - i);
  EXPECT_EQ(spec.back().neuron_count, 3u);
}

TEST(Network, InitIsSeededAndBounded) {
  const auto spec = net::reference_architecture();
  Vector m(3);
  m << 1, 3, 5;
  Network a(spec, m, 42);
  Network b(spec, m, 42);
  Network c(spec, m, 43);
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    EXPECT_TRUE(oracle::bitwise_equal(a.weights(l), b.weights(l)));
    EXPECT_LE(a.weights(l).cwiseAbs().maxCoeff(), 0.1);
    EXPECT_EQ(a.euclidean_distance(l), 0.0);
  }
  EXPECT_FALSE(oracle::bitwise_equal(a.weights(0), c.weights(0)));
}

TEST(Network, ForwardMatchesOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto r = oracle::random_net(rng, 1, 4, 6);
    Network n(r.spec, r.output_weights, r.seed, 1.0);
    const double got = n.forward(r.inputs);
    const auto s = oracle::snapshot(n, r.inputs);
    const auto v = oracle::sum_outputs(s);
    EXPECT_NEAR(got, oracle::action_from(s, v.size() - 1, v.back()), 1e-12);
  }
}

TEST(Network, BackpropMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    const auto r = oracle::random_net(rng, 1, 4, 8);
    Network n(r.spec, r.output_weights, r.seed, 1.0);
    n.forward(r.inputs);
    n.backprop_delta();
    const auto fd = oracle::finite_difference_delta(oracle::snapshot(n, r.inputs));
    for (std::size_t l = 0; l < n.layer_count(); ++l) {
      for (std::size_t j = 0; j < fd[l].size(); ++j) {
        EXPECT_LE(oracle::relative_error(n.deltas(l)[static_cast<Eigen::Index>(j)], fd[l][j]), 1e-6)
            << "net " << i << " layer " << l << " neuron " << j;
      }
    }
  }
}

TEST(Network, SignPropOnChainsIsSignOfDelta) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> err(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const auto r = oracle::random_chain(rng, 6);
    Network n(r.spec, r.output_weights, r.seed, 1.0);
    const double e = err(rng);
    n.forward(r.inputs);
    n.sign_prop(e);
    const auto d = oracle::analytic_delta(oracle::snapshot(n, r.inputs));
    for (std::size_t l = 0; l < n.layer_count(); ++l) {
      EXPECT_EQ(n.signs(l)[0], oracle::signum(oracle::signum(e) * d[l][0]));
    }
  }
}

TEST(Network, LocalErrorsByHand) {
  Network n = two_two_one();
  const std::vector<double> x = {0.6, -0.9};
  n.forward(x);
  const double e = 0.25;
  n.local_prop(e);

  const double v1a = 0.3 * 0.6 - 0.5 * -0.9;
  const double v1b = 0.8 * 0.6 + 0.1 * -0.9;
  const double v2 = -0.7 * std::tanh(v1a) + 0.4 * std::tanh(v1b);
  EXPECT_NEAR(n.local_errors(1)[0], 2.0 * oracle::tanh_prime(v2) * e, 1e-15);
  EXPECT_NEAR(n.local_errors(0)[0], oracle::tanh_prime(v1a) * -0.7 * e, 1e-15);
  EXPECT_NEAR(n.local_errors(0)[1], oracle::tanh_prime(v1b) * 0.4 * e, 1e-15);
}

TEST(Network, UpdatesByHand) {
  Network n = two_two_one();
  const std::vector<double> x = {0.6, -0.9};
  const double e = -0.5;
  const double kappa = 2.0 * e * kLambda;
  const double eta = 0.01;
  n.forward(x);
  n.backprop_delta();
  n.sign_prop(e);
  n.local_prop(e);
  const auto sign = net::sign_of(kLambda);

  const auto gdm = n.compute_update(UpdateRule::make(RuleKind::kGdm, eta), kappa, sign);
  const auto lp = n.compute_update(UpdateRule::make(RuleKind::kLocalProp, eta), kappa, sign);
  const auto sar = n.compute_update(UpdateRule::make(RuleKind::kSar, eta), kappa, sign);
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double a = x[static_cast<std::size_t>(i)];
      EXPECT_NEAR(gdm[0](j, i), -eta * kappa * n.deltas(0)[j] * a, 1e-15);
      EXPECT_NEAR(lp[0](j, i), eta * std::abs(kappa) * n.local_errors(0)[j] * a, 1e-15);
      EXPECT_NEAR(sar[0](j, i), eta * std::abs(kappa) * n.signs(0)[j] * std::abs(n.local_errors(0)[j]) * a,
                  1e-15);
    }
  }
}

// A linear toy plant E = e0 + lambda * A_P: every rule should reduce E^2.
TEST(Network, RulesDescendOnToyPlant) {
  const std::vector<net::LayerSpec> spec = {{3}, {3}, {2}};
  Vector m(2);
  m << 1.0, 3.0;
  const std::vector<double> x = {0.4, -0.2, 0.7};
  for (const double lambda : {-0.5, 0.5}) {
    for (const auto kind : {RuleKind::kGdm, RuleKind::kLocalProp, RuleKind::kSar}) {
      Network n(spec, m, 3, 0.5);
      const auto error = [&] { return 1.0 + lambda * n.forward(x); };
      const double before = error();
      for (int step = 0; step < 50; ++step) {
        const double e = error();
        n.backprop_delta();
        n.sign_prop(e);
        n.local_prop(e);
        n.apply_update(UpdateRule::make(kind, 0.05), 2.0 * e * lambda, net::sign_of(lambda));
      }
      EXPECT_LT(std::abs(error()), std::abs(before)) << net::to_string(kind) << " lambda " << lambda;
    }
  }
}

TEST(Network, DownstreamScalingLeavesSarUnchanged) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const auto r = oracle::random_net(rng, 3, 5, 6);
    const std::size_t layers = r.spec.size() - 1;
    const double e = 0.3;
    const auto sar = UpdateRule::make(RuleKind::kSar, 0.1);
    const auto gdm = UpdateRule::make(RuleKind::kGdm, 0.1);
    const auto run = [&](double c) {
      Network n(r.spec, r.output_weights, r.seed, 0.5);
      for (std::size_t l = 2; l < layers; ++l) n.set_weights(l, c * n.weights(l));
      n.forward(r.inputs);
      n.backprop_delta();
      n.sign_prop(e);
      n.local_prop(e);
      return std::pair{n.compute_update(sar, 2 * e * kLambda, net::sign_of(kLambda))[0],
                       n.compute_update(gdm, 2 * e * kLambda, net::sign_of(kLambda))[0]};
    };
    const auto [sar1, gdm1] = run(1.0);
    const auto [sar10, gdm10] = run(10.0);
    EXPECT_TRUE(oracle::bitwise_equal(sar1, sar10));
    EXPECT_FALSE(oracle::bitwise_equal(gdm1, gdm10));
  }
}

TEST(Network, ZeroErrorGivesZeroUpdate) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 30; ++i) {
    const auto r = oracle::random_net(rng, 1, 4, 8);
    Network n(r.spec, r.output_weights, r.seed, 1.0);
    n.forward(r.inputs);
    n.backprop_delta();
    n.sign_prop(0.0);
    n.local_prop(0.0);
    for (const auto kind : {RuleKind::kGdm, RuleKind::kLocalProp, RuleKind::kSar}) {
      for (const auto& d : n.compute_update(UpdateRule::make(kind, 1.0), 0.0, net::sign_of(kLambda))) {
        EXPECT_TRUE((d.array() == 0.0).all());
      }
    }
  }
}

TEST(Network, OutOfOrderCallsThrow) {
  Network n = two_two_one();
  EXPECT_THROW(n.backprop_delta(), StateError);
  EXPECT_THROW(n.sign_prop(1.0), StateError);
  n.forward(std::vector<double>{0.1, 0.2});
  EXPECT_THROW(n.compute_update(UpdateRule::make(RuleKind::kGdm, 0.1), 1.0, net::LoopGainSign::kNegative),
               StateError);
  n.sign_prop(1.0);
  n.local_prop(-1.0);
  EXPECT_THROW(n.compute_update(UpdateRule::make(RuleKind::kSar, 0.1), 1.0, net::LoopGainSign::kNegative),
               StateError);
}

TEST(Network, RejectsBadArguments) {
  EXPECT_THROW(UpdateRule::make(RuleKind::kSar, 0.0), ConfigError);
  EXPECT_THROW(UpdateRule::make(RuleKind::kSar, std::nan("")), ConfigError);
  EXPECT_THROW(net::parse_rule("adam"), ConfigError);
  EXPECT_EQ(net::parse_rule("localprop"), RuleKind::kLocalProp);
  Network n = two_two_one();
  EXPECT_THROW(n.set_weights(0, Matrix::Zero(3, 2)), ConfigError);
  EXPECT_THROW(n.forward(std::vector<double>{1.0}), ConfigError);
}

TEST(Network, DistanceAndHeatmap) {
  const std::vector<net::LayerSpec> spec = {{2}, {2}, {1}};
  Network n(spec, Vector::Ones(1), 4);
  Matrix w = n.weights(0);
  w(0, 0) += 3.0;
  w(1, 1) -= 4.0;
  n.set_weights(0, w);
  EXPECT_DOUBLE_EQ(n.euclidean_distance(0), 5.0);

  const Matrix h = n.weight_heatmap(0);
  EXPECT_DOUBLE_EQ(h.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(h.maxCoeff(), 1.0);
  n.set_weights(1, Matrix::Constant(1, 2, 0.5));
  EXPECT_TRUE((n.weight_heatmap(1).array() == 0.0).all());
}

TEST(Network, WeightSnapshotRoundTrip) {
  const auto spec = net::reference_architecture();
  Vector m(3);
  m << 1, 3, 5;
  Network n(spec, m, 9);
  std::stringstream s;
  net::write_weight_snapshot(s, n);
  const auto back = net::read_weight_snapshot(s);
  ASSERT_EQ(back.size(), n.layer_count());
  for (std::size_t l = 0; l < back.size(); ++l) EXPECT_TRUE(oracle::bitwise_equal(back[l], n.weights(l)));
}

TEST(Network, DescentProbeAcceptsBothSigns) {
  EXPECT_TRUE(net::probe_descent(-0.2));
  EXPECT_TRUE(net::probe_descent(98.0));
}

}  // namespace
