// Copyright 2026 The metricnav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "metricnav/errors.hpp"
#include "metricnav/point_cloud.hpp"
#include "metricnav/siren.hpp"

using namespace metricnav;

namespace {

Points3d random_points(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Points3d p(3, n);
  for (Eigen::Index i = 0; i < n; ++i) p.col(i) = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

}  // namespace

TEST(FieldModelTest, DefaultParameterCount) {
  const FieldModel m = init_model<double>(256, 3, 25.0, 0);
  EXPECT_EQ(m.parameter_count(), (3 * 256 + 256) + 2 * (256 * 256 + 256) + (256 + 1));
  EXPECT_EQ(m.parameter_count(), 132865);
  EXPECT_EQ(m.depth(), 3);
  EXPECT_EQ(m.width(), 256);
  m.validate();
}

TEST(FieldModelTest, SeedDeterminism) {
  const FieldModel a = init_model<double>(32, 3, 25.0, 5);
  const FieldModel b = init_model<double>(32, 3, 25.0, 5);
  const FieldModel c = init_model<double>(32, 3, 25.0, 6);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), c.flatten());
}

TEST(FieldModelTest, InitBounds) {
  const double omega0 = 25.0;
  const int w = 64;
  const FieldModel m = init_model<double>(w, 3, omega0, 1);
  EXPECT_LE(m.layers[0].weight.cwiseAbs().maxCoeff(), kFirstLayerFrequency / omega0);
  for (std::size_t l = 1; l < m.layers.size(); ++l) {
    const double fan_in = static_cast<double>(m.layers[l].weight.cols());
    EXPECT_LE(m.layers[l].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / fan_in) / omega0);
  }
  for (const auto& l : m.layers)
    EXPECT_LE(l.bias.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(static_cast<double>(l.weight.cols())));
  const FieldModel z = init_model<double>(w, 3, omega0, 1, true);
  for (const auto& l : z.layers) EXPECT_TRUE(l.bias.isZero(0.0));
}

TEST(FieldModelTest, InvalidShapesRejected) {
  FieldModel m = init_model<double>(8, 2, 25.0, 0);
  m.layers[1].weight.resize(8, 7);
  EXPECT_THROW(m.validate(), DomainError);
  FieldModel n = init_model<double>(8, 2, 25.0, 0);
  n.omega0 = 0.0;
  EXPECT_THROW(n.validate(), DomainError);
  EXPECT_THROW(n.assign(Eigen::VectorXd::Zero(3)), DomainError);
}

// With zero biases every hidden activation at the origin is sin(0) = 0,
// so only the output bias survives (through the absolute-value head).
TEST(FieldEval, ZeroBiasOriginValue) {
  FieldModel m = init_model<double>(16, 3, 25.0, 2, true);
  m.layers.back().bias(0) = -0.37;
  EXPECT_DOUBLE_EQ(evaluate(m, Eigen::Vector3d::Zero()).value, 0.37);
}

TEST(FieldEval, NonnegativeAndNonFiniteRejected) {
  const FieldModel m = init_model<double>(16, 3, 25.0, 3);
  std::mt19937_64 rng(1);
  const Points3d x = random_points(200, rng);
  const Eigen::VectorXd v = evaluate_values(m, x);
  EXPECT_GE(v.minCoeff(), 0.0);
  EXPECT_THROW(evaluate(m, Eigen::Vector3d(NAN, 0, 0)), DomainError);
}

TEST(FieldEval, InputGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(7);
  const double h = 1e-5;
  for (int c = 0; c < 100; ++c) {
    const FieldModel m = init_model<double>(8, 3, 25.0, 100 + c);
    const Eigen::Vector3d x = random_points(1, rng).col(0);
    const auto e = evaluate(m, x);
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d xp = x, xm = x;
      xp(a) += h;
      xm(a) -= h;
      const double fd = (evaluate(m, xp).value - evaluate(m, xm).value) / (2 * h);
      EXPECT_LE(rel_err(e.gradient(a), fd), 1e-4) << "case " << c << " axis " << a;
    }
  }
}

TEST(FieldEval, TaylorRemainderIsSecondOrder) {
  const FieldModel m = init_model<double>(32, 3, 25.0, 4);
  const Eigen::Vector3d x(0.2, -0.3, 0.5), dir = Eigen::Vector3d(1, 2, -1).normalized();
  const auto e = evaluate(m, x);
  double prev = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double eps = 1e-3 / std::pow(2.0, k);
    const double rem = std::abs(evaluate(m, Eigen::Vector3d(x + eps * dir)).value - e.value -
                                e.gradient.dot(eps * dir));
    if (k > 0) {
      EXPECT_NEAR(prev / rem, 4.0, 0.5);
    }
    prev = rem;
  }
}

TEST(FieldEval, BatchMatchesSingle) {
  const FieldModel m = init_model<double>(16, 3, 25.0, 8);
  std::mt19937_64 rng(2);
  const Points3d x = random_points(1100, rng);
  Eigen::VectorXd v;
  Eigen::Matrix<double, 3, Eigen::Dynamic> g;
  evaluate_batch(m, x, v, g);
  for (Eigen::Index i = 0; i < x.cols(); i += 97) {
    const auto e = evaluate(m, Eigen::Vector3d(x.col(i)));
    EXPECT_NEAR(v(i), e.value, 1e-13);
    EXPECT_LE((g.col(i) - e.gradient).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FieldLoss, PerfectFitHasZeroFitGradient) {
  const FieldModel m = init_model<double>(8, 2, 25.0, 9);
  std::mt19937_64 rng(3);
  const Points3d q = random_points(40, rng), s = random_points(10, rng);
  const Eigen::VectorXd d = evaluate_values(m, q);
  const auto lg = loss_and_param_grads(m, s, q, d, LossWeights{0.0, 0.0});
  EXPECT_LE(lg.loss.fit, 1e-30);
  EXPECT_LE(lg.gradient.flatten().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FieldLoss, ParameterGradientsMatchCentralDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(0.0, 0.3);
  const LossWeights w{0.5, 0.1};
  for (int c = 0; c < 5; ++c) {
    const FieldModel m = init_model<double>(8, 2, 25.0, 200 + c);
    const Points3d q = random_points(30, rng), s = random_points(20, rng);
    Eigen::VectorXd d(30);
    for (Eigen::Index i = 0; i < 30; ++i) d(i) = ud(rng);
    const Eigen::VectorXd g = loss_and_param_grads(m, s, q, d, w).gradient.flatten();
    const Eigen::VectorXd theta = m.flatten();
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      FieldModel mp = m, mm = m;
      Eigen::VectorXd t = theta;
      t(k) += h;
      mp.assign(t);
      t(k) -= 2 * h;
      mm.assign(t);
      const double fd = (evaluate_loss(mp, s, q, d, w).total - evaluate_loss(mm, s, q, d, w).total) / (2 * h);
      EXPECT_LE(rel_err(g(k), fd), 1e-4) << "case " << c << " parameter " << k;
    }
  }
}

TEST(FieldLoss, LossMatchesEvaluation) {
  const FieldModel m = init_model<double>(8, 3, 25.0, 10);
  std::mt19937_64 rng(4);
  const Points3d q = random_points(300, rng), s = random_points(300, rng);
  const Eigen::VectorXd d = Eigen::VectorXd::Constant(300, 0.1);
  const LossWeights w{0.5, 0.1};
  const auto a = loss_and_param_grads(m, s, q, d, w).loss;
  const auto b = evaluate_loss(m, s, q, d, w);
  EXPECT_NEAR(a.total, b.total, 1e-13);
  EXPECT_NEAR(a.eik, b.eik, 1e-13);
  EXPECT_THROW(loss_and_param_grads(m, s, q, Eigen::VectorXd(d.head(5)), w), DomainError);
}
