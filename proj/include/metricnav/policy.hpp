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

#pragma once

// Reactive motion through a distance-dependent metric. The base attractor
// velocity g is premultiplied by G(x)^{-1}, where
//   G(x) = I + f_blow(x) u u^T,   u = grad f / |grad f|,
//   f_blow(f) = k / (f + eps)^4 * exp(-beta f).
// G is a rank-one update of the identity, so its inverse is applied in
// closed form: G^{-1} g = g - f_blow / (1 + f_blow) (u . g) u.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include "metricnav/errors.hpp"
#include "metricnav/point_cloud.hpp"
#include "metricnav/scenes.hpp"
#include "metricnav/siren.hpp"

namespace metricnav {

struct PolicyConfig {
  double k = 20.0;
  double beta = 100.0;
  double epsilon = 1e-8;
  Eigen::Vector3d goal = Eigen::Vector3d::Zero();
  /// Attractor gain lambda in g = -lambda (x - goal).
  double gain = 1.0;
  double speed_cap = 0.5;
  /// RK4 step in seconds.
  double step = 0.01;
  int max_steps = 5000;
  double goal_radius = 0.02;

  void validate() const {
    if (!(k > 0.0 && beta > 0.0 && epsilon > 0.0 && step > 0.0 && goal_radius > 0.0 && gain > 0.0 &&
          speed_cap > 0.0 && max_steps >= 0) ||
        !goal.allFinite())
      throw DomainError("invalid policy configuration");
  }
};

/// Reads keys k, beta, epsilon, goal, gain, speed_cap, step, max_steps,
/// goal_radius from a JSON object (bare or nested under "policy").
void apply_policy_json(PolicyConfig& config, const std::string& json_text);
void apply_policy_override(PolicyConfig& config, const std::string& key, const std::string& value);
std::string policy_to_json(const PolicyConfig& config);

/// Gradient norms below this are treated as a missing normal.
inline constexpr double kDegenerateNormal = 1e-9;

template <typename Scalar>
Scalar blow_up(Scalar f_value, const PolicyConfig& config) {
  using std::exp;
  using std::pow;
  const Scalar f = f_value > Scalar(0) ? f_value : Scalar(0);
  return Scalar(config.k) / pow(f + Scalar(config.epsilon), 4) * exp(-Scalar(config.beta) * f);
}

/// (I + alpha u u^T)^{-1} g for unit u, without forming the matrix.
template <typename DerivedU, typename DerivedG>
auto sherman_morrison_apply(const Eigen::MatrixBase<DerivedU>& u, typename DerivedU::Scalar alpha,
                            const Eigen::MatrixBase<DerivedG>& g) {
  using Scalar = typename DerivedU::Scalar;
  return (g - (alpha / (Scalar(1) + alpha)) * u.dot(g) * u).eval();
}

template <typename DerivedU>
Eigen::Matrix<typename DerivedU::Scalar, 3, 3> collision_metric(const Eigen::MatrixBase<DerivedU>& u,
                                                                typename DerivedU::Scalar f_blow) {
  using Scalar = typename DerivedU::Scalar;
  return Eigen::Matrix<Scalar, 3, 3>::Identity() + f_blow * u * u.transpose();
}

/// Capped linear attractor toward config.goal.
inline Eigen::Vector3d base_velocity(const Eigen::Vector3d& x, const PolicyConfig& config) {
  Eigen::Vector3d g = -config.gain * (x - config.goal);
  const double speed = g.norm();
  if (speed > config.speed_cap) g *= config.speed_cap / speed;
  return g;
}

/// argmin_v 1/2 v^T G v - v^T g by a direct solve. Throws DomainError if G
/// is not symmetric positive definite.
template <typename DerivedM, typename DerivedG>
Eigen::Matrix<typename DerivedM::Scalar, 3, 1> qp_equivalence_check(const Eigen::MatrixBase<DerivedM>& metric,
                                                                    const Eigen::MatrixBase<DerivedG>& g_base) {
  using Scalar = typename DerivedM::Scalar;
  const Eigen::Matrix<Scalar, 3, 3> G = metric;
  const Scalar scale = G.cwiseAbs().maxCoeff();
  if (!((G - G.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale))
    throw DomainError("metric must be symmetric");
  const Eigen::LLT<Eigen::Matrix<Scalar, 3, 3>> llt(G);
  if (llt.info() != Eigen::Success) throw DomainError("metric must be positive definite");
  return llt.solve(g_base);
}

/// Anything that returns a value and spatial gradient at a point.
template <typename F>
concept DistanceField = requires(const F& f, const Eigen::Vector3d& x) {
  { f(x) } -> std::convertible_to<FieldEvaluation<double>>;
};

/// Trained network, evaluated in its own (normalized) frame.
struct LearnedField {
  const FieldModel* model;
  FieldEvaluation<double> operator()(const Eigen::Vector3d& x) const { return evaluate(*model, x); }
};

/// Trained network evaluated in world coordinates through the training
/// cloud's normalization: f_world(x) = scale * f((x - center) / scale).
struct DenormalizedField {
  const FieldModel* model;
  Normalization normalization;
  FieldEvaluation<double> operator()(const Eigen::Vector3d& x) const {
    auto e = evaluate(*model, normalization.apply(x));
    e.value *= normalization.scale;
    return e;
  }
};

/// Exact distance of an analytic scene.
struct OracleField {
  const Scene* scene;
  FieldEvaluation<double> operator()(const Eigen::Vector3d& x) const {
    return {exact_distance(*scene, x), distance_gradient(*scene, x)};
  }
};

struct PolicyStep {
  Eigen::Vector3d velocity;
  double f_value = 0.0;
  double f_blow = 0.0;
  /// Set when the field gradient vanished and the base velocity passed
  /// through unmodulated.
  bool degenerate_normal = false;
};

template <DistanceField Field>
PolicyStep modulated_velocity(const Field& field, const Eigen::Vector3d& x, const PolicyConfig& config) {
  const Eigen::Vector3d g = base_velocity(x, config);
  const FieldEvaluation<double> e = field(x);
  if (!std::isfinite(e.value) || !e.gradient.allFinite()) throw NumericError("non-finite field evaluation");
  PolicyStep out{g, e.value, blow_up(e.value, config), false};
  const double norm = e.gradient.norm();
  if (!(norm >= kDegenerateNormal)) {
    out.degenerate_normal = true;
    return out;
  }
  out.velocity = sherman_morrison_apply(Eigen::Vector3d(e.gradient / norm), out.f_blow, g);
  return out;
}

enum class TerminalStatus { ReachedGoal, MaxSteps, NumericFailure };

inline std::string to_string(TerminalStatus status);

struct TrajectorySample {
  double time = 0.0;
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
  double f_value = 0.0;
  double f_blow = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  TerminalStatus status = TerminalStatus::MaxSteps;
  Eigen::Vector3d goal = Eigen::Vector3d::Zero();
  double goal_radius = 0.0;
  int degenerate_steps = 0;

  int steps() const { return static_cast<int>(samples.size()) - 1; }
  Points3d positions() const {
    Points3d p(3, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = samples[i].position;
    return p;
  }
};

/// Workspace bound for start points (normalized frame with margin).
inline constexpr double kWorkspaceBound = 1.5;

/// Fixed-step classical RK4 on x' = G(x)^{-1} g(x). Stops inside the goal
/// radius, after max_steps, or on a non-finite state (which is dropped).
template <DistanceField Field>
Trajectory integrate(const Field& field, const Eigen::Vector3d& x0, const PolicyConfig& config) {
  config.validate();
  if (!x0.allFinite() || x0.cwiseAbs().maxCoeff() > kWorkspaceBound)
    throw DomainError("start point must lie within [-1.5, 1.5]^3");

  Trajectory traj;
  traj.goal = config.goal;
  traj.goal_radius = config.goal_radius;
  const double h = config.step;
  Eigen::Vector3d x = x0;
  PolicyStep k1;
  try {
    k1 = modulated_velocity(field, x, config);
  } catch (const NumericError&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    traj.samples.push_back({0.0, x, Eigen::Vector3d::Zero(), nan, nan});
    traj.status = TerminalStatus::NumericFailure;
    return traj;
  }
  traj.samples.push_back({0.0, x, k1.velocity, k1.f_value, k1.f_blow});
  traj.degenerate_steps += k1.degenerate_normal;
  if ((x - config.goal).norm() <= config.goal_radius) {
    traj.status = TerminalStatus::ReachedGoal;
    return traj;
  }
  for (int step = 1; step <= config.max_steps; ++step) {
    try {
      const PolicyStep k2 = modulated_velocity(field, Eigen::Vector3d(x + 0.5 * h * k1.velocity), config);
      const PolicyStep k3 = modulated_velocity(field, Eigen::Vector3d(x + 0.5 * h * k2.velocity), config);
      const PolicyStep k4 = modulated_velocity(field, Eigen::Vector3d(x + h * k3.velocity), config);
      const Eigen::Vector3d next =
          x + (h / 6.0) * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
      if (!next.allFinite()) {
        traj.status = TerminalStatus::NumericFailure;
        return traj;
      }
      x = next;
      k1 = modulated_velocity(field, x, config);
    } catch (const NumericError&) {
      traj.status = TerminalStatus::NumericFailure;
      return traj;
    } catch (const DomainError&) {
      traj.status = TerminalStatus::NumericFailure;
      return traj;
    }
    traj.samples.push_back({step * h, x, k1.velocity, k1.f_value, k1.f_blow});
    traj.degenerate_steps += k1.degenerate_normal;
    if ((x - config.goal).norm() <= config.goal_radius) {
      traj.status = TerminalStatus::ReachedGoal;
      return traj;
    }
  }
  traj.status = TerminalStatus::MaxSteps;
  return traj;
}

inline std::string to_string(TerminalStatus status) {
  switch (status) {
    case TerminalStatus::ReachedGoal: return "reached-goal";
    case TerminalStatus::MaxSteps: return "max-steps";
    case TerminalStatus::NumericFailure: return "numeric-failure";
  }
  return "unknown";
}

}  // namespace metricnav
