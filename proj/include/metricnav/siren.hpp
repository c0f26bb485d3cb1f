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

// Sine-activated multilayer field f: R^3 -> R with exact input gradients and
// exact parameter gradients of losses that involve those input gradients.
//
// Hidden layers compute h_l = sin(omega0 * (W_l h_{l-1} + b_l)); the output
// is f = |w . h_L + b|, so the field is nonnegative and the kink of an
// unsigned distance at the surface comes from the absolute value rather than
// from the sines. The input gradient comes from a reverse pass seeded at f.
// Training losses depend on both f and that gradient, so their parameter
// gradients are obtained by a second reverse sweep over the recorded value
// and gradient passes (mixed second derivatives included).

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "metricnav/detail/sincos.hpp"
#include "metricnav/errors.hpp"

namespace metricnav {

template <typename Scalar>
struct SirenLayer {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weight;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

/// Parameters of the field. The same type stores parameter gradients and
/// optimizer moments.
template <typename Scalar>
struct SirenField {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// layers[0 .. depth-1] are sine layers, layers.back() is the linear head.
  std::vector<SirenLayer<Scalar>> layers;
  Scalar omega0 = Scalar(25);

  int depth() const { return static_cast<int>(layers.size()) - 1; }
  int width() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.rows()); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return std::isfinite(omega0);
  }

  SirenField zeros_like() const {
    SirenField z;
    z.omega0 = omega0;
    for (const auto& l : layers)
      z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return z;
  }

  /// Row-major weights then bias, layer by layer.
  Vector flatten() const {
    Vector out(parameter_count());
    Eigen::Index k = 0;
    for (const auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out(k++) = l.weight(r, c);
      out.segment(k, l.bias.size()) = l.bias;
      k += l.bias.size();
    }
    return out;
  }

  void assign(const Vector& flat) {
    if (flat.size() != parameter_count()) throw DomainError("parameter vector has the wrong length");
    Eigen::Index k = 0;
    for (auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat(k++);
      l.bias = flat.segment(k, l.bias.size());
      k += l.bias.size();
    }
  }

  void validate() const {
    if (layers.size() < 2) throw DomainError("field needs at least one hidden layer");
    if (!(omega0 > Scalar(0))) throw DomainError("omega0 must be positive");
    Eigen::Index in = 3;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.weight.cols() != in || l.bias.size() != l.weight.rows())
        throw DomainError("layer " + std::to_string(i) + " dimensions do not chain");
      in = l.weight.rows();
    }
    if (in != 1) throw DomainError("output layer must have a single unit");
  }
};

using FieldModel = SirenField<double>;

template <typename Scalar>
struct FieldEvaluation {
  Scalar value;
  Eigen::Matrix<Scalar, 3, 1> gradient;
};

/// Angular frequency omega0 * |w| bound of the first layer: under one period
/// across the normalized domain [-1, 1].
inline constexpr double kFirstLayerFrequency = 2.5;

/// First-layer weights uniform in +-kFirstLayerFrequency/omega0, later
/// weights in +-sqrt(6/fan_in)/omega0, biases uniform in +-1/sqrt(fan_in)
/// (or zero). Deterministic in `seed`.
template <typename Scalar = double>
SirenField<Scalar> init_model(int width, int depth, Scalar omega0, std::uint64_t seed, bool zero_bias = false) {
  if (width < 1 || depth < 1) throw DomainError("field width and depth must be at least 1");
  if (!(omega0 > Scalar(0))) throw DomainError("omega0 must be positive");
  using Matrix = typename SirenField<Scalar>::Matrix;
  using Vector = typename SirenField<Scalar>::Vector;
  std::mt19937_64 rng(seed);
  SirenField<Scalar> model;
  model.omega0 = omega0;
  auto layer = [&](int out, int in, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = Scalar(dist(rng));
    Vector b = Vector::Zero(out);
    if (!zero_bias) {
      std::uniform_real_distribution<double> bdist(-1.0 / std::sqrt(double(in)), 1.0 / std::sqrt(double(in)));
      for (int r = 0; r < out; ++r) b(r) = Scalar(bdist(rng));
    }
    model.layers.push_back({std::move(w), std::move(b)});
  };
  const double hidden_bound = std::sqrt(6.0 / width) / static_cast<double>(omega0);
  layer(width, 3, kFirstLayerFrequency / static_cast<double>(omega0));
  for (int l = 1; l < depth; ++l) layer(width, width, hidden_bound);
  layer(1, width, hidden_bound);
  return model;
}

namespace detail {

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Intermediates for m points. Hidden layer l maps inputs[l] to sines[l];
// inputs[depth] feeds the linear head. With `with_gradient`, deltas[l] is
// d f / d inputs[l] (deltas[0] is the input gradient, 3 x m) and gammas[l]
// is d f / d(pre-activation of layer l).
template <typename Scalar>
struct SirenTape {
  Eigen::Index m = 0;
  bool with_gradient = false;
  std::vector<DynMatrix<Scalar>> inputs;
  std::vector<DynMatrix<Scalar>> sines;
  std::vector<DynMatrix<Scalar>> cosines;
  std::vector<DynMatrix<Scalar>> deltas;
  std::vector<DynMatrix<Scalar>> gammas;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> values;
  // Sign of the linear head output per point, before the absolute value.
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> signs;
};

template <typename Scalar, typename Derived>
void forward(const SirenField<Scalar>& model, const Eigen::MatrixBase<Derived>& x, bool with_gradient,
             SirenTape<Scalar>& tape, bool check_finite = false) {
  const Eigen::Index m = x.cols();
  const Scalar w0 = model.omega0;
  const int hidden = model.depth();
  tape.m = m;
  tape.with_gradient = with_gradient;
  tape.inputs.resize(static_cast<std::size_t>(hidden) + 1);
  tape.sines.resize(static_cast<std::size_t>(hidden));
  tape.cosines.resize(static_cast<std::size_t>(hidden));

  tape.inputs[0] = x.template cast<Scalar>();
  for (int l = 0; l < hidden; ++l) {
    const auto i = static_cast<std::size_t>(l);
    const auto& layer = model.layers[i];
    DynMatrix<Scalar> arg(layer.weight.rows(), m);
    arg.noalias() = layer.weight * tape.inputs[i];
    arg.colwise() += layer.bias;
    arg *= w0;
    auto& s = tape.sines[i];
    auto& c = tape.cosines[i];
    s.resize(arg.rows(), m);
    c.resize(arg.rows(), m);
    sincos_n(arg.data(), s.data(), c.data(), static_cast<std::size_t>(arg.size()));
    if (check_finite && !s.allFinite())
      throw NumericError("non-finite activation in layer " + std::to_string(l));
    tape.inputs[i + 1] = s;
  }
  const auto& head = model.layers.back();
  tape.values.noalias() = head.weight * tape.inputs.back();
  tape.values.array() += head.bias(0);
  tape.signs.setOnes(m);
  for (Eigen::Index j = 0; j < m; ++j)
    if (tape.values(j) < Scalar(0)) tape.signs(j) = Scalar(-1);
  tape.values = tape.values.cwiseAbs();

  if (!with_gradient) return;
  tape.deltas.resize(static_cast<std::size_t>(hidden) + 1);
  tape.gammas.resize(static_cast<std::size_t>(hidden));
  tape.deltas.back() = head.weight.transpose() * tape.signs;
  for (int l = hidden - 1; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    tape.gammas[i] = (w0 * tape.cosines[i].array() * tape.deltas[i + 1].array()).matrix();
    tape.deltas[i].noalias() = model.layers[i].weight.transpose() * tape.gammas[i];
  }
}

// Second reverse sweep. `value_adj` (1 x m) and `grad_adj` (3 x m) are the
// loss derivatives with respect to f and to the input gradient; the latter
// is ignored for tapes recorded without gradients. Accumulates into `grad`.
template <typename Scalar>
void backward(const SirenField<Scalar>& model, const SirenTape<Scalar>& tape,
              const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& value_adj, const DynMatrix<Scalar>* grad_adj,
              SirenField<Scalar>& grad) {
  const Eigen::Index m = tape.m;
  const Scalar w0 = model.omega0;
  const int hidden = model.depth();
  const bool second = tape.with_gradient && grad_adj != nullptr;
  auto& ghead = grad.layers.back();

  // Adjoints of the input-gradient pass, walked from the input outwards.
  std::vector<DynMatrix<Scalar>> delta_adj;
  std::vector<DynMatrix<Scalar>> cos_adj;
  if (second) {
    delta_adj.resize(static_cast<std::size_t>(hidden) + 1);
    cos_adj.resize(static_cast<std::size_t>(hidden));
    delta_adj[0] = *grad_adj;
    for (int l = 0; l < hidden; ++l) {
      const auto i = static_cast<std::size_t>(l);
      DynMatrix<Scalar> gamma_adj(model.layers[i].weight.rows(), m);
      gamma_adj.noalias() = model.layers[i].weight * delta_adj[i];
      cos_adj[i] = (w0 * tape.deltas[i + 1].array() * gamma_adj.array()).matrix();
      delta_adj[i + 1] = (w0 * tape.cosines[i].array() * gamma_adj.array()).matrix();
    }
    ghead.weight.noalias() += (delta_adj.back() * tape.signs.transpose()).transpose();
  }

  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> head_adj = value_adj.cwiseProduct(tape.signs);
  ghead.weight.noalias() += head_adj * tape.inputs.back().transpose();
  ghead.bias(0) += head_adj.sum();
  DynMatrix<Scalar> h_adj = model.layers.back().weight.transpose() * head_adj;

  for (int l = hidden - 1; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    DynMatrix<Scalar> z_adj;
    if (second)
      z_adj = (w0 * (tape.cosines[i].array() * h_adj.array() - tape.sines[i].array() * cos_adj[i].array()))
                  .matrix();
    else
      z_adj = (w0 * tape.cosines[i].array() * h_adj.array()).matrix();

    auto& g = grad.layers[i];
    if (second) {
      const Eigen::Index rows = z_adj.rows();
      const Eigen::Index in = tape.inputs[i].rows();
      DynMatrix<Scalar> left(rows, 2 * m);
      left << z_adj, tape.gammas[i];
      DynMatrix<Scalar> right(in, 2 * m);
      right << tape.inputs[i], delta_adj[i];
      g.weight.noalias() += left * right.transpose();
    } else {
      g.weight.noalias() += z_adj * tape.inputs[i].transpose();
    }
    g.bias += z_adj.rowwise().sum();
    if (l > 0) h_adj.noalias() = model.layers[i].weight.transpose() * z_adj;
  }
}

}  // namespace detail

/// Value and analytic input gradient at a single point.
template <typename Scalar, typename Derived>
FieldEvaluation<Scalar> evaluate(const SirenField<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  static_assert(Derived::RowsAtCompileTime == 3 && Derived::ColsAtCompileTime == 1,
                "evaluate expects a 3-vector");
  if (!x.allFinite()) throw DomainError("field evaluation point must be finite");
  detail::SirenTape<Scalar> tape;
  detail::forward(model, x, true, tape, true);
  FieldEvaluation<Scalar> out{tape.values(0), tape.deltas[0].col(0)};
  if (!std::isfinite(out.value) || !out.gradient.allFinite())
    throw NumericError("non-finite activation in layer " + std::to_string(model.depth()));
  return out;
}

/// Values and gradients for a batch of points (columns of `x`).
template <typename Scalar, typename Derived>
void evaluate_batch(const SirenField<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& values,
                    Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& gradients, Eigen::Index chunk = 512) {
  const Eigen::Index n = x.cols();
  values.resize(n);
  gradients.resize(3, n);
  detail::SirenTape<Scalar> tape;
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index m = std::min(chunk, n - start);
    detail::forward(model, x.middleCols(start, m), true, tape);
    values.segment(start, m) = tape.values.transpose();
    gradients.middleCols(start, m) = tape.deltas[0];
  }
}

/// Values only.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate_values(const SirenField<Scalar>& model,
                                                         const Eigen::MatrixBase<Derived>& x,
                                                         Eigen::Index chunk = 512) {
  const Eigen::Index n = x.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values(n);
  detail::SirenTape<Scalar> tape;
  for (Eigen::Index start = 0; start < n; start += chunk) {
    const Eigen::Index m = std::min(chunk, n - start);
    detail::forward(model, x.middleCols(start, m), false, tape);
    values.segment(start, m) = tape.values.transpose();
  }
  return values;
}

struct LossWeights {
  double alpha_surf = 0.5;
  double alpha_eik = 0.1;
};

struct LossBreakdown {
  double fit = 0.0;
  double surf = 0.0;
  double eik = 0.0;
  double total = 0.0;
};

template <typename Scalar>
struct LossAndGradient {
  LossBreakdown loss;
  SirenField<Scalar> gradient;
};

/// Guard inside the eikonal norm: sqrt(|g|^2 + kEikonalGuard).
inline constexpr double kEikonalGuard = 1e-12;

/// Training objective and its exact gradient with respect to every
/// parameter:
///   fit  = mean over queries of (f(q) - d(q))^2
///   surf = mean over surface points of |f(p)|
///   eik  = mean over queries of (|grad f(q)| - 1)^2
///   total = fit + alpha_surf * surf + alpha_eik * eik
template <typename Scalar, typename DerivedS, typename DerivedQ, typename DerivedD>
LossAndGradient<Scalar> loss_and_param_grads(const SirenField<Scalar>& model,
                                             const Eigen::MatrixBase<DerivedS>& surface,
                                             const Eigen::MatrixBase<DerivedQ>& queries,
                                             const Eigen::MatrixBase<DerivedD>& distances,
                                             const LossWeights& weights, Eigen::Index chunk = 128) {
  using Mat = detail::DynMatrix<Scalar>;
  const Eigen::Index nq = queries.cols();
  const Eigen::Index ns = surface.cols();
  if (nq == 0 || ns == 0) throw DomainError("loss needs nonempty surface and query batches");
  if (distances.size() != nq) throw DomainError("one oracle distance per query is required");

  LossAndGradient<Scalar> result{{}, model.zeros_like()};
  const Scalar inv_q = Scalar(1) / Scalar(nq);
  const Scalar inv_s = Scalar(1) / Scalar(ns);
  const Scalar a_eik = Scalar(weights.alpha_eik);
  const Scalar a_surf = Scalar(weights.alpha_surf);
  detail::SirenTape<Scalar> tape;
  Scalar fit_sum(0), eik_sum(0), surf_sum(0);

  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> value_adj;
  Mat grad_adj;
  for (Eigen::Index start = 0; start < nq; start += chunk) {
    const Eigen::Index m = std::min(chunk, nq - start);
    detail::forward(model, queries.middleCols(start, m), true, tape);
    const Mat& g = tape.deltas[0];
    value_adj.resize(m);
    grad_adj.resize(3, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Scalar r = tape.values(i) - Scalar(distances(start + i));
      const Scalar norm = std::sqrt(g.col(i).squaredNorm() + Scalar(kEikonalGuard));
      fit_sum += r * r;
      eik_sum += (norm - Scalar(1)) * (norm - Scalar(1));
      value_adj(i) = Scalar(2) * r * inv_q;
      grad_adj.col(i) = (a_eik * Scalar(2) * (norm - Scalar(1)) / norm * inv_q) * g.col(i);
    }
    detail::backward(model, tape, value_adj, &grad_adj, result.gradient);
  }

  for (Eigen::Index start = 0; start < ns; start += chunk) {
    const Eigen::Index m = std::min(chunk, ns - start);
    detail::forward(model, surface.middleCols(start, m), false, tape);
    value_adj.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Scalar f = tape.values(i);
      surf_sum += std::abs(f);
      value_adj(i) = a_surf * inv_s * Scalar((f > Scalar(0)) - (f < Scalar(0)));
    }
    detail::backward(model, tape, value_adj, static_cast<const Mat*>(nullptr), result.gradient);
  }

  result.loss.fit = static_cast<double>(fit_sum * inv_q);
  result.loss.eik = static_cast<double>(eik_sum * inv_q);
  result.loss.surf = static_cast<double>(surf_sum * inv_s);
  result.loss.total = result.loss.fit + weights.alpha_surf * result.loss.surf + weights.alpha_eik * result.loss.eik;
  return result;
}

/// Loss only (no gradient), for finite-difference checks and monitoring.
template <typename Scalar, typename DerivedS, typename DerivedQ, typename DerivedD>
LossBreakdown evaluate_loss(const SirenField<Scalar>& model, const Eigen::MatrixBase<DerivedS>& surface,
                            const Eigen::MatrixBase<DerivedQ>& queries,
                            const Eigen::MatrixBase<DerivedD>& distances, const LossWeights& weights) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fq;
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> gq;
  evaluate_batch(model, queries, fq, gq);
  const auto fs = evaluate_values(model, surface);
  LossBreakdown out;
  Scalar fit(0), eik(0), surf(0);
  for (Eigen::Index i = 0; i < fq.size(); ++i) {
    const Scalar r = fq(i) - Scalar(distances(i));
    const Scalar norm = std::sqrt(gq.col(i).squaredNorm() + Scalar(kEikonalGuard));
    fit += r * r;
    eik += (norm - Scalar(1)) * (norm - Scalar(1));
  }
  for (Eigen::Index i = 0; i < fs.size(); ++i) surf += std::abs(fs(i));
  out.fit = static_cast<double>(fit / Scalar(fq.size()));
  out.eik = static_cast<double>(eik / Scalar(fq.size()));
  out.surf = static_cast<double>(surf / Scalar(fs.size()));
  out.total = out.fit + weights.alpha_surf * out.surf + weights.alpha_eik * out.eik;
  return out;
}

}  // namespace metricnav
