#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "gaitbench/learn.hpp"

namespace gaitbench::detail {

/// Full-batch Adam on a flat parameter vector. `loss` fills the gradient.
template <typename LossFn>
void adam_minimize(Eigen::VectorXd& params, LossFn&& loss, const AdamOptions& opt) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd grad(params.size());
  double b1t = 1.0, b2t = 1.0;
  for (int t = 1; t <= opt.iterations; ++t) {
    loss(params, grad);
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
    v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseAbs2();
    const double step = opt.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    params.array() -= step * m.array() / (v.array().sqrt() + opt.epsilon);
  }
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) fill of a parameter block.
inline void fan_in_uniform(Eigen::Ref<Eigen::VectorXd> block, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = u(rng);
}

/// Row-wise softmax, stabilised by the row maximum.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace gaitbench::detail
