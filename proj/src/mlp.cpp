#include "adam.hpp"
#include "gaitbench/error.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {

namespace {

struct MlpView {
  Eigen::Map<const Eigen::MatrixXd> w1, w2;
  Eigen::Map<const Eigen::RowVectorXd> b1, b2;
};

struct MlpGradView {
  Eigen::Map<Eigen::MatrixXd> w1, w2;
  Eigen::Map<Eigen::RowVectorXd> b1, b2;
};

// Flat layout: W1 (inputs x hidden, column-major), b1, W2 (hidden x classes), b2.
template <typename Ptr>
auto offsets(const std::vector<int>& sizes, Ptr base) {
  const int in = sizes[0], hidden = sizes[1], out = sizes[2];
  Ptr w1 = base;
  Ptr b1 = w1 + static_cast<long>(in) * hidden;
  Ptr w2 = b1 + hidden;
  Ptr b2 = w2 + static_cast<long>(hidden) * out;
  return std::array<Ptr, 4>{w1, b1, w2, b2};
}

MlpView view(const std::vector<int>& sizes, const double* flat) {
  const int in = sizes[0], hidden = sizes[1], out = sizes[2];
  auto o = offsets(sizes, flat);
  return {{o[0], in, hidden}, {o[2], hidden, out}, {o[1], hidden}, {o[3], out}};
}

long parameter_count(int in, int hidden, int out) {
  return static_cast<long>(in) * hidden + hidden + static_cast<long>(hidden) * out + out;
}

}  // namespace

DenseParams init_mlp(int inputs, int n_classes, std::uint64_t seed, int hidden) {
  DenseParams p;
  p.layer_sizes = {inputs, hidden, n_classes};
  p.flat.resize(parameter_count(inputs, hidden, n_classes));
  std::mt19937_64 rng(mix_seed({seed, 0x6d6c70}));
  auto o = offsets(p.layer_sizes, p.flat.data());
  using Block = Eigen::Map<Eigen::VectorXd>;
  detail::fan_in_uniform(Block(o[0], static_cast<long>(inputs) * hidden), inputs, rng);
  detail::fan_in_uniform(Block(o[1], hidden), inputs, rng);
  detail::fan_in_uniform(Block(o[2], static_cast<long>(hidden) * n_classes), hidden, rng);
  detail::fan_in_uniform(Block(o[3], n_classes), hidden, rng);
  return p;
}

Eigen::MatrixXd mlp_probabilities(const DenseParams& p, const Eigen::MatrixXd& x) {
  const auto v = view(p.layer_sizes, p.flat.data());
  const Eigen::MatrixXd hidden = ((x * v.w1).rowwise() + v.b1).cwiseMax(0.0);
  return detail::softmax_rows((hidden * v.w2).rowwise() + v.b2);
}

namespace {

double loss_at(const std::vector<int>& sizes, const Eigen::VectorXd& flat,
               const Eigen::MatrixXd& x, const Labels& y, double alpha, Eigen::VectorXd* gradient) {
  const auto v = view(sizes, flat.data());
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd z1 = (x * v.w1).rowwise() + v.b1;
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd prob = detail::softmax_rows((a1 * v.w2).rowwise() + v.b2);

  double loss = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss -= std::log(std::max(prob(i, y[i]), 1e-300));
  loss /= n;
  loss += 0.5 * alpha / n * (v.w1.squaredNorm() + v.w2.squaredNorm());
  if (!gradient) return loss;

  gradient->resize(flat.size());
  auto o = offsets(sizes, gradient->data());
  const int in = sizes[0], hidden = sizes[1], out = sizes[2];
  MlpGradView g{{o[0], in, hidden}, {o[2], hidden, out}, {o[1], hidden}, {o[3], out}};

  Eigen::MatrixXd& dz2 = prob;
  for (Eigen::Index i = 0; i < x.rows(); ++i) dz2(i, y[i]) -= 1.0;
  dz2 /= n;
  g.w2.noalias() = a1.transpose() * dz2;
  g.w2 += (alpha / n) * v.w2;
  g.b2 = dz2.colwise().sum();
  Eigen::MatrixXd dz1 = dz2 * v.w2.transpose();
  dz1.array() *= (z1.array() > 0.0).cast<double>();
  g.w1.noalias() = x.transpose() * dz1;
  g.w1 += (alpha / n) * v.w1;
  g.b1 = dz1.colwise().sum();
  return loss;
}

}  // namespace

double mlp_loss(const DenseParams& p, const Eigen::MatrixXd& x, const Labels& y, double alpha,
                Eigen::VectorXd* gradient) {
  if (x.cols() != p.layer_sizes[0])
    fail(ErrorKind::invalid_argument, "MLP input width mismatch");
  return loss_at(p.layer_sizes, p.flat, x, y, alpha, gradient);
}

TrainedModel train_mlp(const Eigen::MatrixXd& x, const Labels& y, double alpha, std::uint64_t seed,
                       int n_classes, const AdamOptions& adam) {
  check_training_data(x, y, n_classes);
  if (!(alpha >= 0)) fail(ErrorKind::invalid_argument, "alpha must be non-negative");
  DenseParams p = init_mlp(static_cast<int>(x.cols()), n_classes, seed);
  detail::adam_minimize(
      p.flat,
      [&](const Eigen::VectorXd& flat, Eigen::VectorXd& grad) {
        loss_at(p.layer_sizes, flat, x, y, alpha, &grad);
      },
      adam);
  TrainedModel m;
  m.kind = ClassifierKind::mlp;
  m.hyper.alpha = alpha;
  m.seed = seed;
  m.n_classes = n_classes;
  m.params = std::move(p);
  return m;
}

}  // namespace gaitbench
