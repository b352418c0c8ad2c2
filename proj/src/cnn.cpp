#include "adam.hpp"
#include "gaitbench/error.hpp"
#include "gaitbench/seed.hpp"

namespace gaitbench {

std::array<int, 3> conv_lengths(int length) {
  std::array<int, 3> out{};
  int l = length;
  for (std::size_t i = 0; i < kConvStack.size(); ++i) {
    const auto& c = kConvStack[i];
    l = (l + 2 * c.padding - c.kernel) / c.stride + 1;
    out[i] = l;
  }
  return out;
}

namespace {

// Activations are stored channel-major: a (channels x samples*length) matrix whose
// column n*length + t holds position t of sample n.
struct Geometry {
  std::array<int, 4> channels{};  // input + three conv outputs
  std::array<int, 4> lengths{};
  int classes = 0;
  std::array<long, 3> w_off{}, b_off{};
  long fc_w_off = 0, fc_b_off = 0, total = 0;

  Geometry(CnnShape shape, int n_classes) : classes(n_classes) {
    if (shape.channels < 1 || shape.length < 1)
      fail(ErrorKind::invalid_argument, "CNN input must have at least one channel and one position");
    channels[0] = shape.channels;
    lengths[0] = shape.length;
    const auto ls = conv_lengths(shape.length);
    long off = 0;
    for (int i = 0; i < 3; ++i) {
      const auto& c = kConvStack[i];
      channels[i + 1] = c.filters;
      lengths[i + 1] = ls[i];
      if (ls[i] < 1) fail(ErrorKind::invalid_argument, "input too short for the conv stack");
      w_off[i] = off;
      off += static_cast<long>(c.filters) * channels[i] * c.kernel;
      b_off[i] = off;
      off += c.filters;
    }
    fc_w_off = off;
    off += static_cast<long>(classes) * flat_size();
    fc_b_off = off;
    off += classes;
    total = off;
  }

  long flat_size() const { return static_cast<long>(channels[3]) * lengths[3]; }
};

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using Map = Eigen::Map<Eigen::MatrixXd>;

Eigen::MatrixXd im2col(const Eigen::MatrixXd& a, int samples, int in_len, int out_len,
                       const ConvSpec& c) {
  const int ch = static_cast<int>(a.rows());
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<long>(ch) * c.kernel,
                                               static_cast<long>(samples) * out_len);
  for (int n = 0; n < samples; ++n)
    for (int t = 0; t < out_len; ++t) {
      const long col = static_cast<long>(n) * out_len + t;
      for (int k = 0; k < c.kernel; ++k) {
        const int p = t * c.stride + k - c.padding;
        if (p < 0 || p >= in_len) continue;
        const long src = static_cast<long>(n) * in_len + p;
        for (int ci = 0; ci < ch; ++ci) cols(static_cast<long>(ci) * c.kernel + k, col) = a(ci, src);
      }
    }
  return cols;
}

Eigen::MatrixXd col2im(const Eigen::MatrixXd& cols, int ch, int samples, int in_len, int out_len,
                       const ConvSpec& c) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ch, static_cast<long>(samples) * in_len);
  for (int n = 0; n < samples; ++n)
    for (int t = 0; t < out_len; ++t) {
      const long col = static_cast<long>(n) * out_len + t;
      for (int k = 0; k < c.kernel; ++k) {
        const int p = t * c.stride + k - c.padding;
        if (p < 0 || p >= in_len) continue;
        const long dst = static_cast<long>(n) * in_len + p;
        for (int ci = 0; ci < ch; ++ci) a(ci, dst) += cols(static_cast<long>(ci) * c.kernel + k, col);
      }
    }
  return a;
}

struct Forward {
  std::array<Eigen::MatrixXd, 3> cols;  // im2col of each layer's input
  std::array<Eigen::MatrixXd, 3> pre;   // pre-activation of each layer
  Eigen::MatrixXd flat;                 // (channels*length) x samples
  Eigen::MatrixXd prob;                 // classes x samples
};

Forward forward(const Geometry& g, const Eigen::VectorXd& params, const Eigen::MatrixXd& x) {
  const int samples = static_cast<int>(x.rows());
  if (x.cols() != static_cast<long>(g.channels[0]) * g.lengths[0])
    fail(ErrorKind::invalid_argument, "CNN input width does not match its shape");
  Eigen::MatrixXd a(g.channels[0], static_cast<long>(samples) * g.lengths[0]);
  for (int n = 0; n < samples; ++n)
    for (int c = 0; c < g.channels[0]; ++c)
      for (int t = 0; t < g.lengths[0]; ++t)
        a(c, static_cast<long>(n) * g.lengths[0] + t) = x(n, static_cast<long>(c) * g.lengths[0] + t);

  Forward f;
  for (int l = 0; l < 3; ++l) {
    const auto& spec = kConvStack[l];
    ConstMap w(params.data() + g.w_off[l], spec.filters, static_cast<long>(g.channels[l]) * spec.kernel);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + g.b_off[l], spec.filters);
    f.cols[l] = im2col(a, samples, g.lengths[l], g.lengths[l + 1], spec);
    f.pre[l].noalias() = w * f.cols[l];
    f.pre[l].colwise() += b;
    a = f.pre[l].cwiseMax(0.0);
  }
  const int c3 = g.channels[3], l3 = g.lengths[3];
  f.flat.resize(g.flat_size(), samples);
  for (int n = 0; n < samples; ++n)
    for (int c = 0; c < c3; ++c)
      for (int t = 0; t < l3; ++t) f.flat(static_cast<long>(c) * l3 + t, n) = a(c, static_cast<long>(n) * l3 + t);

  ConstMap wfc(params.data() + g.fc_w_off, g.classes, g.flat_size());
  Eigen::Map<const Eigen::VectorXd> bfc(params.data() + g.fc_b_off, g.classes);
  Eigen::MatrixXd logits = wfc * f.flat;
  logits.colwise() += bfc;
  f.prob = detail::softmax_rows(logits.transpose()).transpose();
  return f;
}

double loss_at(const Geometry& g, const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
               const Labels& y, Eigen::VectorXd* gradient) {
  Forward f = forward(g, params, x);
  const int samples = static_cast<int>(x.rows());
  double loss = 0;
  for (int n = 0; n < samples; ++n) loss -= std::log(std::max(f.prob(y[n], n), 1e-300));
  loss /= samples;
  if (!gradient) return loss;

  gradient->setZero(g.total);
  Eigen::MatrixXd& dlogits = f.prob;
  for (int n = 0; n < samples; ++n) dlogits(y[n], n) -= 1.0;
  dlogits /= samples;

  ConstMap wfc(params.data() + g.fc_w_off, g.classes, g.flat_size());
  Map(gradient->data() + g.fc_w_off, g.classes, g.flat_size()).noalias() = dlogits * f.flat.transpose();
  Eigen::Map<Eigen::VectorXd>(gradient->data() + g.fc_b_off, g.classes) = dlogits.rowwise().sum();
  const Eigen::MatrixXd dflat = wfc.transpose() * dlogits;

  const int c3 = g.channels[3], l3 = g.lengths[3];
  Eigen::MatrixXd da(c3, static_cast<long>(samples) * l3);
  for (int n = 0; n < samples; ++n)
    for (int c = 0; c < c3; ++c)
      for (int t = 0; t < l3; ++t) da(c, static_cast<long>(n) * l3 + t) = dflat(static_cast<long>(c) * l3 + t, n);

  for (int l = 2; l >= 0; --l) {
    const auto& spec = kConvStack[l];
    Eigen::MatrixXd dz = da.cwiseProduct((f.pre[l].array() > 0.0).cast<double>().matrix());
    const long fan = static_cast<long>(g.channels[l]) * spec.kernel;
    Map(gradient->data() + g.w_off[l], spec.filters, fan).noalias() = dz * f.cols[l].transpose();
    Eigen::Map<Eigen::VectorXd>(gradient->data() + g.b_off[l], spec.filters) = dz.rowwise().sum();
    if (l == 0) break;
    ConstMap w(params.data() + g.w_off[l], spec.filters, fan);
    const Eigen::MatrixXd dcols = w.transpose() * dz;
    da = col2im(dcols, g.channels[l], samples, g.lengths[l], g.lengths[l + 1], spec);
  }
  return loss;
}

}  // namespace

CnnParams init_cnn(CnnShape shape, int n_classes, std::uint64_t seed) {
  const Geometry g(shape, n_classes);
  CnnParams p;
  p.shape = shape;
  p.classes = n_classes;
  p.flat.resize(g.total);
  std::mt19937_64 rng(mix_seed({seed, 0x636e6e}));
  for (int l = 0; l < 3; ++l) {
    const auto& c = kConvStack[l];
    const int fan_in = g.channels[l] * c.kernel;
    detail::fan_in_uniform(p.flat.segment(g.w_off[l], static_cast<long>(c.filters) * fan_in), fan_in, rng);
    detail::fan_in_uniform(p.flat.segment(g.b_off[l], c.filters), fan_in, rng);
  }
  const int fan_in = static_cast<int>(g.flat_size());
  detail::fan_in_uniform(p.flat.segment(g.fc_w_off, static_cast<long>(n_classes) * fan_in), fan_in, rng);
  detail::fan_in_uniform(p.flat.segment(g.fc_b_off, n_classes), fan_in, rng);
  return p;
}

double cnn_loss(const CnnParams& p, const Eigen::MatrixXd& x, const Labels& y,
                Eigen::VectorXd* gradient) {
  return loss_at(Geometry(p.shape, p.classes), p.flat, x, y, gradient);
}

Eigen::MatrixXd cnn_probabilities(const CnnParams& p, const Eigen::MatrixXd& x) {
  return forward(Geometry(p.shape, p.classes), p.flat, x).prob.transpose();
}

TrainedModel train_cnn(const Eigen::MatrixXd& x, const Labels& y, CnnShape shape,
                       std::uint64_t seed, int n_classes, const AdamOptions& adam) {
  check_training_data(x, y, n_classes);
  const Geometry g(shape, n_classes);
  CnnParams p = init_cnn(shape, n_classes, seed);
  detail::adam_minimize(
      p.flat,
      [&](const Eigen::VectorXd& flat, Eigen::VectorXd& grad) { loss_at(g, flat, x, y, &grad); },
      adam);
  TrainedModel m;
  m.kind = ClassifierKind::cnn;
  m.seed = seed;
  m.n_classes = n_classes;
  m.params = std::move(p);
  return m;
}

}  // namespace gaitbench
