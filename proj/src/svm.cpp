#include <algorithm>
#include <cmath>

#include "gaitbench/error.hpp"
#include "gaitbench/learn.hpp"

namespace gaitbench {

Eigen::MatrixXd svm_gram(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd gram = x * x.transpose();
  gram.array() += 1.0;
  return gram;
}

SvmSolveInfo solve_svm_dual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double cost,
                            Eigen::VectorXd& alpha, double tol, int max_sweeps,
                            bool record_trace) {
  const Eigen::Index n = gram.rows();
  if (!(cost > 0)) fail(ErrorKind::invalid_argument, "SVM cost must be positive");
  if (alpha.size() == n) {
    alpha = alpha.cwiseMax(0.0).cwiseMin(cost);
  } else {
    alpha = Eigen::VectorXd::Zero(n);
  }
  // u = gram * (alpha .* y): the decision value of every training row.
  Eigen::VectorXd u = gram * alpha.cwiseProduct(y);

  auto evaluate = [&](SvmSolveInfo& info) {
    double w2 = 0, hinge = 0, asum = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      w2 += alpha(i) * y(i) * u(i);
      hinge += std::max(0.0, 1.0 - y(i) * u(i));
      asum += alpha(i);
    }
    info.primal = 0.5 * w2 + cost * hinge;
    info.dual = 0.5 * w2 - asum;
    info.gap = info.primal + info.dual;
  };

  // Active-set step on the current face. With the bounded coordinates fixed, the free ones
  // move by d solving Q_FF d = -grad_F. When Q_FF is singular and the system inconsistent,
  // the least-squares residual lies in its null space and the objective falls linearly
  // along it, so that residual is followed to the box instead. Either step is cut at the
  // box with the blocking coordinate snapped to its bound, and kept only if it lowers the
  // objective, so the objective never increases.
  auto face_step = [&](SvmSolveInfo& info) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (alpha(i) > 0 && alpha(i) < cost) free.push_back(i);
    if (free.empty()) return false;
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd q(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto i = free[a];
      for (Eigen::Index b = 0; b < m; ++b) q(a, b) = y(i) * y(free[b]) * gram(i, free[b]);
      rhs(a) = 1.0 - y(i) * u(i);
    }
    const double tolerance = 1e-9 * (1.0 + rhs.norm());
    Eigen::VectorXd d = q.ldlt().solve(rhs);
    double limit = 1.0;
    if (!d.allFinite() || (q * d - rhs).norm() > tolerance) {
      d = q.completeOrthogonalDecomposition().solve(rhs);
      if (!d.allFinite()) return false;
      const Eigen::VectorXd residual = rhs - q * d;
      if (residual.norm() > tolerance) {
        d = residual;
        limit = INFINITY;
      }
    }

    double step = limit;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < m; ++a) {
      const double from = alpha(free[a]);
      const double room = d(a) < 0 ? -from / d(a) : d(a) > 0 ? (cost - from) / d(a) : INFINITY;
      if (room < step) {
        step = room;
        blocking = a;
      }
    }
    if (blocking < 0 && !std::isfinite(step)) return false;
    Eigen::VectorXd trial = alpha;
    for (Eigen::Index a = 0; a < m; ++a)
      trial(free[a]) = std::clamp(alpha(free[a]) + step * d(a), 0.0, cost);
    if (blocking >= 0) trial(free[blocking]) = d(blocking) < 0 ? 0.0 : cost;
    std::swap(trial, alpha);
    const Eigen::VectorXd saved_u = u;
    u = gram * alpha.cwiseProduct(y);
    SvmSolveInfo candidate = info;
    evaluate(candidate);
    if (candidate.dual < info.dual) {
      info.primal = candidate.primal;
      info.dual = candidate.dual;
      info.gap = candidate.gap;
      return blocking >= 0;
    }
    std::swap(trial, alpha);
    u = saved_u;
    return false;
  };
  // Face steps until one lands inside the box; each blocked step shrinks the free set.
  auto polish = [&](SvmSolveInfo& info) {
    for (Eigen::Index k = 0; k < n && face_step(info); ++k) {
    }
  };

  constexpr int kPolishEvery = 8;
  SvmSolveInfo info;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = gram(i, i);
      const double g = y(i) * u(i) - 1.0;
      const double updated = std::clamp(alpha(i) - g / q, 0.0, cost);
      const double delta = updated - alpha(i);
      if (delta != 0.0) {
        alpha(i) = updated;
        u.noalias() += (delta * y(i)) * gram.col(i);
      }
    }
    info.sweeps = sweep + 1;
    evaluate(info);
    if (info.sweeps % kPolishEvery == 0 && info.gap > tol * std::max(1.0, info.primal)) polish(info);
    if (record_trace) info.dual_trace.push_back(info.dual);
    if (info.gap <= tol * std::max(1.0, info.primal)) {
      info.converged = true;
      break;
    }
  }
  return info;
}


namespace {

TrainedModel fit_one_vs_rest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gram,
                             const Labels& y, double cost, std::uint64_t seed, int n_classes,
                             bool record_trace, std::vector<Eigen::VectorXd>* warm = nullptr) {
  check_training_data(x, y, n_classes);
  SvmParams p;
  p.weights = Eigen::MatrixXd::Zero(n_classes, x.cols());
  p.bias = Eigen::VectorXd::Zero(n_classes);
  Eigen::VectorXd target(x.rows()), alpha;
  if (warm) warm->resize(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) target(i) = y[i] == c ? 1.0 : -1.0;
    if (warm) {
      alpha = (*warm)[c];
    } else {
      alpha.resize(0);
    }
    p.solves.push_back(solve_svm_dual(gram, target, cost, alpha, 1e-4, 20000, record_trace));
    if (warm) (*warm)[c] = alpha;
    const Eigen::VectorXd coef = alpha.cwiseProduct(target);
    p.weights.row(c) = coef.transpose() * x;
    p.bias(c) = coef.sum();
  }
  TrainedModel m;
  m.kind = ClassifierKind::svm;
  m.hyper.C = cost;
  m.seed = seed;
  m.n_classes = n_classes;
  m.params = std::move(p);
  return m;
}

}  // namespace

TrainedModel train_svm_from_gram(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gram,
                                 const Labels& y, double cost, std::uint64_t seed,
                                 int n_classes) {
  return fit_one_vs_rest(x, gram, y, cost, seed, n_classes, false);
}

std::vector<TrainedModel> train_svm_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gram,
                                         const Labels& y, const std::vector<double>& costs,
                                         std::uint64_t seed, int n_classes) {
  std::vector<TrainedModel> out;
  std::vector<Eigen::VectorXd> warm;
  for (double c : costs) out.push_back(fit_one_vs_rest(x, gram, y, c, seed, n_classes, false, &warm));
  return out;
}

TrainedModel train_svm(const Eigen::MatrixXd& x, const Labels& y, double cost, std::uint64_t seed,
                       int n_classes, bool record_trace) {
  check_training_data(x, y, n_classes);
  return fit_one_vs_rest(x, svm_gram(x), y, cost, seed, n_classes, record_trace);
}

}  // namespace gaitbench
