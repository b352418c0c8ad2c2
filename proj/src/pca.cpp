#include <Eigen/SVD>
#include <cmath>

#include "gaitbench/error.hpp"
#include "gaitbench/preprocess.hpp"

namespace gaitbench {

PcaModel pca_fit(const Eigen::MatrixXd& rows, double threshold) {
  if (rows.rows() < 2) fail(ErrorKind::invalid_argument, "PCA needs at least 2 observations");
  if (rows.cols() < 1) fail(ErrorKind::invalid_argument, "PCA needs at least 1 variable");
  if (!rows.allFinite()) fail(ErrorKind::numerical, "PCA input contains non-finite values");

  PcaModel model;
  model.mean = rows.colwise().mean();
  const Eigen::MatrixXd centred = rows.rowwise() - model.mean;
  const double scale = rows.cwiseAbs().maxCoeff();

  auto degenerate = [&] {
    model.degenerate = true;
    model.components = Eigen::MatrixXd::Zero(1, rows.cols());
    model.components(0, 0) = 1.0;
    model.explained = {0.0};
    model.k = 1;
    return model;
  };
  if (!(centred.cwiseAbs().maxCoeff() > 1e-12 * scale)) return degenerate();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();

  // Numerical rank: singular values below this are rounding noise.
  const double cutoff =
      sigma(0) * 1e-12 * static_cast<double>(std::max(rows.rows(), rows.cols()));
  int rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  if (rank == 0) return degenerate();

  model.components = svd.matrixV().leftCols(rank).transpose();
  for (int i = 0; i < rank; ++i) {
    Eigen::Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0) model.components.row(i) *= -1.0;
  }

  double total = 0;
  for (int i = 0; i < rank; ++i) total += sigma(i) * sigma(i);
  model.explained.resize(rank);
  for (int i = 0; i < rank; ++i) model.explained[i] = sigma(i) * sigma(i) / total;

  double cumulative = 0;
  model.k = rank;
  for (int i = 0; i < rank; ++i) {
    cumulative += model.explained[i];
    if (cumulative >= threshold) {
      model.k = i + 1;
      break;
    }
  }
  return model;
}

Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.dimension())
    fail(ErrorKind::invalid_argument, "PCA projection length mismatch: " +
                                          std::to_string(rows.cols()) + " vs " +
                                          std::to_string(model.dimension()));
  const Eigen::MatrixXd centred = rows.rowwise() - model.mean;
  return centred * model.components.topRows(model.k).transpose();
}

FeatureVector pca_project(const PcaModel& model, std::span<const double> vector) {
  Eigen::Map<const Eigen::RowVectorXd> row(vector.data(), static_cast<Eigen::Index>(vector.size()));
  const Eigen::MatrixXd scores = pca_project_rows(model, row);
  FeatureVector out;
  out.values.assign(scores.data(), scores.data() + scores.size());
  out.layout.reduction = Reduction::pca;
  out.layout.components = model.k;
  return out;
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, std::span<const double> scores) {
  if (static_cast<int>(scores.size()) != model.k)
    fail(ErrorKind::invalid_argument, "PCA reconstruction expects " + std::to_string(model.k) +
                                          " scores");
  Eigen::Map<const Eigen::RowVectorXd> s(scores.data(), static_cast<Eigen::Index>(scores.size()));
  return (s * model.components.topRows(model.k) + model.mean).transpose();
}

}  // namespace gaitbench
