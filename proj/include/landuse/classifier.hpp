#ifndef LANDUSE_CLASSIFIER_HPP
#define LANDUSE_CLASSIFIER_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landuse/dataset.hpp"
#include "landuse/error.hpp"
#include "landuse/taxonomy.hpp"

namespace landuse {

/// Linear softmax classifier for one feature stream: scores = softmax(W x + b).
template <typename Scalar>
struct BasicSoftmaxModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;  // n x D
  Vector bias;     // n
  std::string stream;

  Eigen::Index classes() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }
  bool operator==(const BasicSoftmaxModel& o) const {
    return stream == o.stream && weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           weights == o.weights && bias == o.bias;
  }
};

using SoftmaxModel = BasicSoftmaxModel<double>;

/// Probability distribution over the classes of one level.
using ScoreVector = Eigen::VectorXd;

/// Zero-initialised model (uniform scores for every input).
template <typename Scalar = double>
BasicSoftmaxModel<Scalar> init_model(Eigen::Index classes, Eigen::Index dim, std::string stream) {
  if (classes < 1 || dim < 1) throw DomainError("model needs at least one class and one feature");
  return {BasicSoftmaxModel<Scalar>::Matrix::Zero(classes, dim), BasicSoftmaxModel<Scalar>::Vector::Zero(classes),
          std::move(stream)};
}

/// Column-wise softmax with max subtraction, safe for arbitrary finite logits.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_columns(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sums = out.colwise().sum();
  out.array().rowwise() /= sums.array();
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  static_assert(Derived::ColsAtCompileTime == 1 || Derived::ColsAtCompileTime == Eigen::Dynamic);
  return softmax_columns(logits.derived()).col(0);
}

/// Nonnegative entries summing to one within `tol`.
template <typename Derived>
bool is_distribution(const Eigen::MatrixBase<Derived>& y, double tol = 1e-9) {
  if (y.size() == 0 || !y.allFinite() || (y.array() < 0).any()) return false;
  return std::abs(static_cast<double>(y.sum()) - 1.0) <= tol;
}

/// Scores for one feature vector. Throws DomainError on dimension mismatch.
template <typename Scalar, typename Derived>
typename BasicSoftmaxModel<Scalar>::Vector forward(const BasicSoftmaxModel<Scalar>& model,
                                                   const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw DomainError("feature vector has " + std::to_string(x.size()) + " entries, model '" + model.stream +
                      "' expects " + std::to_string(model.dim()));
  return softmax((model.weights * x + model.bias).eval());
}

/// Scores for a D x m batch of column feature vectors (n x m result).
template <typename Scalar, typename Derived>
typename BasicSoftmaxModel<Scalar>::Matrix forward_batch(const BasicSoftmaxModel<Scalar>& model,
                                                         const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != model.dim())
    throw DomainError("feature batch has dimension " + std::to_string(x.rows()) + ", model '" + model.stream +
                      "' expects " + std::to_string(model.dim()));
  return softmax_columns(((model.weights * x).colwise() + model.bias).eval());
}

/// Index of the largest entry, lowest index on ties.
template <typename Derived>
ClassIndex argmax(const Eigen::MatrixBase<Derived>& y) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < y.size(); ++i)
    if (y(i) > y(best)) best = i;
  return static_cast<ClassIndex>(best);
}

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  typename BasicSoftmaxModel<Scalar>::Matrix grad_weights;
  typename BasicSoftmaxModel<Scalar>::Vector grad_bias;
};

/**
 * Weighted-mean cross-entropy over a D x m batch and its gradient:
 *   loss = sum_i w_i CE_i / sum_i w_i.
 * All-zero weights give zero loss and zero gradients.
 */
template <typename Scalar, typename Derived, typename WeightDerived>
LossGrad<Scalar> loss_grad(const BasicSoftmaxModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                           std::span<const ClassIndex> labels, const Eigen::MatrixBase<WeightDerived>& weights) {
  const Eigen::Index m = x.cols();
  if (static_cast<Eigen::Index>(labels.size()) != m || weights.size() != m)
    throw DomainError("batch, label and weight counts differ");
  if ((weights.array() < 0).any() || !weights.allFinite()) throw DomainError("sample weights must be finite and >= 0");

  LossGrad<Scalar> out;
  out.grad_weights = BasicSoftmaxModel<Scalar>::Matrix::Zero(model.classes(), model.dim());
  out.grad_bias = BasicSoftmaxModel<Scalar>::Vector::Zero(model.classes());
  const Scalar total = weights.sum();
  if (total == Scalar(0)) return out;

  typename BasicSoftmaxModel<Scalar>::Matrix logits = (model.weights * x).colwise() + model.bias;
  typename BasicSoftmaxModel<Scalar>::Matrix delta = softmax_columns(logits);
  for (Eigen::Index j = 0; j < m; ++j) {
    const ClassIndex y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= model.classes()) throw DomainError("label " + std::to_string(y) + " out of range");
    const Scalar w = weights(j);
    if (w != Scalar(0)) {
      const Scalar zmax = logits.col(j).maxCoeff();
      const Scalar lse = zmax + std::log((logits.col(j).array() - zmax).exp().sum());
      out.loss += w * (lse - logits(y, j));
    }
    delta(y, j) -= Scalar(1);
    delta.col(j) *= w / total;
  }
  out.loss /= total;
  out.grad_weights.noalias() = delta * x.transpose();
  out.grad_bias = delta.rowwise().sum();
  return out;
}

/// Gathers `batch` from `dataset` for the model's stream, then calls loss_grad.
LossGrad<double> loss_grad(const SoftmaxModel& model, const Dataset& dataset, const Batch& batch,
                           const Eigen::VectorXd& weights);

/// SGD schedule: lr(e) = initial_lr / decay_factor^floor(e / decay_every).
struct Schedule {
  double initial_lr = 0.01;
  double decay_factor = 10.0;
  int decay_every = 5;
  int total_epochs = 12;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double domain_ratio = 0.5;  // share of each batch drawn from domain A
  double momentum = 0.0;
  double weight_decay = 0.0;

  double learning_rate(int epoch) const;
  void validate() const;
};

/// Plain SGD with optional momentum and L2 weight decay on W.
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(SoftmaxModel& model, const LossGrad<double>& grad, double lr);

 private:
  double momentum_;
  double weight_decay_;
  Eigen::MatrixXd velocity_w_;
  Eigen::VectorXd velocity_b_;
};

struct TrainResult {
  SoftmaxModel model;
  std::vector<double> epoch_loss;    // mean pre-update batch loss per epoch
  std::vector<double> val_accuracy;  // per epoch, only when validation data is given
};

/// Maps the pre-update scores of a batch (n x m) to per-sample loss weights.
using SampleWeigher = std::function<Eigen::VectorXd(const Eigen::MatrixXd& scores)>;

/// SGD over stratified batches; `weigher` sets per-sample weights each step.
TrainResult train_weighted(SoftmaxModel model, const Dataset& dataset, const Schedule& schedule,
                           const SampleWeigher& weigher, const Dataset* validation = nullptr);

/// SGD with unit sample weights.
TrainResult train(SoftmaxModel model, const Dataset& dataset, const Schedule& schedule,
                  const Dataset* validation = nullptr);

/// argmax prediction per record for the model's stream.
std::vector<ClassIndex> predict_classes(const SoftmaxModel& model, const Dataset& dataset);
/// Fraction of labeled records whose argmax matches the label.
double accuracy(const SoftmaxModel& model, const Dataset& dataset);

/// Binary model format: "LUSM1", u32 n, u32 D, u32 name length, name, W row-major f64, b f64.
std::string serialize_model(const SoftmaxModel& model);
SoftmaxModel deserialize_model(std::string_view bytes);
void save_model(const SoftmaxModel& model, const std::filesystem::path& path);
SoftmaxModel load_model(const std::filesystem::path& path);

}  // namespace landuse

#endif  // LANDUSE_CLASSIFIER_HPP
