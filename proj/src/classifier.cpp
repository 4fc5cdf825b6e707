#include "landuse/classifier.hpp"

#include <cstdint>

#include "binary_io.hpp"

namespace landuse {

LossGrad<double> loss_grad(const SoftmaxModel& model, const Dataset& dataset, const Batch& batch,
                           const Eigen::VectorXd& weights) {
  const Eigen::MatrixXd x = dataset.gather(model.stream, batch.records);
  const std::vector<ClassIndex> labels = dataset.labels(batch.records);
  return loss_grad(model, x, std::span<const ClassIndex>(labels), weights);
}

double Schedule::learning_rate(int epoch) const {
  return initial_lr / std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

void Schedule::validate() const {
  if (!(initial_lr >= 0.0) || !std::isfinite(initial_lr)) throw ConfigError("learning rate must be >= 0");
  if (!(decay_factor > 0.0)) throw ConfigError("decay factor must be > 0");
  if (decay_every < 1) throw ConfigError("decay interval must be >= 1 epoch");
  if (total_epochs < 0) throw ConfigError("epoch count must be >= 0");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(domain_ratio >= 0.0 && domain_ratio <= 1.0)) throw ConfigError("domain ratio must lie in [0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

void SgdOptimizer::step(SoftmaxModel& model, const LossGrad<double>& grad, double lr) {
  Eigen::MatrixXd gw = grad.grad_weights;
  if (weight_decay_ != 0.0) gw += weight_decay_ * model.weights;
  if (momentum_ != 0.0) {
    if (velocity_w_.size() == 0) {
      velocity_w_ = Eigen::MatrixXd::Zero(gw.rows(), gw.cols());
      velocity_b_ = Eigen::VectorXd::Zero(grad.grad_bias.size());
    }
    velocity_w_ = momentum_ * velocity_w_ + gw;
    velocity_b_ = momentum_ * velocity_b_ + grad.grad_bias;
    model.weights -= lr * velocity_w_;
    model.bias -= lr * velocity_b_;
  } else {
    model.weights -= lr * gw;
    model.bias -= lr * grad.grad_bias;
  }
}

namespace {

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1));
}

}  // namespace

TrainResult train_weighted(SoftmaxModel model, const Dataset& dataset, const Schedule& schedule,
                           const SampleWeigher& weigher, const Dataset* validation) {
  schedule.validate();
  if (static_cast<std::size_t>(model.dim()) != dataset.dim(model.stream))
    throw DomainError("model '" + model.stream + "' has dimension " + std::to_string(model.dim()) +
                      " but the dataset stream has " + std::to_string(dataset.dim(model.stream)));

  TrainResult result;
  SgdOptimizer opt(schedule.momentum, schedule.weight_decay);
  for (int epoch = 0; epoch < schedule.total_epochs; ++epoch) {
    const double lr = schedule.learning_rate(epoch);
    const auto batches =
        stratified_batches(dataset, schedule.batch_size, schedule.domain_ratio, epoch_seed(schedule.seed, epoch));
    double loss_sum = 0.0;
    for (const Batch& batch : batches) {
      const Eigen::MatrixXd x = dataset.gather(model.stream, batch.records);
      const std::vector<ClassIndex> labels = dataset.labels(batch.records);
      const Eigen::VectorXd weights =
          weigher ? weigher(forward_batch(model, x)) : Eigen::VectorXd::Ones(x.cols()).eval();
      const LossGrad<double> g = loss_grad(model, x, std::span<const ClassIndex>(labels), weights);
      loss_sum += g.loss;
      if (lr != 0.0) opt.step(model, g, lr);
    }
    result.epoch_loss.push_back(batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size()));
    if (validation) result.val_accuracy.push_back(accuracy(model, *validation));
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(SoftmaxModel model, const Dataset& dataset, const Schedule& schedule, const Dataset* validation) {
  return train_weighted(std::move(model), dataset, schedule, SampleWeigher{}, validation);
}

std::vector<ClassIndex> predict_classes(const SoftmaxModel& model, const Dataset& dataset) {
  std::vector<ClassIndex> out;
  out.reserve(dataset.size());
  for (const ImageRecord& r : dataset.records()) {
    auto it = r.features.find(model.stream);
    if (it == r.features.end()) throw DomainError("record '" + r.id + "' lacks stream '" + model.stream + "'");
    out.push_back(argmax(forward(model, it->second)));
  }
  return out;
}

double accuracy(const SoftmaxModel& model, const Dataset& dataset) {
  const auto pred = predict_classes(model, dataset);
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].label) continue;
    ++total;
    hits += pred[i] == *dataset[i].label;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::string serialize_model(const SoftmaxModel& model) {
  std::string out = "LUSM1";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.classes()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.stream.size()));
  out += model.stream;
  for (Eigen::Index r = 0; r < model.classes(); ++r)
    for (Eigen::Index c = 0; c < model.dim(); ++c) detail::put_le<double>(out, model.weights(r, c));
  for (Eigen::Index r = 0; r < model.classes(); ++r) detail::put_le<double>(out, model.bias(r));
  return out;
}

SoftmaxModel deserialize_model(std::string_view bytes) {
  detail::Reader in(bytes, "model file");
  if (bytes.size() < 5 || bytes.substr(0, 5) != "LUSM1")
    throw LoadError("model file: bad magic, expected LUSM1 softmax model format");
  in.bytes(5);
  const auto n = in.get<std::uint32_t>();
  const auto d = in.get<std::uint32_t>();
  const auto len = in.get<std::uint32_t>();
  if (n == 0 || d == 0) throw LoadError("model file: corrupt header (zero dimension)");
  if (len > in.remaining()) throw LoadError("model file: truncated file");
  SoftmaxModel m;
  m.stream = std::string(in.bytes(len));
  const std::uint64_t expected = (static_cast<std::uint64_t>(n) * d + n) * sizeof(double);
  if (in.remaining() < expected) throw LoadError("model file: truncated file");
  if (in.remaining() > expected) throw LoadError("model file: corrupt header (trailing bytes)");
  m.weights.resize(n, d);
  m.bias.resize(n);
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) m.weights(r, c) = in.get<double>();
  for (Eigen::Index r = 0; r < m.bias.size(); ++r) m.bias(r) = in.get<double>();
  if (!m.weights.allFinite() || !m.bias.allFinite()) throw LoadError("model file: non-finite weights");
  return m;
}

void save_model(const SoftmaxModel& model, const std::filesystem::path& path) {
  detail::write_file(path.string(), serialize_model(model));
}

SoftmaxModel load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path.string()));
}

}  // namespace landuse
