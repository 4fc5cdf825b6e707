#include "landuse/adaptive.hpp"

namespace landuse {

std::string_view to_string(GateMode mode) { return mode == GateMode::Hard ? "hard" : "soft"; }

GateMode parse_gate_mode(std::string_view text) {
  if (text == "hard") return GateMode::Hard;
  if (text == "soft") return GateMode::Soft;
  throw ConfigError("gate.mode must be 'hard' or 'soft', got '" + std::string(text) + "'");
}

void GateConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("gate.threshold must lie in [0, 1]");
  finetune.validate();
}

Eigen::VectorXd gate_weights(const Eigen::MatrixXd& scores, const GateConfig& cfg) {
  Eigen::VectorXd w(scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) w(j) = gate(scores.col(j), cfg).weight;
  return w;
}

TrainResult adaptive_finetune(SoftmaxModel model, const Dataset& dataset, const GateConfig& cfg,
                              const Dataset* validation) {
  cfg.validate();
  return train_weighted(
      std::move(model), dataset, cfg.finetune,
      [&cfg](const Eigen::MatrixXd& scores) { return gate_weights(scores, cfg); }, validation);
}

}  // namespace landuse
