#ifndef LANDUSE_ADAPTIVE_HPP
#define LANDUSE_ADAPTIVE_HPP

#include "landuse/classifier.hpp"

namespace landuse {

enum class GateMode { Hard, Soft };
std::string_view to_string(GateMode mode);
GateMode parse_gate_mode(std::string_view text);

struct GateConfig {
  GateMode mode = GateMode::Hard;
  double threshold = 0.5;
  /// Soft mode only: weight samples by p instead of 1 - p.
  bool weight_by_p = false;
  Schedule finetune{1e-5, 10.0, 1, 4, 256, 0, 0.5, 0.0, 0.0};

  void validate() const;
};

struct GateDecision {
  double p = 0.0;       // probability of discarding the sample
  double weight = 1.0;  // multiplier on the sample's loss
};

/**
 * Discard probability of a score vector,
 *   p = max(0, 2 - exp|max(y) - mean(y)|).
 * Near-uniform scores give p close to 1; confident scores give 0.
 * Throws DomainError unless `y` is a distribution.
 */
template <typename Derived>
double discard_probability(const Eigen::MatrixBase<Derived>& y) {
  if (!is_distribution(y)) throw DomainError("discard probability needs a probability distribution");
  // y sums to one, so its mean is 1/n; this keeps p independent of summation order
  const double gap = std::abs(static_cast<double>(y.maxCoeff()) - 1.0 / static_cast<double>(y.size()));
  return std::max(0.0, 2.0 - std::exp(gap));
}

/// Hard: keep (weight 1) iff p < threshold. Soft: weight 1 - p.
template <typename Derived>
GateDecision gate(const Eigen::MatrixBase<Derived>& y, const GateConfig& cfg) {
  GateDecision d;
  d.p = discard_probability(y);
  if (cfg.mode == GateMode::Hard)
    d.weight = d.p < cfg.threshold ? 1.0 : 0.0;
  else
    d.weight = cfg.weight_by_p ? d.p : 1.0 - d.p;
  return d;
}

/// Per-column gate weights for an n x m score matrix.
Eigen::VectorXd gate_weights(const Eigen::MatrixXd& scores, const GateConfig& cfg);

/**
 * Second-stage fine-tuning: each batch is scored by the current model, every
 * sample is gated from those scores, and one weighted SGD step is taken with
 * the fine-tune schedule.
 */
TrainResult adaptive_finetune(SoftmaxModel model, const Dataset& dataset, const GateConfig& cfg,
                              const Dataset* validation = nullptr);

}  // namespace landuse

#endif  // LANDUSE_ADAPTIVE_HPP
