#pragma once

// First-order optimizers over a flat parameter vector. Plain SGD for the
// alignment map, RMSProp for the task networks. State lives in the optimizer;
// callers own the parameters and hand in the gradient each step.

#include <cstdint>

#include "lpa/types.hpp"

namespace lpa {

enum class OptAlgorithm { sgd, rmsprop };

OptAlgorithm parse_opt_algorithm(const std::string& name);
const char* opt_algorithm_name(OptAlgorithm a);

struct OptimizerConfig {
  OptAlgorithm algorithm = OptAlgorithm::sgd;
  double learning_rate = 1e-3;
  Index epochs = 300;
  // 0 means full-batch: the effective batch size becomes the training-set
  // size, so every realized batch still has size >= 1.
  Index batch_size = 0;
  std::uint64_t seed = 0;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;

  void validate() const;
};

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, Index n_params);

  // In-place update of params given the loss gradient at params.
  void step(Eigen::Ref<Vector> params, Eigen::Ref<const Vector> grad);

 private:
  OptimizerConfig cfg_;
  Vector mean_sq_;  // RMSProp running average of squared gradients
};

}  // namespace lpa
