#include "lpa/optimizer.hpp"

#include <cmath>
#include <string>

namespace lpa {

OptAlgorithm parse_opt_algorithm(const std::string& name) {
  if (name == "sgd") return OptAlgorithm::sgd;
  if (name == "rmsprop") return OptAlgorithm::rmsprop;
  throw ConfigError("unknown optimizer: '" + name + "' (expected sgd or rmsprop)");
}

const char* opt_algorithm_name(OptAlgorithm a) {
  return a == OptAlgorithm::sgd ? "sgd" : "rmsprop";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 1, or 0 for full-batch");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    throw ConfigError("rmsprop_decay must lie in (0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) throw ConfigError("rmsprop_epsilon must be positive");
}

Optimizer::Optimizer(const OptimizerConfig& cfg, Index n_params) : cfg_(cfg) {
  cfg_.validate();
  if (n_params < 1) throw ConfigError("optimizer needs at least one parameter");
  if (cfg_.algorithm == OptAlgorithm::rmsprop) mean_sq_ = Vector::Zero(n_params);
}

void Optimizer::step(Eigen::Ref<Vector> params, Eigen::Ref<const Vector> grad) {
  if (grad.size() != params.size()) throw ConfigError("gradient size mismatch");
  switch (cfg_.algorithm) {
    case OptAlgorithm::sgd:
      params -= cfg_.learning_rate * grad;
      break;
    case OptAlgorithm::rmsprop:
      mean_sq_ = cfg_.rmsprop_decay * mean_sq_ +
                 (1.0 - cfg_.rmsprop_decay) * grad.cwiseProduct(grad);
      params -= cfg_.learning_rate *
                grad.cwiseQuotient((mean_sq_.cwiseSqrt().array() + cfg_.rmsprop_epsilon).matrix());
      break;
  }
}

}  // namespace lpa
