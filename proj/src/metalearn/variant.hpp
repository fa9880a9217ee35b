#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pamela {

enum class Algorithm {
  Maml,
  FoMaml,
  Reptile,
  MetaSgd,
  Pamela,
  MamlQSharedMulti,  // one trainable Q reused by every inner step
  MamlQ,             // per-step trainable Q, no skips
  MamlP,             // fixed Q = alpha, trainable skip coefficients
};

enum class QGranularity {
  PerParameter,  // Q_j has the shape of theta
  PerTensor,     // one scalar per parameter tensor
};

enum class MetaGradientStyle {
  SecondOrder,  // backprop through the unrolled inner loop
  FirstOrder,   // gradient at theta_n applied to theta
  Reptile,      // average of (theta_n - theta)
};

struct VariantTraits {
  bool q_trainable = false;
  bool q_shared = false;
  bool uses_skips = false;
  bool p_trainable = false;
  bool single_step = false;
  MetaGradientStyle style = MetaGradientStyle::SecondOrder;
};

VariantTraits traits(Algorithm algorithm);

std::string_view to_string(Algorithm algorithm);
// Accepts the names produced by to_string, case-insensitively.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> all_algorithms();

std::string_view to_string(QGranularity granularity);
QGranularity parse_granularity(std::string_view name);

}  // namespace pamela
