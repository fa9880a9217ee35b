#pragma once

#include <cstdint>
#include <vector>

#include "autodiff/tensor.hpp"
#include "models/param_set.hpp"

namespace pamela {

// Fully connected ReLU network.  Layer l has "layer{l}.weight" of shape
// [fan_in, fan_out] and "layer{l}.bias" of shape [1, fan_out].
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;

  std::size_t num_layers() const { return hidden_dims.size() + 1; }
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

// Glorot-uniform weights, zero biases.
ParamSet init_params(const MlpSpec& spec, std::uint64_t seed);

// x: [B, input_dim] -> [B, output_dim].
ad::Tensor forward(const MlpSpec& spec, const ParamSet& params, const ad::Tensor& x);

// Throws ShapeError unless `params` has exactly the layout init_params produces.
void check_params(const MlpSpec& spec, const ParamSet& params);

}  // namespace pamela
