#include "models/mlp.hpp"

#include <cmath>
#include <string>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace pamela {

std::vector<std::size_t> MlpSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(output_dim);
  return dims;
}

std::size_t MlpSpec::parameter_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l] * dims[l + 1] + dims[l + 1];
  return n;
}

void MlpSpec::validate() const {
  if (input_dim == 0) throw ValueError("MlpSpec: input_dim must be >= 1");
  if (output_dim == 0) throw ValueError("MlpSpec: output_dim must be >= 1");
  for (auto h : hidden_dims)
    if (h == 0) throw ValueError("MlpSpec: hidden dims must be >= 1");
}

ParamSet init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, {0x1417}));
  const auto dims = spec.layer_dims();
  ParamSet params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    const std::string prefix = "layer" + std::to_string(l);
    params.add(prefix + ".weight", ad::Tensor({fan_in, fan_out}, std::move(w)), static_cast<int>(l));
    params.add(prefix + ".bias", ad::Tensor::zeros({1, fan_out}), static_cast<int>(l));
  }
  return params;
}

void check_params(const MlpSpec& spec, const ParamSet& params) {
  const auto dims = spec.layer_dims();
  if (params.size() != 2 * (dims.size() - 1))
    throw ShapeError("mlp: expected " + std::to_string(2 * (dims.size() - 1)) + " parameter tensors, got " +
                     std::to_string(params.size()));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto& w = params[2 * l];
    const auto& b = params[2 * l + 1];
    const std::string prefix = "layer" + std::to_string(l);
    if (w.name != prefix + ".weight" || b.name != prefix + ".bias")
      throw ShapeError("mlp: unexpected parameter names '" + w.name + "', '" + b.name + "' for layer " +
                       std::to_string(l));
    if (w.tensor.shape() != ad::Shape{dims[l], dims[l + 1]} || b.tensor.shape() != ad::Shape{1, dims[l + 1]})
      throw ShapeError("mlp: layer " + std::to_string(l) + " has shapes " + ad::shape_str(w.tensor.shape()) + " and " +
                       ad::shape_str(b.tensor.shape()));
  }
}

ad::Tensor forward(const MlpSpec& spec, const ParamSet& params, const ad::Tensor& x) {
  check_params(spec, params);
  if (x.rank() != 2 || x.dim(1) != spec.input_dim)
    throw ShapeError("mlp forward: input of shape " + ad::shape_str(x.shape()) + " does not match input_dim " +
                     std::to_string(spec.input_dim));
  ad::Tensor h = x;
  const std::size_t layers = spec.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::broadcast_add_bias(ad::matmul(h, params.tensor(2 * l)), params.tensor(2 * l + 1));
    if (l + 1 < layers) h = ad::relu(h);
  }
  return h;
}

}  // namespace pamela
