#include "metalearn/adam.hpp"

#include <cmath>

#include "common/error.hpp"

namespace pamela {

AdamState AdamState::zeros_like(const ParamSet& params) {
  AdamState s;
  s.m = params.transform([](const ParamSet::Entry& e) { return ad::Tensor::zeros(e.tensor.shape()); });
  s.v = s.m;
  return s;
}

ParamSet adam_update(const ParamSet& params, const ParamSet& grads, AdamState& state, double lr) {
  params.require_congruent(grads, "adam_update");
  params.require_congruent(state.m, "adam_update (state)");
  const std::int64_t t = state.t + 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));

  std::vector<ad::Tensor> new_p, new_m, new_v;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto p = params.tensor(i).values();
    const auto g = grads.tensor(i).values();
    const auto m = state.m.tensor(i).values();
    const auto v = state.v.tensor(i).values();
    std::vector<double> po(p.size()), mo(p.size()), vo(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      mo[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      vo[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = mo[k] / c1;
      const double vhat = vo[k] / c2;
      po[k] = p[k] - lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    const auto& shape = params.tensor(i).shape();
    new_p.emplace_back(shape, std::move(po));
    new_m.emplace_back(shape, std::move(mo));
    new_v.emplace_back(shape, std::move(vo));
  }
  state.m = state.m.with_tensors(std::move(new_m));
  state.v = state.v.with_tensors(std::move(new_v));
  state.t = t;
  return params.with_tensors(std::move(new_p));
}

ParamSet sgd_update(const ParamSet& params, const ParamSet& grads, double lr) {
  return params.zip(
      grads,
      [lr](const ad::Tensor& p, const ad::Tensor& g) {
        std::vector<double> out(p.numel());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = p[k] - lr * g[k];
        return ad::Tensor(p.shape(), std::move(out));
      },
      "sgd_update");
}

Json to_json(const AdamState& state) {
  Json j;
  j["t"] = state.t;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["eps"] = state.eps;
  j["m"] = to_json(state.m);
  j["v"] = to_json(state.v);
  return j;
}

AdamState adam_state_from_json(const Json& j) {
  AdamState s;
  s.t = j.at("t").get<std::int64_t>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
  s.m = paramset_from_json(j.at("m"));
  s.v = paramset_from_json(j.at("v"));
  s.m.require_congruent(s.v, "Adam state");
  return s;
}

}  // namespace pamela
