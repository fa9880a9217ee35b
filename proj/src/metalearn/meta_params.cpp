#include "metalearn/meta_params.hpp"

#include <string>

#include "common/error.hpp"

namespace pamela {

bool is_skip_step(int j, int w) { return w != kNoSkip && w >= 1 && j >= w && j % w == 0; }

std::vector<int> skip_steps(int n, int w) {
  std::vector<int> out;
  for (int j = 0; j < n; ++j)
    if (is_skip_step(j, w)) out.push_back(j);
  return out;
}

const ParamSet& MetaParams::q_at(int j) const {
  if (j < 0 || j >= steps) throw ValueError("MetaParams: step " + std::to_string(j) + " out of range");
  return q[shared_q ? 0 : static_cast<std::size_t>(j)];
}

const ParamSet* MetaParams::p_at(int j) const {
  const auto it = p.find(j);
  return it == p.end() ? nullptr : &it->second;
}

void MetaParams::validate(const ParamSet& theta) const {
  if (steps < 0) throw ValueError("MetaParams: negative step count");
  if (interval_w < 1) throw ValueError("MetaParams: interval w must be >= 1");
  const std::size_t expected_q = steps == 0 ? 0 : (shared_q ? 1 : static_cast<std::size_t>(steps));
  if (q.size() != expected_q)
    throw ValueError("MetaParams: expected " + std::to_string(expected_q) + " Q sets, found " + std::to_string(q.size()));
  for (std::size_t j = 0; j < q.size(); ++j) {
    const auto& qj = q[j];
    if (qj.size() != theta.size()) throw ShapeError("MetaParams: Q_" + std::to_string(j) + " entry count differs from theta");
    for (std::size_t i = 0; i < qj.size(); ++i) {
      if (qj[i].name != theta[i].name)
        throw ShapeError("MetaParams: Q_" + std::to_string(j) + " entry '" + qj[i].name + "' vs theta '" + theta[i].name + "'");
      if (qj[i].tensor.rank() != 0 && qj[i].tensor.shape() != theta[i].tensor.shape())
        throw ShapeError("MetaParams: Q_" + std::to_string(j) + " '" + qj[i].name + "' has shape " +
                         ad::shape_str(qj[i].tensor.shape()) + ", theta has " + ad::shape_str(theta[i].tensor.shape()));
    }
  }
  const auto keys = skip_steps(steps, interval_w);
  if (p.size() != keys.size()) throw ValueError("MetaParams: P keys do not match the skip steps for n and w");
  for (int k : keys) {
    const auto* pj = p_at(k);
    if (!pj) throw ValueError("MetaParams: missing P for skip step " + std::to_string(k));
    if (pj->size() != theta.size()) throw ShapeError("MetaParams: P_" + std::to_string(k) + " entry count differs from theta");
    for (std::size_t i = 0; i < pj->size(); ++i) {
      if ((*pj)[i].name != theta[i].name || (*pj)[i].tensor.rank() != 0)
        throw ShapeError("MetaParams: P_" + std::to_string(k) + " entry '" + (*pj)[i].name + "' must be a scalar for '" +
                         theta[i].name + "'");
    }
  }
}

namespace {

std::string q_prefix(const MetaParams& phi, std::size_t j) {
  return phi.shared_q ? std::string("q/") : "q" + std::to_string(j) + "/";
}

}  // namespace

ParamSet MetaParams::trainable() const {
  ParamSet flat;
  if (q_trainable)
    for (std::size_t j = 0; j < q.size(); ++j)
      for (const auto& e : q[j]) flat.add(q_prefix(*this, j) + e.name, e.tensor, e.layer);
  if (p_trainable)
    for (const auto& [k, pk] : p)
      for (const auto& e : pk) flat.add("p" + std::to_string(k) + "/" + e.name, e.tensor, e.layer);
  return flat;
}

MetaParams MetaParams::with_trainable(const ParamSet& flat) const {
  trainable().require_congruent(flat, "MetaParams::with_trainable");
  MetaParams out = *this;
  std::size_t idx = 0;
  if (q_trainable)
    for (auto& qj : out.q) {
      std::vector<ad::Tensor> ts;
      for (std::size_t i = 0; i < qj.size(); ++i) ts.push_back(flat.tensor(idx++));
      qj = qj.with_tensors(std::move(ts));
    }
  if (p_trainable)
    for (auto& [k, pk] : out.p) {
      std::vector<ad::Tensor> ts;
      for (std::size_t i = 0; i < pk.size(); ++i) ts.push_back(flat.tensor(idx++));
      pk = pk.with_tensors(std::move(ts));
    }
  return out;
}

MetaParams MetaParams::bind(ad::Graph& graph) const {
  MetaParams out = *this;
  if (q_trainable)
    for (auto& qj : out.q) qj = qj.bind(graph);
  if (p_trainable)
    for (auto& [k, pk] : out.p) pk = pk.bind(graph);
  return out;
}

MetaParams MetaParams::detached() const {
  MetaParams out = *this;
  for (auto& qj : out.q) qj = qj.detached();
  for (auto& [k, pk] : out.p) pk = pk.detached();
  return out;
}

bool MetaParams::bit_equal(const MetaParams& other) const {
  if (steps != other.steps || interval_w != other.interval_w || shared_q != other.shared_q ||
      q_trainable != other.q_trainable || p_trainable != other.p_trainable || q.size() != other.q.size() ||
      p.size() != other.p.size())
    return false;
  for (std::size_t j = 0; j < q.size(); ++j)
    if (!q[j].bit_equal(other.q[j])) return false;
  for (const auto& [k, pk] : p) {
    const auto* o = other.p_at(k);
    if (!o || !pk.bit_equal(*o)) return false;
  }
  return true;
}

int effective_steps(Algorithm variant, int n) { return traits(variant).single_step ? 1 : n; }

int effective_interval(Algorithm variant, int w) { return traits(variant).uses_skips ? w : kNoSkip; }

MetaParams build_meta_params(const MlpSpec& spec, int n, int w, Algorithm variant, double alpha0,
                             QGranularity granularity) {
  if (n < 1) throw ValueError("build_meta_params: n must be >= 1");
  if (w < 1) throw ValueError("build_meta_params: w must be >= 1");
  const VariantTraits t = traits(variant);
  const ParamSet theta = init_params(spec, 0);

  MetaParams phi;
  phi.steps = effective_steps(variant, n);
  phi.interval_w = effective_interval(variant, w);
  phi.shared_q = t.q_shared;
  phi.q_trainable = t.q_trainable;
  phi.p_trainable = t.p_trainable;

  const ParamSet q0 = theta.transform([&](const ParamSet::Entry& e) {
    return granularity == QGranularity::PerParameter ? ad::Tensor::full(e.tensor.shape(), alpha0)
                                                     : ad::Tensor::scalar(alpha0);
  });
  const std::size_t q_count = phi.shared_q ? 1 : static_cast<std::size_t>(phi.steps);
  phi.q.assign(q_count, q0);
  const ParamSet p0 = theta.transform([](const ParamSet::Entry&) { return ad::Tensor::scalar(0.0); });
  for (int k : skip_steps(phi.steps, phi.interval_w)) phi.p.emplace(k, p0);
  return phi;
}

Json to_json(const MetaParams& phi) {
  Json j;
  j["steps"] = phi.steps;
  j["w"] = phi.interval_w == kNoSkip ? Json(nullptr) : Json(phi.interval_w);
  j["shared_q"] = phi.shared_q;
  j["q_trainable"] = phi.q_trainable;
  j["p_trainable"] = phi.p_trainable;
  Json qs = Json::array();
  for (const auto& qj : phi.q) qs.push_back(to_json(qj));
  j["q"] = std::move(qs);
  Json ps = Json::object();
  for (const auto& [k, pk] : phi.p) ps[std::to_string(k)] = to_json(pk);
  j["p"] = std::move(ps);
  return j;
}

MetaParams meta_params_from_json(const Json& j) {
  MetaParams phi;
  phi.steps = j.at("steps").get<int>();
  phi.interval_w = j.at("w").is_null() ? kNoSkip : j.at("w").get<int>();
  phi.shared_q = j.value("shared_q", false);
  phi.q_trainable = j.value("q_trainable", true);
  phi.p_trainable = j.value("p_trainable", true);
  for (const auto& qj : j.at("q")) phi.q.push_back(paramset_from_json(qj));
  for (const auto& [k, pk] : j.at("p").items()) phi.p.emplace(std::stoi(k), paramset_from_json(pk));
  return phi;
}

}  // namespace pamela
