#include "models/param_set.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "common/error.hpp"

namespace pamela {

void ParamSet::add(std::string name, ad::Tensor tensor, int layer) {
  if (find(name)) throw ValueError("ParamSet: duplicate entry name '" + name + "'");
  entries_.push_back(Entry{std::move(name), std::move(tensor), layer});
}

std::optional<std::size_t> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  return std::nullopt;
}

const ad::Tensor& ParamSet::at(const std::string& name) const {
  const auto i = find(name);
  if (!i) throw ValueError("ParamSet: no entry named '" + name + "'");
  return entries_[*i].tensor;
}

std::vector<ad::Tensor> ParamSet::tensors() const {
  std::vector<ad::Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

std::size_t ParamSet::total_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

bool ParamSet::congruent_with(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) return false;
  }
  return true;
}

void ParamSet::require_congruent(const ParamSet& other, const std::string& context) const {
  if (entries_.size() != other.entries_.size())
    throw ShapeError(context + ": parameter sets have " + std::to_string(entries_.size()) + " and " +
                     std::to_string(other.entries_.size()) + " entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name) throw ShapeError(context + ": entry " + std::to_string(i) + " is '" + a.name + "' vs '" + b.name + "'");
    if (a.tensor.shape() != b.tensor.shape())
      throw ShapeError(context + ": '" + a.name + "' has shape " + ad::shape_str(a.tensor.shape()) + " vs " +
                       ad::shape_str(b.tensor.shape()));
  }
}

ParamSet ParamSet::with_tensors(std::vector<ad::Tensor> tensors) const {
  if (tensors.size() != entries_.size()) throw ValueError("ParamSet::with_tensors: wrong tensor count");
  ParamSet out;
  out.entries_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_.push_back(Entry{entries_[i].name, std::move(tensors[i]), entries_[i].layer});
  return out;
}

ParamSet ParamSet::transform(const std::function<ad::Tensor(const Entry&)>& fn) const {
  ParamSet out;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) out.entries_.push_back(Entry{e.name, fn(e), e.layer});
  return out;
}

ParamSet ParamSet::zip(const ParamSet& other,
                       const std::function<ad::Tensor(const ad::Tensor&, const ad::Tensor&)>& fn,
                       const std::string& context) const {
  require_congruent(other, context);
  ParamSet out;
  out.entries_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out.entries_.push_back(Entry{entries_[i].name, fn(entries_[i].tensor, other.entries_[i].tensor), entries_[i].layer});
  return out;
}

ParamSet ParamSet::detached() const {
  return transform([](const Entry& e) { return e.tensor.detach(); });
}

ParamSet ParamSet::bind(ad::Graph& graph) const {
  return transform([&graph](const Entry& e) { return graph.variable(e.tensor.detach()); });
}

bool ParamSet::all_finite() const {
  for (const auto& e : entries_)
    for (double v : e.tensor.values())
      if (!std::isfinite(v)) return false;
  return true;
}

bool ParamSet::bit_equal(const ParamSet& other) const {
  if (!congruent_with(other)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!ad::same_values(entries_[i].tensor, other.entries_[i].tensor)) return false;
  return true;
}

int layer_from_name(const std::string& name) {
  if (name.rfind("layer", 0) != 0) return 0;
  std::size_t i = 5;
  int layer = 0;
  bool digits = false;
  while (i < name.size() && name[i] >= '0' && name[i] <= '9') {
    layer = layer * 10 + (name[i] - '0');
    ++i;
    digits = true;
  }
  return digits ? layer : 0;
}

Json to_json(const ParamSet& params) {
  Json j = Json::object();
  for (const auto& e : params) {
    Json entry;
    entry["shape"] = e.tensor.shape();
    entry["values"] = std::vector<double>(e.tensor.values().begin(), e.tensor.values().end());
    j[e.name] = std::move(entry);
  }
  return j;
}

ParamSet paramset_from_json(const Json& j) {
  if (!j.is_object()) throw ValueError("ParamSet JSON must be an object");
  ParamSet out;
  for (const auto& [name, entry] : j.items()) {
    if (!entry.contains("shape") || !entry.contains("values"))
      throw ValueError("ParamSet JSON entry '" + name + "' needs 'shape' and 'values'");
    auto shape = entry.at("shape").get<ad::Shape>();
    auto values = entry.at("values").get<std::vector<double>>();
    out.add(name, ad::Tensor(std::move(shape), std::move(values)), layer_from_name(name));
  }
  return out;
}

}  // namespace pamela
