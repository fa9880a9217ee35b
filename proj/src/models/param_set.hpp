#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autodiff/graph.hpp"
#include "autodiff/tensor.hpp"

namespace pamela {

using Json = nlohmann::ordered_json;

// Ordered, uniquely named parameter tensors.  Entries may be constants or
// graph nodes; most operations below are agnostic to which.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    ad::Tensor tensor;
    int layer = 0;
  };

  ParamSet() = default;

  void add(std::string name, ad::Tensor tensor, int layer);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const ad::Tensor& tensor(std::size_t i) const { return entries_[i].tensor; }
  std::optional<std::size_t> find(const std::string& name) const;
  const ad::Tensor& at(const std::string& name) const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::vector<ad::Tensor> tensors() const;
  std::size_t total_count() const;

  // Identical names, order and shapes.
  bool congruent_with(const ParamSet& other) const;
  void require_congruent(const ParamSet& other, const std::string& context) const;

  // Same names/layers with new tensors (one per entry, in order).
  ParamSet with_tensors(std::vector<ad::Tensor> tensors) const;
  ParamSet transform(const std::function<ad::Tensor(const Entry&)>& fn) const;
  // Entry-wise combination of two congruent sets.
  ParamSet zip(const ParamSet& other, const std::function<ad::Tensor(const ad::Tensor&, const ad::Tensor&)>& fn,
               const std::string& context) const;

  ParamSet detached() const;
  // Every entry registered as a differentiable leaf of `graph`.
  ParamSet bind(ad::Graph& graph) const;

  bool all_finite() const;
  bool bit_equal(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
};

// {name: {shape: [...], values: [...]}} in entry order.  Doubles are written
// in shortest round-trip form, so parse(serialize(p)) is bit-exact.
Json to_json(const ParamSet& params);
ParamSet paramset_from_json(const Json& j);

// "layer3.weight" -> 3; names without the prefix map to 0.
int layer_from_name(const std::string& name);

}  // namespace pamela
