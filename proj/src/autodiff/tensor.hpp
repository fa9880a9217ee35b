#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pamela::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Graph;

// Immutable storage shared between tensors and graph nodes.
struct Buffer {
  Shape shape;
  std::vector<double> values;
};

// A value in (or outside of) a computation graph.  Tensors without a node id
// are constants: gradients never flow into them.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double v);
  static Tensor from_buffer(std::shared_ptr<const Buffer> data) { return Tensor(std::move(data), nullptr, -1); }

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t dim(std::size_t i) const { return data_->shape[i]; }
  std::size_t numel() const { return data_->values.size(); }
  std::span<const double> values() const { return data_->values; }
  double operator[](std::size_t i) const { return data_->values[i]; }
  double item() const;

  bool is_constant() const { return node_ < 0; }
  std::optional<std::int32_t> node_id() const;
  Graph* graph() const { return graph_; }

  // Same values, cut from the graph.
  Tensor detach() const;

  const std::shared_ptr<const Buffer>& buffer() const { return data_; }

 private:
  friend class Graph;
  Tensor(std::shared_ptr<const Buffer> data, Graph* graph, std::int32_t node)
      : data_(std::move(data)), graph_(graph), node_(node) {}

  std::shared_ptr<const Buffer> data_;
  Graph* graph_ = nullptr;
  std::int32_t node_ = -1;
};

bool same_values(const Tensor& a, const Tensor& b);

}  // namespace pamela::ad
