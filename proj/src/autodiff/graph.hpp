#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "autodiff/tensor.hpp"

namespace pamela::ad {

enum class OpKind : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Scale,     // by a compile-time constant held in Node::scalar
  ScaleBy,   // by a rank-0 tensor (input 1)
  MatMul,    // with transpose flags
  AddBias,   // [B, C] + [1, C]
  Relu,
  Sum,
  Mean,
  Square,
  Sin,
  Cos,
  Expand,    // rank-0 tensor broadcast to Node::value shape
  Softmax,   // row-wise
  SoftmaxXent,
};

const char* op_name(OpKind op);

struct OpAttrs {
  double scalar = 0.0;
  bool transpose_a = false;
  bool transpose_b = false;
  Shape expand_shape;
  std::shared_ptr<const std::vector<int>> labels;
};

struct Node {
  OpKind op = OpKind::Leaf;
  std::array<Tensor, 2> inputs;
  OpAttrs attrs;
  std::shared_ptr<const Buffer> value;
};

// Append-only tape.  Inputs always reference earlier nodes, so node order is a
// valid topological order for both forward replay and reverse accumulation.
// A Graph must outlive every Tensor that refers to it.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Registers `value` as a differentiable leaf.
  Tensor variable(const Tensor& value);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Tensor tensor(std::int32_t id) { return Tensor(nodes_[static_cast<std::size_t>(id)].value, this, id); }

  // Recomputes every non-leaf node from its recorded inputs and checks that the
  // stored outputs are reproduced bit-for-bit.
  bool replay_matches() const;

  Tensor record(OpKind op, std::array<Tensor, 2> inputs, OpAttrs attrs, std::shared_ptr<const Buffer> value);

 private:
  std::vector<Node> nodes_;
};

}  // namespace pamela::ad
