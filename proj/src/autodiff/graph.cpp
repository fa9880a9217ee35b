#include "autodiff/graph.hpp"

#include <cstring>

#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace pamela::ad {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "hadamard_mul";
    case OpKind::Scale: return "scale";
    case OpKind::ScaleBy: return "scale_by_scalar";
    case OpKind::MatMul: return "matmul";
    case OpKind::AddBias: return "broadcast_add_bias";
    case OpKind::Relu: return "relu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Square: return "square";
    case OpKind::Sin: return "sin";
    case OpKind::Cos: return "cos";
    case OpKind::Expand: return "expand";
    case OpKind::Softmax: return "softmax";
    case OpKind::SoftmaxXent: return "softmax_cross_entropy";
  }
  return "?";
}

Tensor Graph::variable(const Tensor& value) {
  if (!value.defined()) throw ValueError("variable: undefined tensor");
  Node n;
  n.op = OpKind::Leaf;
  n.value = value.buffer();
  nodes_.push_back(std::move(n));
  return Tensor(nodes_.back().value, this, static_cast<std::int32_t>(nodes_.size() - 1));
}

Tensor Graph::record(OpKind op, std::array<Tensor, 2> inputs, OpAttrs attrs, std::shared_ptr<const Buffer> value) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.attrs = std::move(attrs);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(nodes_.back().value, this, static_cast<std::int32_t>(nodes_.size() - 1));
}

bool Graph::replay_matches() const {
  for (const auto& n : nodes_) {
    if (n.op == OpKind::Leaf) continue;
    const Buffer out = evaluate(n.op, n.inputs, n.attrs);
    if (out.shape != n.value->shape) return false;
    if (std::memcmp(out.values.data(), n.value->values.data(), out.values.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace pamela::ad
