#include <optional>
#include <vector>

#include "autodiff/graph.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace pamela::ad {
namespace {

// Vector-Jacobian products.  Every rule is written with differentiable ops, so
// the same code yields plain numbers (constant inputs) or new graph nodes
// (create_graph), which is what makes grad-of-grad work.
struct VjpContext {
  const Node& node;
  Tensor a;    // input 0
  Tensor b;    // input 1 (may be undefined)
  Tensor out;  // this node's own output
  Tensor g;    // upstream adjoint
};

Tensor ones(std::size_t rows, std::size_t cols) { return Tensor::full({rows, cols}, 1.0); }

Tensor vjp(const VjpContext& c, int which) {
  const OpAttrs& attrs = c.node.attrs;
  switch (c.node.op) {
    case OpKind::Add:
      return c.g;
    case OpKind::Sub:
      return which == 0 ? c.g : scale(c.g, -1.0);
    case OpKind::Mul:
      return hadamard_mul(c.g, which == 0 ? c.b : c.a);
    case OpKind::Scale:
      return scale(c.g, attrs.scalar);
    case OpKind::ScaleBy:
      return which == 0 ? scale_by_scalar(c.g, c.b) : sum(hadamard_mul(c.g, c.a));
    case OpKind::MatMul: {
      const bool ta = attrs.transpose_a, tb = attrs.transpose_b;
      if (which == 0) return ta ? matmul(c.b, c.g, tb, true) : matmul(c.g, c.b, false, !tb);
      return tb ? matmul(c.g, c.a, true, ta) : matmul(c.a, c.g, !ta, false);
    }
    case OpKind::AddBias:
      return which == 0 ? c.g : matmul(ones(1, c.g.dim(0)), c.g);
    case OpKind::Relu: {
      std::vector<double> mask(c.a.numel());
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = c.a[i] > 0.0 ? 1.0 : 0.0;
      return hadamard_mul(c.g, Tensor(c.a.shape(), std::move(mask)));
    }
    case OpKind::Sum:
      return expand(c.g, c.a.shape());
    case OpKind::Mean:
      return expand(scale(c.g, 1.0 / static_cast<double>(c.a.numel())), c.a.shape());
    case OpKind::Square:
      return hadamard_mul(c.g, scale(c.a, 2.0));
    case OpKind::Sin:
      return hadamard_mul(c.g, cos(c.a));
    case OpKind::Cos:
      return scale(hadamard_mul(c.g, sin(c.a)), -1.0);
    case OpKind::Expand:
      return sum(c.g);
    case OpKind::Softmax: {
      // s * (g - rowsum(s * g))
      const std::size_t cols = c.out.dim(1);
      const Tensor sg = hadamard_mul(c.out, c.g);
      const Tensor rowsum = matmul(matmul(sg, ones(cols, 1)), ones(1, cols));
      return sub(sg, hadamard_mul(c.out, rowsum));
    }
    case OpKind::SoftmaxXent: {
      const std::size_t rows = c.a.dim(0), cols = c.a.dim(1);
      std::vector<double> onehot(rows * cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) onehot[r * cols + static_cast<std::size_t>((*attrs.labels)[r])] = 1.0;
      const Tensor diff = sub(softmax(c.a), Tensor({rows, cols}, std::move(onehot)));
      return scale_by_scalar(scale(diff, 1.0 / static_cast<double>(rows)), c.g);
    }
    case OpKind::Leaf:
      break;
  }
  throw ValueError("grad: no vector-Jacobian product for op");
}

}  // namespace

std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> wrt, bool create_graph) {
  if (!output.defined() || output.numel() != 1 || output.rank() != 0)
    throw ShapeError("grad: output must be a rank-0 scalar, got shape " +
                     (output.defined() ? shape_str(output.shape()) : std::string("<undefined>")));

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  Graph* graph = output.graph();
  if (output.is_constant() || graph == nullptr) {
    for (const auto& w : wrt) result.push_back(Tensor::zeros(w.shape()));
    return result;
  }

  const auto out_id = static_cast<std::size_t>(*output.node_id());
  std::vector<char> is_target(out_id + 1, 0);
  std::size_t first = out_id + 1;
  for (const auto& w : wrt) {
    if (w.is_constant() || w.graph() != graph) continue;
    const auto id = static_cast<std::size_t>(*w.node_id());
    if (id > out_id) continue;
    is_target[id] = 1;
    first = std::min(first, id);
  }

  // reaches[i]: node i depends on some wrt tensor.
  std::vector<char> reaches(out_id + 1, 0);
  for (std::size_t i = first; i <= out_id; ++i) {
    if (is_target[i]) {
      reaches[i] = 1;
      continue;
    }
    for (const auto& in : graph->node(static_cast<std::int32_t>(i)).inputs) {
      if (in.defined() && !in.is_constant() && reaches[static_cast<std::size_t>(*in.node_id())]) {
        reaches[i] = 1;
        break;
      }
    }
  }

  std::vector<std::optional<Tensor>> adjoint(out_id + 1);
  if (reaches[out_id]) adjoint[out_id] = Tensor::scalar(1.0);

  auto as_operand = [&](const Tensor& t) { return create_graph ? t : t.detach(); };

  for (std::size_t i = out_id + 1; i-- > first;) {
    if (!adjoint[i] || !reaches[i]) continue;
    const Node node = graph->node(static_cast<std::int32_t>(i));
    if (node.op == OpKind::Leaf) continue;
    const Tensor self = as_operand(graph->tensor(static_cast<std::int32_t>(i)));
    VjpContext ctx{node, as_operand(node.inputs[0]),
                   node.inputs[1].defined() ? as_operand(node.inputs[1]) : Tensor{}, self,
                   create_graph ? *adjoint[i] : adjoint[i]->detach()};
    for (int k = 0; k < 2; ++k) {
      const Tensor& in = node.inputs[static_cast<std::size_t>(k)];
      if (!in.defined() || in.is_constant()) continue;
      const auto in_id = static_cast<std::size_t>(*in.node_id());
      if (!reaches[in_id]) continue;
      Tensor contribution = vjp(ctx, k);
      adjoint[in_id] = adjoint[in_id] ? add(*adjoint[in_id], contribution) : std::move(contribution);
    }
    if (!is_target[i]) adjoint[i].reset();
  }

  for (const auto& w : wrt) {
    std::optional<Tensor> g;
    if (!w.is_constant() && w.graph() == graph) {
      const auto id = static_cast<std::size_t>(*w.node_id());
      if (id <= out_id) g = adjoint[id];
    }
    result.push_back(g ? (create_graph ? *g : g->detach()) : Tensor::zeros(w.shape()));
  }
  return result;
}

}  // namespace pamela::ad
