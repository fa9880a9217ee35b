#pragma once

#include <array>
#include <span>
#include <vector>

#include "autodiff/graph.hpp"
#include "autodiff/tensor.hpp"

namespace pamela::ad {

// Elementwise ops require identical shapes; the only broadcast supported is a
// [1, C] bias row over a [B, C] matrix.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard_mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// `s` must be a rank-0 tensor; it may itself be differentiable.
Tensor scale_by_scalar(const Tensor& a, const Tensor& s);
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false, bool transpose_b = false);
Tensor broadcast_add_bias(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor expand(const Tensor& s, const Shape& shape);
Tensor softmax(const Tensor& logits);

Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Mean negative log-likelihood of the true class over the rows of `logits`.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Forward kernel shared by op construction and graph replay.
Buffer evaluate(OpKind op, const std::array<Tensor, 2>& inputs, const OpAttrs& attrs);

// Reverse-mode gradient of a scalar `output` w.r.t. each tensor in `wrt`.
// Tensors not reachable from `output` receive exact zeros.  With
// `create_graph`, the returned tensors are recorded in the output's graph and
// can be differentiated again.
std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> wrt, bool create_graph = false);

}  // namespace pamela::ad
