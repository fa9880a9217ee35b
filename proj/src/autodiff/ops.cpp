#include "autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace pamela::ad {
namespace {

[[noreturn]] void shape_mismatch(OpKind op, const Shape& a, const Shape& b, const char* why) {
  throw ShapeError(std::string(op_name(op)) + ": " + why + " (got " + shape_str(a) + " and " + shape_str(b) + ")");
}

void check_shapes(OpKind op, const std::array<Tensor, 2>& in, const OpAttrs& attrs) {
  const Shape& a = in[0].shape();
  switch (op) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
      if (a != in[1].shape()) shape_mismatch(op, a, in[1].shape(), "shapes must be identical");
      break;
    case OpKind::ScaleBy:
      if (in[1].rank() != 0) shape_mismatch(op, a, in[1].shape(), "scale factor must be rank-0");
      break;
    case OpKind::MatMul: {
      const Shape& b = in[1].shape();
      if (a.size() != 2 || b.size() != 2) shape_mismatch(op, a, b, "operands must be rank-2");
      const std::size_t ka = attrs.transpose_a ? a[0] : a[1];
      const std::size_t kb = attrs.transpose_b ? b[1] : b[0];
      if (ka != kb) shape_mismatch(op, a, b, "inner dimensions differ");
      break;
    }
    case OpKind::AddBias: {
      const Shape& b = in[1].shape();
      if (a.size() != 2 || b.size() != 2 || b[0] != 1 || b[1] != a[1])
        shape_mismatch(op, a, b, "expected [B, C] and [1, C]");
      break;
    }
    case OpKind::Expand:
      if (a.size() != 0) shape_mismatch(op, a, attrs.expand_shape, "source must be rank-0");
      break;
    case OpKind::Softmax:
      if (a.size() != 2) shape_mismatch(op, a, a, "logits must be rank-2");
      break;
    case OpKind::SoftmaxXent: {
      if (a.size() != 2) shape_mismatch(op, a, a, "logits must be rank-2");
      const auto& labels = *attrs.labels;
      if (labels.size() != a[0])
        shape_mismatch(op, a, Shape{labels.size()}, "one label per logits row required");
      for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= a[1])
          throw ValueError("softmax_cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                           std::to_string(a[1]) + ")");
      }
      break;
    }
    default:
      break;
  }
}

void matmul_kernel(const Buffer& A, const Buffer& B, bool ta, bool tb, Buffer& C) {
  const std::size_t m = ta ? A.shape[1] : A.shape[0];
  const std::size_t k = ta ? A.shape[0] : A.shape[1];
  const std::size_t n = tb ? B.shape[0] : B.shape[1];
  C.shape = {m, n};
  C.values.assign(m * n, 0.0);
  const double* a = A.values.data();
  const double* b = B.values.data();
  double* c = C.values.data();
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a[i * k + p];
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
        c[i * n + j] = s;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* ap = a + p * m;
      const double* bp = b + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = ap[i];
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[j * k + p];
        c[i * n + j] = s;
      }
  }
}

template <typename F>
Buffer unary(const Buffer& a, F f) {
  Buffer out{a.shape, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = f(a.values[i]);
  return out;
}

template <typename F>
Buffer binary(const Buffer& a, const Buffer& b, F f) {
  Buffer out{a.shape, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = f(a.values[i], b.values[i]);
  return out;
}

void softmax_rows(const Buffer& z, std::vector<double>& out) {
  const std::size_t rows = z.shape[0], cols = z.shape[1];
  out.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.values.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(zr, zr + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(zr[c] - mx);
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
}

bool is_unary(OpKind op) {
  switch (op) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::ScaleBy:
    case OpKind::MatMul:
    case OpKind::AddBias:
      return false;
    default:
      return true;
  }
}

Tensor apply(OpKind op, std::array<Tensor, 2> in, OpAttrs attrs = {}) {
  if (!in[0].defined() || (!is_unary(op) && !in[1].defined()))
    throw ValueError(std::string(op_name(op)) + ": undefined input tensor");
  check_shapes(op, in, attrs);
  auto value = std::make_shared<const Buffer>(evaluate(op, in, attrs));

  Graph* graph = nullptr;
  for (const auto& t : in) {
    if (!t.defined() || t.is_constant()) continue;
    if (graph && graph != t.graph())
      throw ValueError(std::string(op_name(op)) + ": inputs belong to different graphs");
    graph = t.graph();
  }
  if (!graph) return Tensor::from_buffer(std::move(value));
  return graph->record(op, std::move(in), std::move(attrs), std::move(value));
}

}  // namespace

Buffer evaluate(OpKind op, const std::array<Tensor, 2>& in, const OpAttrs& attrs) {
  const Buffer& a = *in[0].buffer();
  switch (op) {
    case OpKind::Leaf:
      return a;
    case OpKind::Add:
      return binary(a, *in[1].buffer(), [](double x, double y) { return x + y; });
    case OpKind::Sub:
      return binary(a, *in[1].buffer(), [](double x, double y) { return x - y; });
    case OpKind::Mul:
      return binary(a, *in[1].buffer(), [](double x, double y) { return x * y; });
    case OpKind::Scale: {
      const double c = attrs.scalar;
      return unary(a, [c](double x) { return x * c; });
    }
    case OpKind::ScaleBy: {
      const double c = in[1].buffer()->values[0];
      return unary(a, [c](double x) { return x * c; });
    }
    case OpKind::MatMul: {
      Buffer out;
      matmul_kernel(a, *in[1].buffer(), attrs.transpose_a, attrs.transpose_b, out);
      return out;
    }
    case OpKind::AddBias: {
      const Buffer& b = *in[1].buffer();
      Buffer out = a;
      const std::size_t cols = a.shape[1];
      for (std::size_t r = 0; r < a.shape[0]; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.values[r * cols + c] += b.values[c];
      return out;
    }
    case OpKind::Relu:
      return unary(a, [](double x) { return x > 0.0 ? x : 0.0; });
    case OpKind::Sum: {
      double s = 0.0;
      for (double v : a.values) s += v;
      return Buffer{{}, {s}};
    }
    case OpKind::Mean: {
      double s = 0.0;
      for (double v : a.values) s += v;
      return Buffer{{}, {s / static_cast<double>(a.values.size())}};
    }
    case OpKind::Square:
      return unary(a, [](double x) { return x * x; });
    case OpKind::Sin:
      return unary(a, [](double x) { return std::sin(x); });
    case OpKind::Cos:
      return unary(a, [](double x) { return std::cos(x); });
    case OpKind::Expand:
      return Buffer{attrs.expand_shape, std::vector<double>(shape_numel(attrs.expand_shape), a.values[0])};
    case OpKind::Softmax: {
      Buffer out{a.shape, {}};
      softmax_rows(a, out.values);
      return out;
    }
    case OpKind::SoftmaxXent: {
      const std::size_t rows = a.shape[0], cols = a.shape[1];
      const auto& labels = *attrs.labels;
      double total = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = a.values.data() + r * cols;
        const double mx = *std::max_element(zr, zr + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(zr[c] - mx);
        total += mx + std::log(s) - zr[labels[r]];
      }
      return Buffer{{}, {total / static_cast<double>(rows)}};
    }
  }
  throw ValueError("evaluate: unknown op");
}

Tensor add(const Tensor& a, const Tensor& b) { return apply(OpKind::Add, {a, b}); }
Tensor sub(const Tensor& a, const Tensor& b) { return apply(OpKind::Sub, {a, b}); }
Tensor hadamard_mul(const Tensor& a, const Tensor& b) { return apply(OpKind::Mul, {a, b}); }

Tensor scale(const Tensor& a, double c) {
  OpAttrs attrs;
  attrs.scalar = c;
  return apply(OpKind::Scale, {a, Tensor{}}, std::move(attrs));
}

Tensor scale_by_scalar(const Tensor& a, const Tensor& s) { return apply(OpKind::ScaleBy, {a, s}); }

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  OpAttrs attrs;
  attrs.transpose_a = transpose_a;
  attrs.transpose_b = transpose_b;
  return apply(OpKind::MatMul, {a, b}, std::move(attrs));
}

Tensor broadcast_add_bias(const Tensor& x, const Tensor& bias) { return apply(OpKind::AddBias, {x, bias}); }
Tensor relu(const Tensor& a) { return apply(OpKind::Relu, {a, Tensor{}}); }
Tensor sum(const Tensor& a) { return apply(OpKind::Sum, {a, Tensor{}}); }
Tensor mean(const Tensor& a) { return apply(OpKind::Mean, {a, Tensor{}}); }
Tensor square(const Tensor& a) { return apply(OpKind::Square, {a, Tensor{}}); }
Tensor sin(const Tensor& a) { return apply(OpKind::Sin, {a, Tensor{}}); }
Tensor cos(const Tensor& a) { return apply(OpKind::Cos, {a, Tensor{}}); }

Tensor expand(const Tensor& s, const Shape& shape) {
  OpAttrs attrs;
  attrs.expand_shape = shape;
  return apply(OpKind::Expand, {s, Tensor{}}, std::move(attrs));
}

Tensor softmax(const Tensor& logits) { return apply(OpKind::Softmax, {logits, Tensor{}}); }

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: prediction shape " + shape_str(pred.shape()) + " differs from target shape " +
                     shape_str(target.shape()));
  return mean(square(sub(pred, target)));
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  OpAttrs attrs;
  attrs.labels = std::make_shared<const std::vector<int>>(labels.begin(), labels.end());
  return apply(OpKind::SoftmaxXent, {logits, Tensor{}}, std::move(attrs));
}

}  // namespace pamela::ad
