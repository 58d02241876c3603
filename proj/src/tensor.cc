#include "rawcsi/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "rawcsi/error.h"

namespace rawcsi {

std::size_t shapeProduct(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shapeProduct(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shapeProduct(shape_) != data_.size()) {
    fail(Errc::kShapeMismatch, "shape " + shapeString(shape_) + " does not hold " +
                                   std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) fail(Errc::kIndexOutOfRange, "axis " + std::to_string(axis));
  return shape_[axis];
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    fail(Errc::kIndexOutOfRange, "rank " + std::to_string(index.size()) + " index into " + shapeString(shape_));
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) {
      fail(Errc::kIndexOutOfRange, "index " + std::to_string(index[i]) + " on axis " + std::to_string(i) +
                                       " of " + shapeString(shape_));
    }
    off = off * shape_[i] + index[i];
  }
  return off;
}

Tensor reshape(const Tensor& t, Shape newShape) {
  if (shapeProduct(newShape) != t.size()) {
    fail(Errc::kShapeMismatch, "cannot reshape " + shapeString(t.shape()) + " to " + shapeString(newShape));
  }
  return Tensor(std::move(newShape), t.values());
}

namespace {

double applyBinary(ElemOp op, double x, double y) {
  switch (op) {
    case ElemOp::kAdd: return x + y;
    case ElemOp::kSub: return x - y;
    case ElemOp::kMul:
    case ElemOp::kScale: return x * y;
    case ElemOp::kRelu: return x < 0.0 ? 0.0 : x;  // NaN passes through
    case ElemOp::kExp: return std::exp(x);
    case ElemOp::kLog: return std::log(x);
  }
  return x;
}

}  // namespace

Tensor elementwise(ElemOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(Errc::kShapeMismatch, shapeString(a.shape()) + " vs " + shapeString(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.flat(i) = applyBinary(op, a.flat(i), b.flat(i));
  return out;
}

Tensor elementwise(ElemOp op, const Tensor& a, double scalar) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.flat(i) = applyBinary(op, a.flat(i), scalar);
  return out;
}

Tensor elementwise(ElemOp op, const Tensor& a) { return elementwise(op, a, 0.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(Errc::kShapeMismatch, "matmul " + shapeString(a.shape()) + " x " + shapeString(b.shape()));
  }
  const std::size_t p = a.dim(0), q = a.dim(1), r = b.dim(1);
  Tensor out({p, r});
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double s = x[i * q + k];
      const double* row = &y[k * r];
      double* dst = &o[i * r];
      for (std::size_t j = 0; j < r; ++j) dst[j] += s * row[j];
    }
  }
  return out;
}

Tensor identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

}  // namespace rawcsi
