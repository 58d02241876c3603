#ifndef RAWCSI_TENSOR_H_
#define RAWCSI_TENSOR_H_

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rawcsi {

using Shape = std::vector<std::size_t>;

std::size_t shapeProduct(const Shape& shape);
std::string shapeString(const Shape& shape);

// Dense row-major array of doubles. Operations below never mutate their
// inputs; the mutable accessors exist for kernels that fill a fresh tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double flat(std::size_t i) const { return data_[i]; }
  double& flat(std::size_t i) { return data_[i]; }

  std::size_t offset(std::span<const std::size_t> index) const;

  template <typename... I>
  double at(I... index) const {
    const std::array<std::size_t, sizeof...(I)> idx{static_cast<std::size_t>(index)...};
    return data_[offset(idx)];
  }
  template <typename... I>
  double& at(I... index) {
    const std::array<std::size_t, sizeof...(I)> idx{static_cast<std::size_t>(index)...};
    return data_[offset(idx)];
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor reshape(const Tensor& t, Shape newShape);

enum class ElemOp { kAdd, kSub, kMul, kScale, kRelu, kExp, kLog };

// Binary form; shapes must match exactly (no broadcasting).
Tensor elementwise(ElemOp op, const Tensor& a, const Tensor& b);
// Scalar form: add/sub/mul/scale use the scalar, relu/exp/log ignore it.
Tensor elementwise(ElemOp op, const Tensor& a, double scalar);
Tensor elementwise(ElemOp op, const Tensor& a);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::kAdd, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::kSub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::kMul, a, b); }
inline Tensor scale(const Tensor& a, double s) { return elementwise(ElemOp::kScale, a, s); }
inline Tensor relu(const Tensor& a) { return elementwise(ElemOp::kRelu, a); }

// [p,q] x [q,r] -> [p,r]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor identity(std::size_t n);

}  // namespace rawcsi

#endif  // RAWCSI_TENSOR_H_
