#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hrdyn::nn {

using Shape = std::vector<int>;

// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // Reinterpret with a new shape of equal element count.
  Tensor reshaped(Shape s) const;
  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;
};

std::size_t element_count(const Shape& s);
std::string shape_str(const Shape& s);

// Throws ShapeError naming both shapes when they differ.
void require_shape(const Tensor& t, const Shape& expected, const char* what);

// [a, b, c] -> [a, c, b]
Tensor swap_last_two(const Tensor& t);

// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape) {}
  void zero_grad() { grad.fill(0.0); }
};

// Non-trainable state that still belongs in a checkpoint.
struct Buffer {
  std::string name;
  Tensor* value = nullptr;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

inline MatrixMap as_matrix(Tensor& t, int rows, int cols) {
  return MatrixMap(t.data.data(), rows, cols);
}
inline ConstMatrixMap as_matrix(const Tensor& t, int rows, int cols) {
  return ConstMatrixMap(t.data.data(), rows, cols);
}

}  // namespace hrdyn::nn
