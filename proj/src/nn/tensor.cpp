#include "hrdyn/nn/tensor.hpp"

#include "hrdyn/error.hpp"

#include <cmath>
#include <sstream>

namespace hrdyn::nn {

std::size_t element_count(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(element_count(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (element_count(shape) != data.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::reshaped(Shape s) const {
  if (element_count(s) != data.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape) + " to " + shape_str(s));
  }
  return Tensor(std::move(s), data);
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape != expected) {
    throw ShapeError(std::string(what) + ": got " + shape_str(t.shape) + ", expected " +
                     shape_str(expected));
  }
}

Tensor swap_last_two(const Tensor& t) {
  if (t.rank() != 3) throw ShapeError("swap_last_two needs rank 3, got " + shape_str(t.shape));
  const int a = t.dim(0), b = t.dim(1), c = t.dim(2);
  Tensor out({a, c, b});
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) {
      for (int k = 0; k < c; ++k) {
        out.data[(static_cast<std::size_t>(i) * c + k) * b + j] =
            t.data[(static_cast<std::size_t>(i) * b + j) * c + k];
      }
    }
  }
  return out;
}

}  // namespace hrdyn::nn
