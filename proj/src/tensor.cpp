#include "psenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace psenet {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor Tensor::uninitialized(std::vector<std::size_t> shape) {
  Tensor t;
  t.size_ = product(shape);
  t.shape_ = std::move(shape);
  // Default-initialized array: doubles are left unwritten on purpose.
  t.data_ = std::shared_ptr<double[]>(new double[std::max<std::size_t>(t.size_, 1)]);
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t = uninitialized(std::move(shape));
  std::memset(t.data(), 0, t.size() * sizeof(double));
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t = uninitialized(std::move(shape));
  std::fill_n(t.data(), t.size(), value);
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t = uninitialized({1});
  t.data()[0] = value;
  return t;
}

Tensor Tensor::from_storage(std::vector<std::size_t> shape,
                            std::shared_ptr<double[]> data) {
  Tensor t;
  t.size_ = product(shape);
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  if (!t.data_) throw std::invalid_argument("from_storage: null storage");
  return t;
}

Tensor Tensor::from_vector(std::vector<double> values) {
  Tensor t = uninitialized({values.size()});
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

Tensor Tensor::from_matrix(std::size_t rows, std::size_t cols,
                           std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("from_matrix: " + std::to_string(values.size()) +
                                " values for shape (" + std::to_string(rows) +
                                ", " + std::to_string(cols) + ")");
  }
  Tensor t = uninitialized({rows, cols});
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("rows() on tensor of shape " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("cols() on tensor of shape " + shape_string());
  return shape_[1];
}

double Tensor::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("tensor index " + std::to_string(i));
  return data_[i];
}

double& Tensor::at(std::size_t i) {
  if (i >= size_) throw std::out_of_range("tensor index " + std::to_string(i));
  return data_[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2 || i >= shape_[0] || j >= shape_[1]) {
    throw std::out_of_range("tensor index (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") into shape " + shape_string());
  }
  return data_[i * shape_[1] + j];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  if (rank() != 2 || i >= shape_[0] || j >= shape_[1]) {
    throw std::out_of_range("tensor index (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") into shape " + shape_string());
  }
  return data_[i * shape_[1] + j];
}

bool Tensor::all_finite() const {
  for (std::size_t i = 0; i < size_; ++i) {
    if (!std::isfinite(data_[i])) return false;
  }
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size_; ++i) m = std::max(m, std::fabs(data_[i]));
  return m;
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

double ipow(double x, int k) {
  if (k < 0) throw std::invalid_argument("ipow: negative exponent");
  double result = 1.0;
  while (k > 0) {
    if (k & 1) result *= x;
    x *= x;
    k >>= 1;
  }
  return result;
}

}  // namespace psenet
