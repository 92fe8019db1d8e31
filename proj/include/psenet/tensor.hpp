#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace psenet {

// Dense row-major float64 array with value semantics. Copies share storage,
// so a Tensor handed to a Tape or another thread must be treated as
// read-only; code that needs to mutate builds a fresh tensor first.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  // Allocates without filling; caller must write every element.
  static Tensor uninitialized(std::vector<std::size_t> shape);
  static Tensor scalar(double value);
  static Tensor from_vector(std::vector<double> values);
  static Tensor from_matrix(std::size_t rows, std::size_t cols,
                            std::vector<double> values);
  // Wraps existing storage (which must hold at least product(shape)
  // doubles). Used by the tape's buffer pool and by zero-copy views.
  static Tensor from_storage(std::vector<std::size_t> shape,
                             std::shared_ptr<double[]> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return size_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  // Rank-2 helpers.
  std::size_t rows() const;
  std::size_t cols() const;

  bool defined() const { return data_ != nullptr; }
  const double* data() const { return data_.get(); }
  double* data() { return data_.get(); }
  const std::shared_ptr<double[]>& storage() const { return data_; }

  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i);
  double& at(std::size_t i, std::size_t j);

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  double max_abs() const;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::shared_ptr<double[]> data_;
  std::size_t size_ = 0;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

// x^k by binary exponentiation for small non-negative integer k.
double ipow(double x, int k);

}  // namespace psenet
