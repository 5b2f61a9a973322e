#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace attnex {

/// Dense row-major array of 64-bit reals. Rank 1 (vector) and rank 2
/// (matrix) cover everything this library computes; entries are expected
/// to stay finite, and operations that could produce NaN/Inf check for it.
class DenseArray {
 public:
  DenseArray() = default;

  explicit DenseArray(std::vector<std::size_t> shape);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray zeros(std::vector<std::size_t> shape);
  static DenseArray full(std::vector<std::size_t> shape, double value);
  static DenseArray vector(std::vector<double> data);
  static DenseArray matrix(std::size_t rows, std::size_t cols,
                           std::vector<double> data);
  static DenseArray scalar(double value);
  static DenseArray identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  // Rank-2 accessors; rows()/cols() treat a vector as a single column.
  std::size_t rows() const;
  std::size_t cols() const;

  bool is_scalar() const { return data_.size() == 1; }
  bool is_vector() const { return shape_.size() == 1; }
  bool is_matrix() const { return shape_.size() == 2; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const DenseArray& other) const {
    return shape_ == other.shape_;
  }
  bool all_finite() const;

  double sum() const;
  double l2_norm() const;
  double max() const;

  /// Column c as a fresh vector (rank-2 only).
  DenseArray column(std::size_t c) const;
  void set_column(std::size_t c, const DenseArray& v);

  std::string shape_string() const;

  bool operator==(const DenseArray& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Throws std::runtime_error naming `where` if any entry is NaN/Inf.
void check_finite(const DenseArray& a, const char* where);

}  // namespace attnex
