#include "attnex/dense_array.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace attnex {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("DenseArray: shape " + shape_string() +
                                " does not match data length " +
                                std::to_string(data_.size()));
  }
}

DenseArray DenseArray::zeros(std::vector<std::size_t> shape) {
  return DenseArray(std::move(shape));
}

DenseArray DenseArray::full(std::vector<std::size_t> shape, double value) {
  DenseArray a(std::move(shape));
  for (double& x : a.data_) x = value;
  return a;
}

DenseArray DenseArray::vector(std::vector<double> data) {
  std::size_t n = data.size();
  return DenseArray({n}, std::move(data));
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols,
                              std::vector<double> data) {
  return DenseArray({rows, cols}, std::move(data));
}

DenseArray DenseArray::scalar(double value) {
  return DenseArray({}, std::vector<double>{value});
}

DenseArray DenseArray::identity(std::size_t n) {
  DenseArray a({n, n});
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  return a;
}

std::size_t DenseArray::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

std::size_t DenseArray::cols() const {
  if (shape_.size() == 2) return shape_[1];
  return 1;
}

double& DenseArray::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double DenseArray::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

bool DenseArray::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double DenseArray::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

double DenseArray::l2_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double DenseArray::max() const {
  if (data_.empty()) throw std::invalid_argument("DenseArray::max: empty");
  double m = data_[0];
  for (double x : data_) m = std::max(m, x);
  return m;
}

DenseArray DenseArray::column(std::size_t c) const {
  if (!is_matrix()) throw std::invalid_argument("column: rank-2 required");
  DenseArray v({shape_[0]});
  for (std::size_t r = 0; r < shape_[0]; ++r) v[r] = at(r, c);
  return v;
}

void DenseArray::set_column(std::size_t c, const DenseArray& v) {
  if (!is_matrix() || v.size() != shape_[0]) {
    throw std::invalid_argument("set_column: shape mismatch");
  }
  for (std::size_t r = 0; r < shape_[0]; ++r) at(r, c) = v[r];
}

std::string DenseArray::shape_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

void check_finite(const DenseArray& a, const char* where) {
  if (!a.all_finite()) {
    throw std::runtime_error(std::string(where) +
                             ": non-finite value encountered");
  }
}

}  // namespace attnex
