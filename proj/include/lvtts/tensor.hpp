#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lvtts {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles, rank 1 to 3. Sequences are laid out as
// (batch, time, channels) or (time, channels); every layer treats the leading
// dims as rows and the last dim as channels.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }
  static Tensor of(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Product of all dims except the last.
  std::size_t rows() const;
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t b, std::size_t t, std::size_t c) {
    return data_[(b * shape_[1] + t) * shape_[2] + c];
  }
  double at(std::size_t b, std::size_t t, std::size_t c) const {
    return data_[(b * shape_[1] + t) * shape_[2] + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  void fill(double v);
  void reshape(Shape shape);
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  // Rows [begin, end) of the (rows x cols) view, returned as a 2-D tensor.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);

Tensor transpose(const Tensor& m);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor stack_rows(const std::vector<Tensor>& rows_of);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Dense kernels on row-major buffers. All loops run the innermost index over
// contiguous memory and keep a fixed summation order so results are bitwise
// reproducible.
namespace kernels {

// y(n x m) (+)= a(n x k) * b(k x m)
void gemm(const double* a, const double* b, double* y, std::size_t n, std::size_t k,
          std::size_t m, bool accumulate);
// y(k x m) (+)= a(n x k)^T * b(n x m)
void gemm_tn(const double* a, const double* b, double* y, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate);
// y(n) += s * x(n)
void axpy(double s, const double* x, double* y, std::size_t n);

}  // namespace kernels

}  // namespace lvtts
