#include "lvtts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "lvtts/errors.hpp"

namespace lvtts {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got shape " + shape_string(shape));
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_rank(shape_);
  if (data_.size() != product(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::of(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
  return r;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape shape) {
  check_rank(shape);
  if (product(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                         shape_string(shape));
  }
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) {
    throw DimensionError("row slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_string(shape_));
  }
  const std::size_t c = cols();
  Tensor out = Tensor::matrix(end - begin, c);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
            data_.begin() + static_cast<std::ptrdiff_t>(end * c), out.data_.begin());
  return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.size() != size()) {
    throw DimensionError("cannot add " + shape_string(other.shape()) + " to " +
                         shape_string(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

Tensor transpose(const Tensor& m) {
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  Tensor out = Tensor::matrix(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols row mismatch: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  const std::size_t n = a.rows();
  Tensor out = Tensor::matrix(n, a.cols() + b.cols());
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) return {};
  const std::size_t c = parts.front().cols();
  std::size_t n = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("stack_rows column mismatch: " + shape_string(p.shape()) + " vs " +
                           shape_string(parts.front().shape()));
    }
    n += p.rows();
  }
  Tensor out = Tensor::matrix(n, c);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.storage().begin(), p.storage().end(), out.storage().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("max_abs_diff size mismatch: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

namespace kernels {

void axpy(double s, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void gemm(const double* a, const double* b, double* y, std::size_t n, std::size_t k,
          std::size_t m, bool accumulate) {
  if (!accumulate) std::memset(y, 0, n * m * sizeof(double));
  for (std::size_t r = 0; r < n; ++r) {
    double* yr = y + r * m;
    const double* ar = a + r * k;
    for (std::size_t i = 0; i < k; ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      axpy(s, b + i * m, yr, m);
    }
  }
}

void gemm_tn(const double* a, const double* b, double* y, std::size_t n, std::size_t k,
             std::size_t m, bool accumulate) {
  if (!accumulate) std::memset(y, 0, k * m * sizeof(double));
  for (std::size_t r = 0; r < n; ++r) {
    const double* ar = a + r * k;
    const double* br = b + r * m;
    for (std::size_t i = 0; i < k; ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      axpy(s, br, y + i * m, m);
    }
  }
}

}  // namespace kernels

}  // namespace lvtts
