#include "evigp/kernel.hpp"

#include <cmath>

namespace evigp {

namespace {

void check_params(const KernelParams& params, int d) {
  if (static_cast<int>(params.omega.size()) != d)
    throw std::invalid_argument("kernel: omega dimension mismatch");
  for (int j = 0; j < d; ++j)
    if (!(params.omega[j] >= 0.0))
      throw std::invalid_argument("kernel: omega must be non-negative");
}

}  // namespace

double gaussian_kernel(const Vector& x1, const Vector& x2, const KernelParams& params) {
  if (x1.size() != x2.size())
    throw std::invalid_argument("gaussian_kernel: input dimension mismatch");
  check_params(params, static_cast<int>(x1.size()));
  double s = 0.0;
  for (int j = 0; j < x1.size(); ++j) {
    double diff = x1[j] - x2[j];
    s += params.omega[j] * diff * diff;
  }
  return std::exp(-s);
}

Matrix kernel_matrix(const Matrix& X, const KernelParams& params) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  check_params(params, d);
  Matrix S = Matrix::Zero(n, n);
  for (int j = 0; j < d; ++j) {
    auto col = X.col(j);
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        double diff = col[i] - col[k];
        S(i, k) += params.omega[j] * diff * diff;
      }
  }
  Matrix K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (int k = i + 1; k < n; ++k) {
      double v = std::exp(-S(i, k));
      K(i, k) = v;
      K(k, i) = v;
    }
  }
  return K;
}

Vector cross_kernel(const Vector& x, const Matrix& X, const KernelParams& params) {
  if (x.size() != X.cols())
    throw std::invalid_argument("cross_kernel: input dimension mismatch");
  check_params(params, static_cast<int>(x.size()));
  const int n = static_cast<int>(X.rows());
  Vector k(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.size(); ++j) {
      double diff = x[j] - X(i, j);
      s += params.omega[j] * diff * diff;
    }
    k[i] = std::exp(-s);
  }
  return k;
}

Matrix kernel_matrix_grad(const Matrix& X, const KernelParams& params, int j) {
  const int d = static_cast<int>(X.cols());
  if (j < 0 || j >= d)
    throw std::invalid_argument("kernel_matrix_grad: dimension index out of range");
  Matrix K = kernel_matrix(X, params);
  const int n = static_cast<int>(X.rows());
  Matrix G(n, n);
  for (int i = 0; i < n; ++i) {
    G(i, i) = 0.0;
    for (int k = i + 1; k < n; ++k) {
      double diff = X(i, j) - X(k, j);
      double v = -diff * diff * K(i, k);
      G(i, k) = v;
      G(k, i) = v;
    }
  }
  return G;
}

std::vector<Matrix> squared_diff_stack(const Matrix& X) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  std::vector<Matrix> stack;
  stack.reserve(d);
  for (int j = 0; j < d; ++j) {
    Matrix D(n, n);
    for (int i = 0; i < n; ++i) {
      D(i, i) = 0.0;
      for (int k = i + 1; k < n; ++k) {
        double diff = X(i, j) - X(k, j);
        D(i, k) = D(k, i) = diff * diff;
      }
    }
    stack.push_back(std::move(D));
  }
  return stack;
}

}  // namespace evigp
