#pragma once

#include <vector>

#include "evigp/linalg.hpp"

namespace evigp {

/// Anisotropic Gaussian correlation K(x1,x2) = exp(-sum_j omega_j (x1j-x2j)^2).
/// omega_j >= 0 are per-dimension inverse squared lengthscales; inputs are
/// expected on the unit cube.
struct KernelParams {
  Vector omega;
};

double gaussian_kernel(const Vector& x1, const Vector& x2, const KernelParams& params);

/// n x n correlation matrix with unit diagonal; symmetric PSD.
Matrix kernel_matrix(const Matrix& X, const KernelParams& params);

/// [K(x, X_1), ..., K(x, X_n)]
Vector cross_kernel(const Vector& x, const Matrix& X, const KernelParams& params);

/// dK/d(omega_j), entries -(x_ij - x_kj)^2 * K[i,k]; zero diagonal.
Matrix kernel_matrix_grad(const Matrix& X, const KernelParams& params, int j);

/// Per-dimension squared-difference matrices D_j[i,k] = (x_ij - x_kj)^2.
/// Cached by posterior evaluations so kernel gradients cost one Hadamard
/// product instead of a rebuild.
std::vector<Matrix> squared_diff_stack(const Matrix& X);

}  // namespace evigp
