#pragma once

#include <string>
#include <vector>

#include "evigp/linalg.hpp"

namespace evigp {

/// Polynomial mean-function basis up to full quadratic with 2-way
/// interactions. Canonical term ordering: intercept, linear terms by
/// dimension, then degree-2 terms as index pairs (i<=j) in lexicographic
/// order; for d=2 this is [1, x1, x2, x1^2, x1*x2, x2^2].
struct BasisSpec {
  int d = 0;
  int degree = 0;
  std::vector<std::vector<int>> exponents;  // one exponent vector (length d) per term
  std::vector<char> active;                 // mask; inactive terms are omitted everywhere

  int n_terms() const { return static_cast<int>(exponents.size()); }
  int n_active() const;
};

BasisSpec build_basis(int d, int degree);

/// Basis values at x, active terms only, in canonical order.
Vector eval_basis(const BasisSpec& spec, const Vector& x);

/// n x p design matrix G, row i = eval_basis(spec, X_i).
Matrix design_matrix(const BasisSpec& spec, const Matrix& X);

/// Total polynomial order of term t (0 for the intercept).
int term_order(const BasisSpec& spec, int t);

/// Human-readable term name: "1", "x2", "x1*x4", "x3^2".
std::string term_label(const BasisSpec& spec, int t);

/// Labels of the active terms, in order.
std::vector<std::string> active_labels(const BasisSpec& spec);

/// Effect-hierarchy prior correlation diag{r^order(term)} over active terms.
struct HierarchyR {
  double r = 0.0;
  Vector diag;
};

HierarchyR hierarchy_R(const BasisSpec& spec, double r);

}  // namespace evigp
