#include "evigp/basis.hpp"

#include <cmath>

namespace evigp {

int BasisSpec::n_active() const {
  int c = 0;
  for (char a : active) c += (a != 0);
  return c;
}

BasisSpec build_basis(int d, int degree) {
  if (d < 1) throw std::invalid_argument("build_basis: need d >= 1");
  if (degree < 0 || degree > 2)
    throw std::invalid_argument("build_basis: degree must be 0, 1 or 2");

  BasisSpec spec;
  spec.d = d;
  spec.degree = degree;
  spec.exponents.push_back(std::vector<int>(d, 0));  // intercept
  if (degree >= 1) {
    for (int i = 0; i < d; ++i) {
      std::vector<int> e(d, 0);
      e[i] = 1;
      spec.exponents.push_back(e);
    }
  }
  if (degree == 2) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        std::vector<int> e(d, 0);
        e[i] += 1;
        e[j] += 1;
        spec.exponents.push_back(e);
      }
  }
  spec.active.assign(spec.exponents.size(), 1);
  return spec;
}

Vector eval_basis(const BasisSpec& spec, const Vector& x) {
  if (x.size() != spec.d)
    throw std::invalid_argument("eval_basis: input dimension mismatch");
  Vector g(spec.n_active());
  int out = 0;
  for (int t = 0; t < spec.n_terms(); ++t) {
    if (!spec.active[t]) continue;
    double v = 1.0;
    for (int j = 0; j < spec.d; ++j) {
      for (int e = 0; e < spec.exponents[t][j]; ++e) v *= x[j];
    }
    g[out++] = v;
  }
  return g;
}

Matrix design_matrix(const BasisSpec& spec, const Matrix& X) {
  const int n = static_cast<int>(X.rows());
  Matrix G(n, spec.n_active());
  for (int i = 0; i < n; ++i) G.row(i) = eval_basis(spec, X.row(i).transpose()).transpose();
  return G;
}

int term_order(const BasisSpec& spec, int t) {
  if (t < 0 || t >= spec.n_terms())
    throw std::invalid_argument("term_order: index out of range");
  int o = 0;
  for (int j = 0; j < spec.d; ++j) o += spec.exponents[t][j];
  return o;
}

std::string term_label(const BasisSpec& spec, int t) {
  if (t < 0 || t >= spec.n_terms())
    throw std::invalid_argument("term_label: index out of range");
  std::string label;
  for (int j = 0; j < spec.d; ++j) {
    int e = spec.exponents[t][j];
    if (e == 0) continue;
    if (!label.empty()) label += "*";
    label += "x" + std::to_string(j + 1);
    if (e > 1) label += "^" + std::to_string(e);
  }
  return label.empty() ? "1" : label;
}

std::vector<std::string> active_labels(const BasisSpec& spec) {
  std::vector<std::string> labels;
  for (int t = 0; t < spec.n_terms(); ++t)
    if (spec.active[t]) labels.push_back(term_label(spec, t));
  return labels;
}

HierarchyR hierarchy_R(const BasisSpec& spec, double r) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("hierarchy_R: r must lie in (0,1)");
  HierarchyR out;
  out.r = r;
  out.diag.resize(spec.n_active());
  int i = 0;
  for (int t = 0; t < spec.n_terms(); ++t) {
    if (!spec.active[t]) continue;
    out.diag[i++] = std::pow(r, term_order(spec, t));
  }
  return out;
}

}  // namespace evigp
