#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "sktshadow/domain.hpp"

namespace sktshadow {

/// Scalar field over a Domain1D, held simultaneously as nodal values and
/// cosine coefficients. Both representations are built at construction and
/// never drift apart.
class Field {
 public:
  static Field from_nodal(const Domain1D& dom, std::vector<double> values) {
    Field f(dom);
    f.nodal_ = std::move(values);
    f.coeff_.resize(dom.n());
    dom.nodal_to_coeff(f.nodal_, f.coeff_);
    return f;
  }

  static Field from_coeff(const Domain1D& dom, std::vector<double> coeffs) {
    Field f(dom);
    f.coeff_ = std::move(coeffs);
    f.nodal_.resize(dom.n());
    dom.coeff_to_nodal(f.coeff_, f.nodal_);
    return f;
  }

  static Field constant(const Domain1D& dom, double value) {
    std::vector<double> c(dom.n(), 0.0);
    c[0] = value;
    return from_coeff(dom, std::move(c));
  }

  static Field zero(const Domain1D& dom) { return constant(dom, 0.0); }

  const Domain1D& domain() const { return dom_; }
  const std::vector<double>& nodal() const { return nodal_; }
  const std::vector<double>& coeff() const { return coeff_; }
  int n() const { return dom_.n(); }

  double min() const { return *std::min_element(nodal_.begin(), nodal_.end()); }
  double max() const { return *std::max_element(nodal_.begin(), nodal_.end()); }
  double linf() const {
    double m = 0;
    for (double v : nodal_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Evaluate the cosine series at an arbitrary x (not restricted to nodes).
  double eval(double x) const {
    double s = 0;
    for (int m = 0; m < dom_.n(); ++m)
      s += coeff_[m] * std::cos(m * M_PI * x / dom_.length());
    return s;
  }

 private:
  explicit Field(const Domain1D& dom) : dom_(dom) {}
  Domain1D dom_;
  std::vector<double> nodal_;
  std::vector<double> coeff_;
};

enum class FieldRole { State, Residual, Eigenfunction };

/// Two-component field (phi, psi); also used for (u, w), residuals and
/// eigenfunctions.
struct FieldPair {
  Field phi;
  Field psi;
  FieldRole role = FieldRole::State;

  const Domain1D& domain() const { return phi.domain(); }
  double linf() const { return std::max(phi.linf(), psi.linf()); }
};

inline FieldPair make_pair_nodal(const Domain1D& dom, std::vector<double> a,
                                 std::vector<double> b,
                                 FieldRole role = FieldRole::State) {
  return FieldPair{Field::from_nodal(dom, std::move(a)),
                   Field::from_nodal(dom, std::move(b)), role};
}

inline FieldPair make_pair_coeff(const Domain1D& dom, std::vector<double> a,
                                 std::vector<double> b,
                                 FieldRole role = FieldRole::State) {
  return FieldPair{Field::from_coeff(dom, std::move(a)),
                   Field::from_coeff(dom, std::move(b)), role};
}

}  // namespace sktshadow
