#pragma once

#include "sktshadow/errors.hpp"

namespace sktshadow {

/// All scalar model rates. Single source of constants for the whole pipeline.
///
/// a1,a2: birth rates; b1,c2: intra-specific competition; c1,b2:
/// inter-specific competition; d1: diffusion rate of u; beta: cross-diffusion
/// coefficient in the w-equation. The dimensionless ratios A = a1/a2,
/// B = b1/b2, C = c1/c2 drive the reduction. A > B is required by the
/// reduction entry points, not by the constructor.
struct Params {
  double a1 = 1.0;
  double a2 = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double d1 = 1.0;
  double beta = 0.0;

  double A() const { return a1 / a2; }
  double B() const { return b1 / b2; }
  double C() const { return c1 / c2; }

  /// Kernel slope beta + b2/a2 that appears throughout L, e1 and the
  /// projections.
  double kernel_slope() const { return beta + b2 / a2; }

  void validate() const {
    if (!(a1 > 0 && a2 > 0 && b1 > 0 && b2 > 0 && c1 >= 0 && c2 >= 0))
      throw InvalidParameter("rate constants must be positive");
    if (!(d1 > 0)) throw InvalidParameter("d1 must be positive");
    if (!(beta >= 0)) throw InvalidParameter("beta must be nonnegative");
  }
};

/// Distance to the blow-up point for one Neumann mode: eps = a2/lambda_j - d2.
struct EpsilonContext {
  int j = 1;
  double lambda_j = 0.0;
  double eps = 0.0;
  double d2 = 0.0;

  static EpsilonContext make(int j, double lambda_j, double eps, const Params& p) {
    EpsilonContext ctx;
    ctx.j = j;
    ctx.lambda_j = lambda_j;
    ctx.eps = eps;
    ctx.d2 = p.a2 / lambda_j - eps;
    if (eps < 0) throw ContextInvalid("eps must be nonnegative");
    if (!(ctx.d2 > 0)) throw ContextInvalid("d2 = a2/lambda_j - eps must stay positive");
    return ctx;
  }

  /// 1/d2 written without the subtraction, = lambda_j/(a2 - eps*lambda_j).
  double inv_d2(const Params& p) const { return lambda_j / (p.a2 - eps * lambda_j); }
};

}  // namespace sktshadow
