#pragma once

#include <stdexcept>
#include <string>

namespace sktshadow {

/// Base class for every error the toolkit raises on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParameter : Error {
  using Error::Error;
};

/// State left the positive cone: psi - beta*phi + eps + sqrt(...) <= 0.
struct NonPositiveDenominator : Error {
  using Error::Error;
};

/// EpsilonContext with d2 <= 0 (eps >= a2/lambda_j).
struct ContextInvalid : Error {
  using Error::Error;
};

/// Operation needs eps > 0 strictly (r2 divides by eps).
struct EpsilonZero : Error {
  using Error::Error;
};

/// mu outside the admissible bracket (m_j, M_j).
struct OutOfBracket : Error {
  using Error::Error;
};

/// A <= B: h_j(mu) = A/B has no root.
struct RatioNotAboveOne : Error {
  using Error::Error;
};

/// h_j failed to exceed the target before the bracket endpoint offset.
struct BracketFailure : Error {
  using Error::Error;
};

struct NonPositiveAmplitude : Error {
  using Error::Error;
};

struct DegenerateRoot : Error {
  using Error::Error;
};

struct SignViolation : Error {
  using Error::Error;
};

/// Right-hand side handed to solve_L_X0 is not in Range(L).
struct RhsNotInRange : Error {
  RhsNotInRange(double s_proj, double t_proj)
      : Error("rhs not in Range(L): projections (" + std::to_string(s_proj) +
              ", " + std::to_string(t_proj) + ") exceed tol_range"),
        s_proj(s_proj),
        t_proj(t_proj) {}
  double s_proj;
  double t_proj;
};

/// A field left the positive cone at a grid node.
struct PositivityLoss : Error {
  explicit PositivityLoss(int node)
      : Error("positivity lost at node " + std::to_string(node)), node(node) {}
  int node;
};

struct NoConvergence : Error {
  NoConvergence(int iterations, double final_norm)
      : Error("Newton did not converge after " + std::to_string(iterations) +
              " iterations, |r| = " + std::to_string(final_norm)),
        iterations(iterations),
        final_norm(final_norm) {}
  int iterations;
  double final_norm;
};

struct BranchBroken : Error {
  BranchBroken(double at_eps, double at_eta, const std::string& why)
      : Error("branch broken at eps = " + std::to_string(at_eps) +
              ", eta = " + std::to_string(at_eta) + ": " + why),
        at_eps(at_eps),
        at_eta(at_eta) {}
  double at_eps;
  double at_eta;
};

struct NoRealEigenvalueNearTarget : Error {
  NoRealEigenvalueNearTarget(double lo, double hi)
      : Error("no real eigenvalue in window [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]"),
        lo(lo),
        hi(hi) {}
  double lo;
  double hi;
};

struct NoGrowth : Error {
  using Error::Error;
};

struct StepRejected : Error {
  using Error::Error;
};

struct MissingArtifacts : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sktshadow
