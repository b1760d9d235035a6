#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "sktshadow/errors.hpp"

namespace sktshadow {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// DCT-II/III pair on the midpoint grid. Fields use the convention
/// f(x) = sum_m c_m cos(m pi x / L); analysis and synthesis are exact
/// inverses of each other to rounding. Plan execution is thread-safe;
/// per-call scratch is allocated locally.
class Dct {
 public:
  explicit Dct(int n) : n_(n) {
    std::vector<double> a(n), b(n);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd_ = fftw_plan_r2r_1d(n, a.data(), b.data(), FFTW_REDFT10,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_r2r_1d(n, a.data(), b.data(), FFTW_REDFT01,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~Dct() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Dct(const Dct&) = delete;
  Dct& operator=(const Dct&) = delete;

  void nodal_to_coeff(const double* x, double* c) const {
    std::vector<double> raw(n_);
    fftw_execute_r2r(fwd_, const_cast<double*>(x), raw.data());
    c[0] = raw[0] / (2.0 * n_);
    for (int m = 1; m < n_; ++m) c[m] = raw[m] / n_;
  }

  void coeff_to_nodal(const double* c, double* x) const {
    std::vector<double> half(n_);
    half[0] = c[0];
    for (int m = 1; m < n_; ++m) half[m] = 0.5 * c[m];
    fftw_execute_r2r(inv_, half.data(), x);
  }

  int n() const { return n_; }

 private:
  int n_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

struct DomainData {
  double length;
  int n;
  std::vector<double> nodes;      // x_k = (k + 1/2) L / n
  std::vector<double> lambda_m;   // (m pi / L)^2
  Dct dct;
  Eigen::MatrixXd synthesis;      // S[k][m] = cos(m pi (k+1/2)/n)
  Eigen::MatrixXd analysis;       // exact inverse of S from the DCT formulas
  Eigen::MatrixXd laplacian;      // S diag(-lambda_m) A, nodal collocation form

  DomainData(double L, int n_) : length(L), n(n_), dct(n_) {
    nodes.resize(n);
    lambda_m.resize(n);
    for (int k = 0; k < n; ++k) nodes[k] = (k + 0.5) * L / n;
    for (int m = 0; m < n; ++m) {
      const double w = m * M_PI / L;
      lambda_m[m] = w * w;
    }
    synthesis.resize(n, n);
    analysis.resize(n, n);
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) {
        const double c = std::cos(m * M_PI * (k + 0.5) / n);
        synthesis(k, m) = c;
        analysis(m, k) = (m == 0 ? 1.0 : 2.0) * c / n;
      }
    laplacian = synthesis * (-Eigen::Map<const Eigen::VectorXd>(lambda_m.data(), n)).asDiagonal() *
                analysis;
  }
};

}  // namespace detail

/// One-dimensional domain (0, L) with n midpoint collocation nodes and the
/// cosine-spectral machinery attached. Cheap to copy; the heavy state is
/// shared and immutable.
class Domain1D {
 public:
  Domain1D(double length, int n) {
    if (!(length > 0)) throw InvalidParameter("domain length must be positive");
    if (n < 64 || (n & (n - 1)) != 0)
      throw InvalidParameter("n must be a power of two >= 64");
    data_ = std::make_shared<const detail::DomainData>(length, n);
  }

  double length() const { return data_->length; }
  int n() const { return data_->n; }
  const std::vector<double>& nodes() const { return data_->nodes; }
  const std::vector<double>& lambda_modes() const { return data_->lambda_m; }
  double lambda_mode(int m) const { return data_->lambda_m[m]; }

  void nodal_to_coeff(std::span<const double> x, std::span<double> c) const {
    data_->dct.nodal_to_coeff(x.data(), c.data());
  }
  void coeff_to_nodal(std::span<const double> c, std::span<double> x) const {
    data_->dct.coeff_to_nodal(c.data(), x.data());
  }

  const Eigen::MatrixXd& synthesis() const { return data_->synthesis; }
  const Eigen::MatrixXd& analysis() const { return data_->analysis; }
  /// Dense nodal Laplacian (exactly similar to diag(-lambda_m)).
  const Eigen::MatrixXd& laplacian() const { return data_->laplacian; }

  bool same_grid(const Domain1D& o) const { return data_ == o.data_; }

 private:
  std::shared_ptr<const detail::DomainData> data_;
};

}  // namespace sktshadow
