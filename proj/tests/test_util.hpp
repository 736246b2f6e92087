#pragma once

#include <Eigen/Core>
#include <cmath>

#include "npt/bw_geometry.hpp"
#include "npt/rng.hpp"

namespace npt_test {

inline Eigen::MatrixXd random_spd(int d, npt::Rng& rng, double jitter = 0.1) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  Eigen::MatrixXd a = m * m.transpose() + jitter * Eigen::MatrixXd::Identity(d, d);
  return 0.5 * (a + a.transpose());
}

inline npt::CorrelationMatrix random_correlation(int d, npt::Rng& rng) {
  return npt::project_correlation(npt::SpdMatrix(random_spd(d, rng, 0.3)));
}

// Closed-form squared BW distance between 2x2 SPD matrices; the independent
// route used to cross-check the eigendecomposition implementation.
inline double bw2_closed_form_2x2(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  const double tr_ab = (a * b).trace();
  const double det_ab = a.determinant() * b.determinant();
  const double cross = std::sqrt(std::max(tr_ab + 2.0 * std::sqrt(std::max(det_ab, 0.0)), 0.0));
  return a.trace() + b.trace() - 2.0 * cross;
}

// Weighted bivariate-correlation objective sum_i w_i B^2(S(rho_i), S(rho))
// and its derivative in rho, from the closed form.
inline double bivariate_objective(const std::vector<double>& rhos,
                                  const std::vector<double>& weights,
                                  double rho) {
  double total = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    total += weights[i] *
             (4.0 - 2.0 * std::sqrt((1.0 + rhos[i]) * (1.0 + rho)) -
              2.0 * std::sqrt((1.0 - rhos[i]) * (1.0 - rho)));
  }
  return total;
}

inline double bivariate_objective_derivative(const std::vector<double>& rhos,
                                             const std::vector<double>& weights,
                                             double rho) {
  double a = 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    a += weights[i] * std::sqrt(1.0 + rhos[i]);
    d += weights[i] * std::sqrt(1.0 - rhos[i]);
  }
  return -a / std::sqrt(1.0 + rho) + d / std::sqrt(1.0 - rho);
}

}  // namespace npt_test
