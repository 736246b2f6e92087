#pragma once

#include <Eigen/Core>
#include <span>

#include "npt/bw_geometry.hpp"

namespace npt {

// N points in R^d with uniform weights 1/N.
struct PointCloud {
  Eigen::MatrixXd pts;

  explicit PointCloud(Eigen::MatrixXd p);
  int n() const { return static_cast<int>(pts.rows()); }
  int d() const { return static_cast<int>(pts.cols()); }
};

// Exact 2-Wasserstein distance between equal-size uniform point clouds via
// the optimal assignment (shortest augmenting path, O(N^3)). Guarded at
// N <= 2000.
double assignment_w2(const PointCloud& a, const PointCloud& b);

// Exact univariate W2 between equal-size samples: sorted matching.
double sorted_w2(std::span<const double> xs, std::span<const double> ys);

// Closed-form Gaussian W2: sqrt(|m1 - m2|^2 + bw_distance(c1, c2)^2).
double gaussian_w2(const Eigen::VectorXd& m1, const SpdMatrix& c1,
                   const Eigen::VectorXd& m2, const SpdMatrix& c2);

}  // namespace npt
