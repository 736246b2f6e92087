#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "npt/errors.hpp"

namespace npt {

// Equispaced midpoint grid p_k = (k - 0.5) / M on (0, 1), k = 1..M.
// Midpoints keep heavy-tailed quantiles away from 0 and 1.
struct QuantileGrid {
  int m = 200;

  double point(int k) const { return (k + 0.5) / m; }  // 0-based k
  bool operator==(const QuantileGrid&) const = default;
};

struct Support {
  double lo;
  double hi;
};

// A univariate distribution as M nondecreasing quantile values on a fixed
// grid. Monotonicity is exact (no tolerance) after construction.
class QuantileFunction {
 public:
  QuantileFunction(QuantileGrid grid, Eigen::VectorXd values,
                   std::optional<Support> support = std::nullopt);

  const QuantileGrid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  const std::optional<Support>& support() const { return support_; }

  // Quantile at probability p by piecewise-linear interpolation between grid
  // points, constant beyond the first/last grid point.
  double evaluate(double p) const;

  bool degenerate() const {
    return values_(values_.size() - 1) <= values_(0);
  }

 private:
  QuantileGrid grid_;
  Eigen::VectorXd values_;
  std::optional<Support> support_;
};

// Left-continuous empirical quantile (smallest order statistic x_(i) with
// i/N >= p) evaluated at the grid points.
QuantileFunction from_samples(std::span<const double> xs,
                              const QuantileGrid& grid,
                              std::optional<Support> support = std::nullopt);

// Grid approximation of the univariate 2-Wasserstein distance:
// sqrt((1/M) sum_k (a_k - b_k)^2).
double w2(const QuantileFunction& a, const QuantileFunction& b);

// Euclidean projection of ys onto the cone of nondecreasing sequences
// (pool-adjacent-violators), then clipped to the support box.
QuantileFunction isotonic_project(const QuantileGrid& grid,
                                  std::span<const double> ys,
                                  std::optional<Support> support = std::nullopt);

// In-place PAVA on a plain vector; exposed for reuse and testing.
void pava_inplace(std::vector<double>& ys);

// Pointwise weighted average of quantile vectors. The result is generally
// not monotone; feed it to isotonic_project.
Eigen::VectorXd weighted_mean(const std::vector<QuantileFunction>& qs,
                              std::span<const double> weights);

}  // namespace npt
