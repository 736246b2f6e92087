#include "npt/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace npt {

QuantileFunction::QuantileFunction(QuantileGrid grid, Eigen::VectorXd values,
                                   std::optional<Support> support)
    : grid_(grid), values_(std::move(values)), support_(support) {
  if (grid_.m < 1) throw ValidationError("QuantileFunction: grid M must be >= 1");
  if (values_.size() != grid_.m) {
    throw ValidationError("QuantileFunction: values length differs from grid");
  }
  if (!values_.allFinite()) {
    throw ValidationError("QuantileFunction: values must be finite");
  }
  for (Eigen::Index k = 1; k < values_.size(); ++k) {
    if (values_(k) < values_(k - 1)) {
      std::ostringstream msg;
      msg << "QuantileFunction: values not nondecreasing at index " << k;
      throw ValidationError(msg.str());
    }
  }
  if (support_) {
    if (!(support_->lo <= support_->hi)) {
      throw ValidationError("QuantileFunction: invalid support bounds");
    }
    if (values_(0) < support_->lo ||
        values_(values_.size() - 1) > support_->hi) {
      throw ValidationError("QuantileFunction: values outside support bounds");
    }
  }
}

double QuantileFunction::evaluate(double p) const {
  const int m = grid_.m;
  if (p <= grid_.point(0)) return values_(0);
  if (p >= grid_.point(m - 1)) return values_(m - 1);
  // p lies between grid points k and k+1 with k = floor(p*M - 0.5).
  const double pos = p * m - 0.5;
  int k = static_cast<int>(std::floor(pos));
  k = std::clamp(k, 0, m - 2);
  const double frac = pos - k;
  return values_(k) + frac * (values_(k + 1) - values_(k));
}

QuantileFunction from_samples(std::span<const double> xs,
                              const QuantileGrid& grid,
                              std::optional<Support> support) {
  if (xs.empty()) throw ValidationError("from_samples: empty sample");
  std::vector<double> sorted(xs.begin(), xs.end());
  for (double x : sorted) {
    if (!std::isfinite(x)) throw ValidationError("from_samples: non-finite value");
  }
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t n = static_cast<std::int64_t>(sorted.size());
  const std::int64_t m = grid.m;
  Eigen::VectorXd values(grid.m);
  for (std::int64_t k = 0; k < m; ++k) {
    // smallest i (1-based) with i/N >= p_k = (2k+1)/(2M), in exact integer
    // arithmetic: i = ceil(N (2k+1) / (2M)).
    const std::int64_t num = n * (2 * k + 1);
    const std::int64_t den = 2 * m;
    const std::int64_t idx = (num + den - 1) / den;
    values(k) = sorted[static_cast<std::size_t>(idx - 1)];
  }
  if (support) {
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      values(k) = std::clamp(values(k), support->lo, support->hi);
    }
  }
  return QuantileFunction(grid, std::move(values), support);
}

double w2(const QuantileFunction& a, const QuantileFunction& b) {
  if (!(a.grid() == b.grid())) throw ValidationError("w2: grid mismatch");
  const double mean_sq = (a.values() - b.values()).squaredNorm() / a.grid().m;
  return std::sqrt(mean_sq);
}

void pava_inplace(std::vector<double>& ys) {
  const std::size_t n = ys.size();
  if (n <= 1) return;
  // Blocks of pooled values: (mean, count), merged while out of order.
  std::vector<double> mean(n);
  std::vector<std::size_t> count(n);
  std::size_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean[top] = ys[i];
    count[top] = 1;
    while (top > 0 && mean[top - 1] > mean[top]) {
      const double total = mean[top - 1] * count[top - 1] + mean[top] * count[top];
      count[top - 1] += count[top];
      mean[top - 1] = total / count[top - 1];
      --top;
    }
    ++top;
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < top; ++b) {
    for (std::size_t r = 0; r < count[b]; ++r) ys[pos++] = mean[b];
  }
}

QuantileFunction isotonic_project(const QuantileGrid& grid,
                                  std::span<const double> ys,
                                  std::optional<Support> support) {
  if (static_cast<int>(ys.size()) != grid.m) {
    throw ValidationError("isotonic_project: length differs from grid");
  }
  std::vector<double> work(ys.begin(), ys.end());
  for (double y : work) {
    if (!std::isfinite(y)) {
      throw ValidationError("isotonic_project: non-finite input");
    }
  }
  pava_inplace(work);
  Eigen::VectorXd values(grid.m);
  for (int k = 0; k < grid.m; ++k) {
    values(k) = support ? std::clamp(work[k], support->lo, support->hi) : work[k];
  }
  return QuantileFunction(grid, std::move(values), support);
}

Eigen::VectorXd weighted_mean(const std::vector<QuantileFunction>& qs,
                              std::span<const double> weights) {
  if (qs.empty() || qs.size() != weights.size()) {
    throw ValidationError("weighted_mean: length mismatch");
  }
  const QuantileGrid grid = qs[0].grid();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.m);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (!(qs[i].grid() == grid)) {
      throw ValidationError("weighted_mean: grid mismatch");
    }
    if (!std::isfinite(weights[i])) {
      throw ValidationError("weighted_mean: non-finite weight");
    }
    acc += weights[i] * qs[i].values();
  }
  return acc;
}

}  // namespace npt
