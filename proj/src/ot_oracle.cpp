#include "npt/ot_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace npt {

PointCloud::PointCloud(Eigen::MatrixXd p) : pts(std::move(p)) {
  if (pts.rows() < 1) throw ValidationError("PointCloud: need at least 1 point");
  if (!pts.allFinite()) throw ValidationError("PointCloud: non-finite entries");
}

namespace {

// Jonker-Volgenant style shortest augmenting path assignment on a dense
// square cost matrix; returns the minimal total cost.
double solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (match[j] != 0) total += cost(match[j] - 1, j - 1);
  }
  return total;
}

}  // namespace

double assignment_w2(const PointCloud& a, const PointCloud& b) {
  if (a.n() != b.n()) {
    throw ValidationError("assignment_w2: clouds must have equal sizes");
  }
  if (a.d() != b.d()) {
    throw ValidationError("assignment_w2: dimension mismatch");
  }
  if (a.n() > 2000) {
    std::ostringstream msg;
    msg << "assignment_w2: N = " << a.n()
        << " exceeds the 2000-point guard for the O(N^3) solver";
    throw ValidationError(msg.str());
  }
  const int n = a.n();
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cost(i, j) = (a.pts.row(i) - b.pts.row(j)).squaredNorm();
    }
  }
  const double total = solve_assignment(cost);
  return std::sqrt(std::max(total, 0.0) / n);
}

double sorted_w2(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw ValidationError("sorted_w2: samples must be non-empty, equal sizes");
  }
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> y(ys.begin(), ys.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    sq += diff * diff;
  }
  return std::sqrt(sq / static_cast<double>(x.size()));
}

double gaussian_w2(const Eigen::VectorXd& m1, const SpdMatrix& c1,
                   const Eigen::VectorXd& m2, const SpdMatrix& c2) {
  if (m1.size() != m2.size() || m1.size() != c1.dim() || c1.dim() != c2.dim()) {
    throw ValidationError("gaussian_w2: dimension mismatch");
  }
  const double bw = bw_distance(c1, c2);
  return std::sqrt((m1 - m2).squaredNorm() + bw * bw);
}

}  // namespace npt
