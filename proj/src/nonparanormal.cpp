#include "npt/nonparanormal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace npt {

RawSample::RawSample(Eigen::MatrixXd r) : rows(std::move(r)) {
  if (rows.rows() < 2) throw ValidationError("RawSample: need at least 2 rows");
  if (rows.cols() < 1) throw ValidationError("RawSample: need at least 1 column");
  if (!rows.allFinite()) throw ValidationError("RawSample: non-finite entries");
}

Nonparanormal::Nonparanormal(std::vector<QuantileFunction> marginals,
                             CorrelationMatrix latent)
    : marginals_(std::move(marginals)), latent_(std::move(latent)) {
  if (static_cast<int>(marginals_.size()) != latent_.dim()) {
    throw ValidationError(
        "Nonparanormal: marginal count differs from latent dimension");
  }
  for (std::size_t j = 0; j < marginals_.size(); ++j) {
    if (!(marginals_[j].grid() == marginals_[0].grid())) {
      throw ValidationError("Nonparanormal: marginals on different grids");
    }
    if (marginals_[j].degenerate()) {
      std::ostringstream msg;
      msg << "Nonparanormal: marginal " << j
          << " has zero grid variance (point mass)";
      throw DegenerateError(msg.str());
    }
  }
}

namespace {

// Merge sort counting strict inversions (earlier value strictly greater).
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf,
                              std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, buf, lo, mid) +
                     count_inversions(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

std::int64_t tie_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::int64_t pairs = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const std::int64_t run = static_cast<std::int64_t>(j - i);
    pairs += run * (run - 1) / 2;
    i = j;
  }
  return pairs;
}

// Kendall tau-a between two columns in O(N log N). Pairs tied in either
// coordinate contribute zero to the numerator; the denominator stays
// N(N-1)/2.
double kendall_tau_a(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     bool* ties) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x(a) != x(b)) return x(a) < x(b);
    return y(a) < y(b);
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y(order[i]);

  // Sorted by (x asc, y asc): strict y-inversions are exactly the pairs with
  // x_i < x_j and y_i > y_j, i.e. the discordant pairs.
  std::vector<double> buf(n);
  const std::int64_t discordant = count_inversions(ys, buf, 0, n);

  std::vector<double> xv(x.data(), x.data() + n);
  std::vector<double> yv(y.data(), y.data() + n);
  const std::int64_t tx = tie_pairs(std::move(xv));
  const std::int64_t ty = tie_pairs(std::move(yv));
  std::int64_t txy = 0;
  if (tx > 0 && ty > 0) {
    std::vector<std::pair<double, double>> both(n);
    for (std::size_t i = 0; i < n; ++i) both[i] = {x(i), y(i)};
    std::sort(both.begin(), both.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && both[j] == both[i]) ++j;
      const std::int64_t run = static_cast<std::int64_t>(j - i);
      txy += run * (run - 1) / 2;
      i = j;
    }
  }
  if (ties != nullptr && (tx > 0 || ty > 0)) *ties = true;

  const std::int64_t total = static_cast<std::int64_t>(n) *
                             static_cast<std::int64_t>(n - 1) / 2;
  // concordant = total - discordant - (pairs tied in x or y)
  const std::int64_t concordant = total - discordant - (tx + ty - txy);
  return static_cast<double>(concordant - discordant) /
         static_cast<double>(total);
}

}  // namespace

SymMatrix kendall_tau_matrix(const RawSample& s, bool* ties_detected) {
  const int d = s.d();
  if (ties_detected != nullptr) *ties_detected = false;
  for (int j = 0; j < d; ++j) {
    const double lo = s.rows.col(j).minCoeff();
    const double hi = s.rows.col(j).maxCoeff();
    if (hi <= lo) {
      std::ostringstream msg;
      msg << "kendall_tau_matrix: column " << j << " is constant";
      throw DegenerateError(msg.str());
    }
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      const double tau =
          kendall_tau_a(s.rows.col(j), s.rows.col(k), ties_detected);
      const double r = std::sin(std::numbers::pi * tau / 2.0);
      m(j, k) = r;
      m(k, j) = r;
    }
  }
  return SymMatrix(std::move(m));
}

Nonparanormal estimate(const RawSample& s, const QuantileGrid& grid,
                       const std::vector<std::optional<Support>>& supports,
                       EstimateDiagnostics* diag) {
  const int d = s.d();
  if (!supports.empty() && static_cast<int>(supports.size()) != d) {
    throw ValidationError("estimate: supports length differs from dimension");
  }
  bool ties = false;
  const SymMatrix raw = kendall_tau_matrix(s, &ties);
  if (diag != nullptr) diag->ties_detected = ties;

  // PSD repair: clip eigenvalues at 1e-8, restore the exact unit diagonal by
  // symmetric normalization. A no-op for already-PSD inputs.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(raw.mat());
  CorrelationMatrix latent = [&] {
    if (solver.eigenvalues().minCoeff() >= -1e-10) {
      Eigen::MatrixXd m = raw.mat();
      for (int i = 0; i < d; ++i) m(i, i) = 1.0;
      return CorrelationMatrix(std::move(m));
    }
    if (diag != nullptr) diag->psd_repaired = true;
    Eigen::VectorXd lam = solver.eigenvalues().cwiseMax(1e-8);
    Eigen::MatrixXd fixed = solver.eigenvectors() * lam.asDiagonal() *
                            solver.eigenvectors().transpose();
    return project_correlation(SpdMatrix(0.5 * (fixed + fixed.transpose())));
  }();

  std::vector<QuantileFunction> marginals;
  marginals.reserve(d);
  for (int j = 0; j < d; ++j) {
    const std::span<const double> col(s.rows.col(j).data(),
                                      static_cast<std::size_t>(s.n()));
    marginals.push_back(
        from_samples(col, grid, supports.empty() ? std::nullopt : supports[j]));
  }
  return Nonparanormal(std::move(marginals), std::move(latent));
}

double npt_distance(const Nonparanormal& a, const Nonparanormal& b) {
  if (a.d() != b.d()) throw ValidationError("npt_distance: dimension mismatch");
  if (!(a.grid() == b.grid())) throw ValidationError("npt_distance: grid mismatch");
  double sq = 0.0;
  for (int j = 0; j < a.d(); ++j) {
    const double m = w2(a.marginal(j), b.marginal(j));
    sq += m * m;
  }
  const double bw = bw_distance(a.latent().spd(), b.latent().spd());
  sq += bw * bw;
  return std::sqrt(sq);
}

RawSample sample(const Nonparanormal& m, int n, Rng& rng) {
  if (n < 2) throw ValidationError("sample: need at least 2 draws");
  if (!m.latent().spd().strictly_positive()) {
    std::ostringstream msg;
    msg << "sample: latent correlation is singular (smallest eigenvalue "
        << m.latent().min_eigenvalue() << ")";
    throw SingularityError(msg.str());
  }
  const int d = m.d();
  Eigen::LLT<Eigen::MatrixXd> llt(m.latent().mat());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("sample: Cholesky factorization failed");
  }
  const Eigen::MatrixXd chol = llt.matrixL();
  Eigen::MatrixXd rows(n, d);
  Eigen::VectorXd g(d);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < d; ++j) g(j) = rng.normal();
    const Eigen::VectorXd z = chol * g;
    for (int j = 0; j < d; ++j) rows(k, j) = m.marginal(j).evaluate(phi(z(j)));
  }
  return RawSample(std::move(rows));
}

double phi(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace {

// Peter Acklam's rational approximation to the normal quantile, refined by a
// Halley step; absolute error well below 1e-12 across (0, 1).
double phi_inv_approx(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double phi_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("phi_inv: probability must lie in (0, 1)");
  }
  double x = phi_inv_approx(p);
  // One Halley refinement against the high-accuracy erfc-based CDF.
  const double e = phi(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x -= u / (1.0 + x * u / 2.0);
  return x;
}

double Rng::normal() { return phi_inv(uniform()); }

double h1_seminorm_gaussian(double sd) {
  if (!(sd > 0.0)) throw ValidationError("h1_seminorm_gaussian: sd must be > 0");
  return sd;
}

double h1_seminorm_lognormal(double mu0, double sd) {
  if (!(sd > 0.0)) throw ValidationError("h1_seminorm_lognormal: sd must be > 0");
  return sd * std::exp(mu0 + sd * sd);
}

}  // namespace npt
