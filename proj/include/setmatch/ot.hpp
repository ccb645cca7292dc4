#pragma once

// Discrete optimal transport between two small point sets: cosine ground
// costs, entropic (Sinkhorn) approximation of the earth mover's distance,
// rounding onto the transport polytope, and an exact assignment-based solver
// used as a reference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"

namespace setmatch::ot {

/// Dense row-major M x N cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.front().size();
    CostMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      if (rows[i].size() != n) throw Error(ErrorCode::DimMismatch, "ragged cost matrix");
      std::copy(rows[i].begin(), rows[i].end(), c.data_.begin() + i * n);
    }
    return c;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t m, std::size_t n) { return data_[m * cols_ + n]; }
  double operator()(std::size_t m, std::size_t n) const { return data_[m * cols_ + n]; }
  std::span<const double> data() const { return data_; }

  CostMatrix transposed() const {
    CostMatrix t(cols_, rows_);
    for (std::size_t m = 0; m < rows_; ++m)
      for (std::size_t n = 0; n < cols_; ++n) t(n, m) = (*this)(m, n);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Row (mu) and column (nu) masses. Strictly positive, each summing to one.
struct Marginals {
  std::vector<double> mu;
  std::vector<double> nu;

  static Marginals uniform(std::size_t rows, std::size_t cols) {
    Marginals m;
    m.mu.assign(rows, rows == 0 ? 0.0 : 1.0 / static_cast<double>(rows));
    m.nu.assign(cols, cols == 0 ? 0.0 : 1.0 / static_cast<double>(cols));
    return m;
  }

  void validate() const {
    auto check = [](const std::vector<double>& v, const char* name) {
      double total = 0.0;
      for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
          throw Error(ErrorCode::InvalidArgument, std::string(name) + " has a non-positive mass");
        }
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " does not sum to 1");
      }
    };
    check(mu, "mu");
    check(nu, "nu");
  }

  bool is_uniform(double tol = 1e-12) const {
    const auto flat = [tol](const std::vector<double>& v) {
      const double target = 1.0 / static_cast<double>(v.size());
      return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - target) <= tol; });
    };
    return flat(mu) && flat(nu);
  }
};

enum class SolveStatus { Converged, MaxIters, Exact };

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coupling;  // row-major
  double achieved_cost = 0.0;
  SolveStatus status = SolveStatus::Exact;
  int iterations = 0;
  double marginal_violation = 0.0;  // L-inf row violation of the iterate before rounding

  double operator()(std::size_t m, std::size_t n) const { return coupling[m * cols + n]; }
  double& operator()(std::size_t m, std::size_t n) { return coupling[m * cols + n]; }

  std::vector<double> row_sums() const {
    std::vector<double> r(rows, 0.0);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t n = 0; n < cols; ++n) r[m] += (*this)(m, n);
    return r;
  }

  std::vector<double> col_sums() const {
    std::vector<double> c(cols, 0.0);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t n = 0; n < cols; ++n) c[n] += (*this)(m, n);
    return c;
  }
};

struct SinkhornConfig {
  double epsilon = 0.05;
  int max_iters = 200;
  double marginal_tol = 1e-6;
  // Ratio between successive epsilons of the warm-start schedule; values
  // outside (0, 1) disable the schedule.
  double epsilon_scaling = 0.5;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw Error(ErrorCode::InvalidArgument, "sinkhorn epsilon must be positive");
    }
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "sinkhorn max_iters must be >= 1");
    if (!(marginal_tol > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "sinkhorn marginal_tol must be positive");
    }
  }
};

inline double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  double total = 0.0;
  for (std::size_t m = 0; m < plan.rows; ++m)
    for (std::size_t n = 0; n < plan.cols; ++n) total += plan(m, n) * cost(m, n);
  return total;
}

/// C[m][n] = 1 - <a_m, b_n> for unit vectors.
inline CostMatrix cosine_cost(std::span<const EmbeddingVector> rows,
                              std::span<const EmbeddingVector> cols) {
  CostMatrix c(rows.size(), cols.size());
  for (std::size_t m = 0; m < rows.size(); ++m)
    for (std::size_t n = 0; n < cols.size(); ++n) c(m, n) = 1.0 - dot(rows[m], cols[n]);
  return c;
}

inline CostMatrix cosine_cost(const FeatureSet& image_set, const DescriptorSet& descriptor_set) {
  return cosine_cost(image_set.members(), descriptor_set.embeddings());
}

namespace detail {

inline void check_shapes(const CostMatrix& cost, const Marginals& marginals) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    throw Error(ErrorCode::Degenerate, "empty cost matrix");
  }
  if (marginals.mu.size() != cost.rows() || marginals.nu.size() != cost.cols()) {
    throw Error(ErrorCode::DimMismatch, "marginals do not match the cost matrix shape");
  }
  if (!cost.all_finite()) throw Error(ErrorCode::NonFiniteCost, "cost matrix has non-finite entries");
  marginals.validate();
}

inline double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace detail

/// Projects a nonnegative plan onto {T >= 0 : T1 = mu, T'1 = nu}: rows are
/// scaled down to at most mu, columns down to at most nu, and the missing
/// mass is spread as the outer product of the row and column deficits.
inline TransportPlan round_to_feasible(TransportPlan plan, const Marginals& marginals) {
  if (marginals.mu.size() != plan.rows || marginals.nu.size() != plan.cols) {
    throw Error(ErrorCode::DimMismatch, "marginals do not match the plan shape");
  }
  const auto rows = plan.row_sums();
  for (std::size_t m = 0; m < plan.rows; ++m) {
    const double scale = rows[m] > marginals.mu[m] ? marginals.mu[m] / rows[m] : 1.0;
    for (std::size_t n = 0; n < plan.cols; ++n) plan(m, n) *= scale;
  }
  const auto cols = plan.col_sums();
  for (std::size_t n = 0; n < plan.cols; ++n) {
    const double scale = cols[n] > marginals.nu[n] ? marginals.nu[n] / cols[n] : 1.0;
    for (std::size_t m = 0; m < plan.rows; ++m) plan(m, n) *= scale;
  }
  const auto r = plan.row_sums();
  const auto c = plan.col_sums();
  std::vector<double> row_deficit(plan.rows), col_deficit(plan.cols);
  double col_total = 0.0;
  for (std::size_t m = 0; m < plan.rows; ++m) row_deficit[m] = std::max(0.0, marginals.mu[m] - r[m]);
  for (std::size_t n = 0; n < plan.cols; ++n) {
    col_deficit[n] = std::max(0.0, marginals.nu[n] - c[n]);
    col_total += col_deficit[n];
  }
  if (col_total > 0.0) {
    for (std::size_t m = 0; m < plan.rows; ++m)
      for (std::size_t n = 0; n < plan.cols; ++n)
        plan(m, n) += row_deficit[m] * col_deficit[n] / col_total;
  }
  return plan;
}

/// Entropic OT in the log domain. The last iterate is always rounded onto
/// the polytope; when the L-inf row violation never drops below
/// marginal_tol the plan carries SolveStatus::MaxIters.
inline TransportPlan sinkhorn_emd(const CostMatrix& cost, const Marginals& marginals,
                                  const SinkhornConfig& config = {}) {
  detail::check_shapes(cost, marginals);
  config.validate();
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  const double eps = config.epsilon;

  std::vector<double> f(rows, 0.0), g(cols, 0.0);
  std::vector<double> log_mu(rows), log_nu(cols);
  for (std::size_t m = 0; m < rows; ++m) log_mu[m] = std::log(marginals.mu[m]);
  for (std::size_t n = 0; n < cols; ++n) log_nu[n] = std::log(marginals.nu[n]);

  std::vector<double> scratch(std::max(rows, cols));

  auto row_violation = [&](double e) {
    double worst = 0.0;
    for (std::size_t m = 0; m < rows; ++m) {
      double r = 0.0;
      for (std::size_t n = 0; n < cols; ++n) r += std::exp((f[m] + g[n] - cost(m, n)) / e);
      worst = std::max(worst, std::abs(r - marginals.mu[m]));
    }
    return worst;
  };
  auto sweep = [&](double e) {
    for (std::size_t m = 0; m < rows; ++m) {
      for (std::size_t n = 0; n < cols; ++n) scratch[n] = (g[n] - cost(m, n)) / e;
      f[m] = e * (log_mu[m] - detail::log_sum_exp({scratch.data(), cols}));
    }
    for (std::size_t n = 0; n < cols; ++n) {
      for (std::size_t m = 0; m < rows; ++m) scratch[m] = (f[m] - cost(m, n)) / e;
      g[n] = e * (log_nu[n] - detail::log_sum_exp({scratch.data(), rows}));
    }
  };

  TransportPlan plan;
  plan.rows = rows;
  plan.cols = cols;
  plan.status = SolveStatus::MaxIters;
  int it = 0;

  // Epsilon scaling: warm-start the potentials on a geometric schedule from
  // the cost spread down to the target. Each stage gets a small share of the
  // iteration budget; the target stage gets the rest.
  const auto [lo, hi] = std::minmax_element(cost.data().begin(), cost.data().end());
  const double spread = *hi - *lo;
  const int stage_cap = std::max(1, config.max_iters / 50);
  const double ratio = config.epsilon_scaling;
  if (ratio > 0.0 && ratio < 1.0) {
    for (double e = spread * ratio; e > eps && it + stage_cap < config.max_iters; e *= ratio) {
      for (int k = 0; k < stage_cap; ++k, ++it) sweep(e);
    }
  }

  double violation = std::numeric_limits<double>::infinity();
  while (it < config.max_iters) {
    ++it;
    sweep(eps);
    violation = row_violation(eps);
    if (violation <= config.marginal_tol) {
      plan.status = SolveStatus::Converged;
      break;
    }
  }

  plan.coupling.resize(rows * cols);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t n = 0; n < cols; ++n) plan(m, n) = std::exp((f[m] + g[n] - cost(m, n)) / eps);
  plan = round_to_feasible(std::move(plan), marginals);
  plan.iterations = it;
  plan.marginal_violation = violation;
  plan.achieved_cost = transport_cost(plan, cost);
  return plan;
}

namespace detail {

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// path with potentials, O(n^3)). Rows are inserted in index order and
/// column scans run in index order, so equal-cost alternatives always
/// resolve to the same assignment. Returns assignment[row] = col.
inline std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based internally; index 0 is the virtual root column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match_col[0] = row;
    std::size_t col0 = 0;
    std::vector<double> min_v(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = match_col[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double cur = cost[(r0 - 1) * n + (col - 1)] - u[r0] - v[col];
        if (cur < min_v[col]) {
          min_v[col] = cur;
          way[col] = col0;
        }
        if (min_v[col] < delta) {
          delta = min_v[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match_col[col]] += delta;
          v[col] -= delta;
        } else {
          min_v[col] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t col = 1; col <= n; ++col) assignment[match_col[col] - 1] = col - 1;
  return assignment;
}

}  // namespace detail

inline constexpr std::size_t kExactMaxCells = 64;

/// Exact EMD for uniform marginals. Masses are scaled to integers by
/// L = lcm(M, N): each row becomes L/M unit sources and each column L/N unit
/// sinks, and the resulting L x L assignment problem is solved exactly.
inline TransportPlan exact_emd(const CostMatrix& cost, const Marginals& marginals) {
  detail::check_shapes(cost, marginals);
  if (cost.rows() * cost.cols() > kExactMaxCells) {
    throw Error(ErrorCode::TooLarge, std::to_string(cost.rows()) + "x" +
                                         std::to_string(cost.cols()) + " exceeds " +
                                         std::to_string(kExactMaxCells) + " cells");
  }
  if (!marginals.is_uniform()) {
    throw Error(ErrorCode::NonUniformMarginals, "exact solver requires uniform marginals");
  }
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  const std::size_t total = std::lcm(rows, cols);
  const std::size_t row_copies = total / rows;
  const std::size_t col_copies = total / cols;

  std::vector<double> expanded(total * total);
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = 0; b < total; ++b)
      expanded[a * total + b] = cost(a / row_copies, b / col_copies);
  const auto assignment = detail::hungarian(expanded, total);

  TransportPlan plan;
  plan.rows = rows;
  plan.cols = cols;
  plan.coupling.assign(rows * cols, 0.0);
  const double unit = 1.0 / static_cast<double>(total);
  for (std::size_t a = 0; a < total; ++a) plan(a / row_copies, assignment[a] / col_copies) += unit;
  plan.status = SolveStatus::Exact;
  plan.achieved_cost = transport_cost(plan, cost);
  return plan;
}

inline TransportPlan exact_emd(const CostMatrix& cost) {
  return exact_emd(cost, Marginals::uniform(cost.rows(), cost.cols()));
}

/// EMD between two embedding sets with uniform masses, via Sinkhorn.
inline double set_emd(std::span<const EmbeddingVector> a, std::span<const EmbeddingVector> b,
                      const SinkhornConfig& config) {
  const auto cost = cosine_cost(a, b);
  return sinkhorn_emd(cost, Marginals::uniform(a.size(), b.size()), config).achieved_cost;
}

}  // namespace setmatch::ot
