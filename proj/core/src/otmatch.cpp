#include "mbridge/otmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace mbridge::otmatch {
namespace {

void require_unit_rows(const Matrix& m, const char* which) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (std::abs(norm(m.row(i)) - 1.0) > 1e-6) {
      throw Error(std::string(which) + " prototype " + std::to_string(i) + " is not unit-norm");
    }
  }
}

double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

// In-place Cholesky solve of the symmetric positive definite system h x = g.
// Returns false if a pivot is not positive.
bool cholesky_solve(std::vector<double>& h, std::vector<double>& g, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    double d = h[k * n + k];
    for (std::size_t p = 0; p < k; ++p) d -= h[k * n + p] * h[k * n + p];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    h[k * n + k] = d;
    for (std::size_t i = k + 1; i < n; ++i) {
      double s = h[i * n + k];
      for (std::size_t p = 0; p < k; ++p) s -= h[i * n + p] * h[k * n + p];
      h[i * n + k] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = g[i];
    for (std::size_t p = 0; p < i; ++p) s -= h[i * n + p] * g[p];
    g[i] = s / h[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = g[i];
    for (std::size_t p = i + 1; p < n; ++p) s -= h[p * n + i] * g[p];
    g[i] = s / h[i * n + i];
  }
  return true;
}

constexpr int kNewtonAfter = 200;

}  // namespace

CostMatrix build_cost(const calibration::PrototypeSet& visible,
                      const calibration::PrototypeSet& infrared) {
  if (visible.protos.cols() != infrared.protos.cols()) {
    throw Error("build_cost: prototype dimensions differ (" +
                std::to_string(visible.protos.cols()) + " vs " +
                std::to_string(infrared.protos.cols()) + ")");
  }
  if (visible.size() == 0 || infrared.size() == 0) throw Error("build_cost: empty prototype set");
  require_unit_rows(visible.protos, "visible");
  require_unit_rows(infrared.protos, "infrared");
  CostMatrix c{Matrix(visible.size(), infrared.size())};
  for (std::size_t i = 0; i < visible.size(); ++i) {
    for (std::size_t j = 0; j < infrared.size(); ++j) {
      c.values(i, j) = std::exp(-dot(visible.protos.row(i), infrared.protos.row(j)));
    }
  }
  return c;
}

double marginal_residual(const Matrix& q) {
  const double a = 1.0 / static_cast<double>(q.rows());
  const double b = 1.0 / static_cast<double>(q.cols());
  double worst = 0.0;
  std::vector<double> col(q.cols(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      row += q(i, j);
      col[j] += q(i, j);
    }
    worst = std::max(worst, std::abs(row - a));
  }
  for (double s : col) worst = std::max(worst, std::abs(s - b));
  return worst;
}

TransportPlan sinkhorn(const CostMatrix& cost, double lambda_reg, int max_iters, double tol) {
  if (!(lambda_reg > 0.0)) throw Error("sinkhorn: lambda must be positive");
  if (max_iters < 1) throw Error("sinkhorn: max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error("sinkhorn: tol must be positive");
  const std::size_t rows = cost.values.rows();
  const std::size_t cols = cost.values.cols();
  if (rows == 0 || cols == 0) throw Error("sinkhorn: empty cost matrix");

  Matrix log_k(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      log_k(i, j) = -lambda_reg * cost.values(i, j);
      if (!std::isfinite(log_k(i, j))) throw Error("sinkhorn: non-finite kernel entry");
    }
  }
  const double log_a = -std::log(static_cast<double>(rows));
  const double log_b = -std::log(static_cast<double>(cols));

  // Dual potentials: Q_ij = exp(u_i + log_k_ij + v_j).
  std::vector<double> u(rows, 0.0);
  std::vector<double> v(cols, 0.0);
  std::vector<double> scratch(std::max(rows, cols));
  TransportPlan plan{Matrix(rows, cols), lambda_reg, 0, false, 0.0};

  auto assemble = [&] {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) plan.q(i, j) = std::exp(u[i] + log_k(i, j) + v[j]);
    }
  };

  // Dual objective, maximised at the entropic plan.
  auto dual = [&](const std::vector<double>& uu, const std::vector<double>& vv) {
    double total = 0.0;
    for (double x : uu) total += x / static_cast<double>(rows);
    for (double x : vv) total += x / static_cast<double>(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) total -= std::exp(uu[i] + log_k(i, j) + vv[j]);
    }
    return total;
  };

  // Newton step on (u, v) with v_last pinned, which removes the constant
  // shift the dual is invariant to. Backtracks until the dual increases.
  const std::size_t n = rows + cols - 1;
  std::vector<double> hess;
  std::vector<double> step;
  auto newton = [&] {
    if (n == 0) return;
    hess.assign(n * n, 0.0);
    step.assign(n, 0.0);
    std::vector<double> col(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double q = plan.q(i, j);
        row += q;
        col[j] += q;
        if (j + 1 < cols) {
          hess[i * n + rows + j] = q;
          hess[(rows + j) * n + i] = q;
        }
      }
      hess[i * n + i] = row;
      step[i] = 1.0 / static_cast<double>(rows) - row;
    }
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      hess[(rows + j) * n + rows + j] = col[j];
      step[rows + j] = 1.0 / static_cast<double>(cols) - col[j];
    }
    if (!cholesky_solve(hess, step, n)) return;
    const double base = dual(u, v);
    std::vector<double> nu(rows);
    std::vector<double> nv(cols);
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      for (std::size_t i = 0; i < rows; ++i) nu[i] = u[i] + t * step[i];
      for (std::size_t j = 0; j < cols; ++j) nv[j] = v[j] + (j + 1 < cols ? t * step[rows + j] : 0.0);
      const double next = dual(nu, nv);
      if (std::isfinite(next) && next >= base) {
        u.swap(nu);
        v.swap(nv);
        return;
      }
    }
  };

  for (int it = 1; it <= max_iters; ++it) {
    if (it > kNewtonAfter && it % 2 == 0) {
      newton();
    } else {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) scratch[j] = log_k(i, j) + v[j];
        u[i] = log_a - log_sum_exp({scratch.data(), cols});
      }
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < rows; ++i) scratch[i] = log_k(i, j) + u[i];
        v[j] = log_b - log_sum_exp({scratch.data(), rows});
      }
    }
    assemble();
    plan.iterations = it;
    plan.max_residual = marginal_residual(plan.q);
    if (!std::isfinite(plan.max_residual)) throw Error("sinkhorn: plan became non-finite");
    if (plan.max_residual < tol) {
      plan.converged = true;
      break;
    }
  }
  return plan;
}

CrossModalMatch extract_match(const TransportPlan& plan) {
  const Matrix& q = plan.q;
  CrossModalMatch m{std::vector<int>(q.rows(), 0), std::vector<int>(q.cols(), 0)};
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < q.cols(); ++j) {
      if (q(i, j) > q(i, best)) best = j;
    }
    m.v2r[i] = static_cast<int>(best);
  }
  for (std::size_t j = 0; j < q.cols(); ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.rows(); ++i) {
      if (q(i, j) > q(best, j)) best = i;
    }
    m.r2v[j] = static_cast<int>(best);
  }
  return m;
}

}  // namespace mbridge::otmatch
