#include "ivregime/simplex.hpp"

#include <cmath>
#include <limits>

#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

// Tableau over `width` structural+artificial columns plus a right-hand side.
// Row `m` holds reduced costs; its last entry is minus the current objective.
class Tableau {
 public:
  Tableau(std::size_t m, std::size_t width) : m_(m), width_(width), cells_((m + 1) * (width + 1), 0.0) {}

  double& at(std::size_t r, std::size_t j) { return cells_[r * (width_ + 1) + j]; }
  double& rhs(std::size_t r) { return at(r, width_); }
  double& cost(std::size_t j) { return at(m_, j); }

  void pivot(std::size_t row, std::size_t col) {
    const double p = at(row, col);
    for (std::size_t j = 0; j <= width_; ++j) at(row, j) /= p;
    at(row, col) = 1.0;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == row) continue;
      const double factor = at(r, col);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= width_; ++j) at(r, j) -= factor * at(row, j);
      at(r, col) = 0.0;
    }
  }

  std::size_t m_;
  std::size_t width_;

 private:
  std::vector<double> cells_;
};

enum class PhaseResult { Optimal, Unbounded };

// Minimizes the cost row over columns [0, allowed) with Bland's rule.
PhaseResult run_phase(Tableau& t, std::vector<std::size_t>& basis, const std::vector<char>& active_row,
                      std::size_t allowed, double tol, std::size_t& pivots) {
  const std::size_t max_pivots = 50 * (t.m_ + t.width_) + 1000;
  while (true) {
    std::size_t enter = allowed;
    for (std::size_t j = 0; j < allowed; ++j) {
      if (t.cost(j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter == allowed) return PhaseResult::Optimal;

    std::size_t leave = kNoRow;
    double best_ratio = 0.0;
    for (std::size_t r = 0; r < t.m_; ++r) {
      if (!active_row[r]) continue;
      const double coef = t.at(r, enter);
      if (coef <= tol) continue;
      const double ratio = t.rhs(r) / coef;
      if (leave == kNoRow || ratio < best_ratio - tol ||
          (std::abs(ratio - best_ratio) <= tol && basis[r] < basis[leave])) {
        leave = r;
        best_ratio = ratio;
      }
    }
    if (leave == kNoRow) return PhaseResult::Unbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
    if (++pivots > max_pivots) throw NumericalError("simplex exceeded its pivot budget");
  }
}

}  // namespace

LpSolution solve_simplex(const LinearProgram& lp, Sense sense, double tol) {
  const std::size_t m = lp.rows;
  const std::size_t n = lp.cols;
  if (lp.a.size() != m * n || lp.b.size() != m || lp.c.size() != n) {
    throw DimensionError("lp", "inconsistent linear program dimensions");
  }

  Tableau t(m, n + m);
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double flip = lp.b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t.at(r, j) = flip * lp.at(r, j);
    t.at(r, n + r) = 1.0;
    t.rhs(r) = flip * lp.b[r];
    basis[r] = n + r;
  }
  // Phase one: minimize the sum of artificials; price out the basic artificials.
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) t.cost(j) -= t.at(r, j);
    t.cost(n + m) -= t.rhs(r);
  }

  LpSolution sol;
  std::vector<char> active(m, 1);
  run_phase(t, basis, active, n + m, tol, sol.pivots);
  if (-t.cost(n + m) > tol) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Pivot remaining artificials out of the basis, or retire redundant rows.
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    std::size_t col = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(t.at(r, j)) > tol) {
        col = j;
        break;
      }
    }
    if (col == n) {
      active[r] = 0;
    } else {
      t.pivot(r, col);
      basis[r] = col;
      ++sol.pivots;
    }
  }

  // Phase two cost row from the original objective.
  const double direction = sense == Sense::Maximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j <= n + m; ++j) t.cost(j) = 0.0;
  for (std::size_t j = 0; j < n; ++j) t.cost(j) = direction * lp.c[j];
  for (std::size_t r = 0; r < m; ++r) {
    if (!active[r]) continue;
    const double cb = t.cost(basis[r]);
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= n + m; ++j) t.cost(j) -= cb * t.at(r, j);
  }

  if (run_phase(t, basis, active, n, tol, sol.pivots) == PhaseResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (active[r] && basis[r] < n) sol.x[basis[r]] = t.rhs(r);
  }
  double value = 0.0;
  for (std::size_t j = 0; j < n; ++j) value += lp.c[j] * sol.x[j];
  sol.value = value;
  return sol;
}

}  // namespace ivregime
