#pragma once

#include <cstddef>
#include <vector>

namespace ivregime {

enum class Sense { Minimize, Maximize };

/// Standard-form program: optimize c.x subject to A x = b, x >= 0.
/// A is dense and row-major with `rows` x `cols` entries.
struct LinearProgram {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  double& at(std::size_t r, std::size_t j) { return a[r * cols + j]; }
  double at(std::size_t r, std::size_t j) const { return a[r * cols + j]; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
};

/// Two-phase dense tableau simplex with Bland's smallest-index rule, so it
/// cannot cycle on degenerate vertices. Entries with magnitude <= `tol` are
/// treated as zero in pricing and ratio tests; phase one declares the program
/// infeasible when the artificial objective stays above `tol`.
LpSolution solve_simplex(const LinearProgram& lp, Sense sense, double tol = 1e-9);

}  // namespace ivregime
