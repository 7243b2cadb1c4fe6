#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivregime/dataset.hpp"
#include "ivregime/model.hpp"
#include "ivregime/simplex.hpp"
#include "ivregime/types.hpp"

namespace ivregime {

/// Observable law of (Y, A) given Z within one covariate cell, for binary Y.
struct CellObservables {
  /// p(y, a | z) stored at index(y, a, z).
  std::array<double, 8> p{};
  /// p(l), the cell's share of the population.
  double weight = 1.0;

  static constexpr std::size_t index(int y, Arm a, Arm z) noexcept {
    return (z == Arm::Plus ? 0 : 4) + (a == Arm::Plus ? 0 : 2) + static_cast<std::size_t>(y);
  }
  double& prob(int y, Arm a, Arm z) noexcept { return p[index(y, a, z)]; }
  double prob(int y, Arm a, Arm z) const noexcept { return p[index(y, a, z)]; }
};

/// Compliance behaviour (A_{+1}, A_{-1}).
enum class ComplianceType { AlwaysTaker = 0, NeverTaker = 1, Complier = 2, Defier = 3 };

/// Response type indices: 4 * compliance + outcome, where outcome r encodes
/// (Y_{+1}, Y_{-1}) as 2*Y_{+1} + Y_{-1} (00, 01, 10, 11).
inline constexpr std::size_t kResponseTypes = 16;

Arm treatment_taken(ComplianceType c, Arm z) noexcept;
int potential_outcome(std::size_t outcome_type, Arm a) noexcept;

/// Canonical response-type LP: 16 nonnegative masses, 7 equality rows
/// (three observable cells per instrument arm, the fourth being implied, plus
/// normalization) and an objective selecting types with Y_target = 1.
struct ResponseTypeLP {
  LinearProgram program;
  Arm target = Arm::Plus;
};

/// Coefficient matrix of all 8 observables against the 16 response types.
std::array<std::array<double, kResponseTypes>, 8> observable_map();

ResponseTypeLP make_response_type_lp(const CellObservables& cell, Arm target);

/// Optimal value of the response-type LP. Throws InfeasibleObservables when
/// no response-type distribution reproduces the observables.
double solve_lp(const ResponseTypeLP& lp, Sense sense);

/// True when the observables are compatible with the binary-IV model.
bool is_feasible(const CellObservables& cell);

/// Nearest IV-compatible observables in Euclidean distance over both
/// instrument slices, found by projected gradient on the response-type simplex.
CellObservables project_to_feasible(const CellObservables& cell);

struct Interval {
  double lb = 0.0;
  double ub = 0.0;
  double width() const noexcept { return ub - lb; }
  bool contains(double v, double tol = 0.0) const noexcept { return v >= lb - tol && v <= ub + tol; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct CellBounds {
  Interval theta_plus;   ///< bounds on P(Y_{+1} = 1 | l)
  Interval theta_minus;  ///< bounds on P(Y_{-1} = 1 | l)
  double weight = 1.0;
  bool projected = false;  ///< observables were projected onto the feasible set

  const Interval& theta(Arm a) const noexcept { return a == Arm::Plus ? theta_plus : theta_minus; }
};

struct BoundsOptions {
  /// Strict: infeasible observables throw. Lenient: they are projected first.
  bool strict = false;
};

/// Sharp bounds on both counterfactual means of one cell (four LP solves).
CellBounds counterfactual_bounds(const CellObservables& cell, const BoundsOptions& options = {});

/// Exact observables by enumeration over latent types. Requires every outcome
/// mean to be a probability of Y=1, which the model guarantees.
std::vector<CellObservables> cell_observables_from(const StructuralModel& model);

/// Empirical observables. Throws NonBinaryOutcome for y outside {0,1} and
/// MissingArm when a cell lacks rows in an instrument arm.
std::vector<CellObservables> cell_observables_from(const Dataset& data);

/// [sum_l p(l) lb_{d(l)}(l), sum_l p(l) ub_{d(l)}(l)].
Interval regime_value_bounds(std::span<const CellBounds> cells, const Regime& regime);

/// Per cell, the arm with the larger lower bound; ties -> Minus.
Regime maximin_regime(std::span<const CellBounds> cells);

struct RegimeBounds {
  std::string label;  ///< "maximin", "all_plus", "all_minus" or "query"
  Regime regime;
  Interval value;
};

struct BoundsResult {
  std::vector<CellBounds> cells;
  Regime maximin;
  std::vector<RegimeBounds> regimes;  ///< queried regimes, maximin first
  std::vector<std::string> diagnostics;
};

/// Per-cell bounds, maximin regime, and value bounds for the maximin regime,
/// the two constant regimes, and any extra `queries`.
BoundsResult compute_bounds(std::span<const CellObservables> cells, const BoundsOptions& options = {},
                            std::span<const Regime> queries = {});

nlohmann::json to_json(const BoundsResult& result);

}  // namespace ivregime
