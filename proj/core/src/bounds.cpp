#include "ivregime/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

constexpr double kLpTolerance = 1e-9;
constexpr double kSliceTolerance = 1e-9;

// Observables pinned by the LP rows; p(0, Minus | z) follows from the others.
constexpr std::array<std::pair<int, Arm>, 3> kPinned = {
    {{1, Arm::Plus}, {0, Arm::Plus}, {1, Arm::Minus}}};

void check_slices(const CellObservables& cell, std::size_t l) {
  for (Arm z : {Arm::Plus, Arm::Minus}) {
    double total = 0.0;
    for (int y : {0, 1}) {
      for (Arm a : {Arm::Plus, Arm::Minus}) {
        const double v = cell.prob(y, a, z);
        if (!std::isfinite(v) || v < -kSliceTolerance) {
          throw ValidationError("cell " + std::to_string(l), "negative observable probability");
        }
        total += v;
      }
    }
    if (std::abs(total - 1.0) > kSliceTolerance) {
      throw ValidationError("cell " + std::to_string(l),
                            "instrument slice z=" + std::to_string(sign(z)) + " sums to " + std::to_string(total));
    }
  }
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Euclidean projection onto the probability simplex.
void project_simplex(std::array<double, kResponseTypes>& v) {
  std::array<double, kResponseTypes> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < kResponseTypes; ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

}  // namespace

Arm treatment_taken(ComplianceType c, Arm z) noexcept {
  switch (c) {
    case ComplianceType::AlwaysTaker: return Arm::Plus;
    case ComplianceType::NeverTaker: return Arm::Minus;
    case ComplianceType::Complier: return z;
    case ComplianceType::Defier: return opposite(z);
  }
  return Arm::Minus;
}

int potential_outcome(std::size_t outcome_type, Arm a) noexcept {
  return a == Arm::Plus ? static_cast<int>((outcome_type >> 1) & 1U) : static_cast<int>(outcome_type & 1U);
}

std::array<std::array<double, kResponseTypes>, 8> observable_map() {
  std::array<std::array<double, kResponseTypes>, 8> map{};
  for (std::size_t t = 0; t < kResponseTypes; ++t) {
    const auto c = static_cast<ComplianceType>(t / 4);
    const std::size_t r = t % 4;
    for (Arm z : {Arm::Plus, Arm::Minus}) {
      const Arm a = treatment_taken(c, z);
      map[CellObservables::index(potential_outcome(r, a), a, z)][t] = 1.0;
    }
  }
  return map;
}

ResponseTypeLP make_response_type_lp(const CellObservables& cell, Arm target) {
  const auto map = observable_map();
  ResponseTypeLP out;
  out.target = target;
  LinearProgram& lp = out.program;
  lp.rows = 7;
  lp.cols = kResponseTypes;
  lp.a.assign(lp.rows * lp.cols, 0.0);
  lp.b.assign(lp.rows, 0.0);
  lp.c.assign(lp.cols, 0.0);
  std::size_t row = 0;
  for (Arm z : {Arm::Plus, Arm::Minus}) {
    for (const auto& [y, a] : kPinned) {
      const std::size_t obs = CellObservables::index(y, a, z);
      for (std::size_t t = 0; t < kResponseTypes; ++t) lp.at(row, t) = map[obs][t];
      lp.b[row] = cell.p[obs];
      ++row;
    }
  }
  for (std::size_t t = 0; t < kResponseTypes; ++t) lp.at(row, t) = 1.0;
  lp.b[row] = 1.0;
  for (std::size_t t = 0; t < kResponseTypes; ++t) {
    lp.c[t] = potential_outcome(t % 4, target) == 1 ? 1.0 : 0.0;
  }
  return out;
}

double solve_lp(const ResponseTypeLP& lp, Sense sense) {
  const LpSolution sol = solve_simplex(lp.program, sense, kLpTolerance);
  if (sol.status == LpStatus::Infeasible) {
    throw InfeasibleObservables("observables are incompatible with the binary instrumental-variable model");
  }
  if (sol.status == LpStatus::Unbounded) throw NumericalError("response-type LP reported unbounded");
  return sol.value;
}

bool is_feasible(const CellObservables& cell) {
  return solve_simplex(make_response_type_lp(cell, Arm::Plus).program, Sense::Minimize, kLpTolerance).status ==
         LpStatus::Optimal;
}

CellObservables project_to_feasible(const CellObservables& cell) {
  const auto map = observable_map();
  // Every observable is loaded by 4 types and every type loads 2 observables, so the
  // rows of M M^T sum to 8 and the gradient of |M pi - p|^2 is 16-Lipschitz.
  constexpr double kStep = 1.0 / 16.0;
  constexpr int kIterations = 20000;

  auto gradient = [&](const std::array<double, kResponseTypes>& pi) {
    std::array<double, 8> residual{};
    for (std::size_t o = 0; o < 8; ++o) {
      double v = -cell.p[o];
      for (std::size_t t = 0; t < kResponseTypes; ++t) v += map[o][t] * pi[t];
      residual[o] = v;
    }
    std::array<double, kResponseTypes> g{};
    for (std::size_t t = 0; t < kResponseTypes; ++t) {
      double v = 0.0;
      for (std::size_t o = 0; o < 8; ++o) v += map[o][t] * residual[o];
      g[t] = 2.0 * v;
    }
    return g;
  };

  std::array<double, kResponseTypes> pi;
  pi.fill(1.0 / kResponseTypes);
  std::array<double, kResponseTypes> momentum = pi;
  double step_weight = 1.0;
  for (int it = 0; it < kIterations; ++it) {
    const auto g = gradient(momentum);
    std::array<double, kResponseTypes> next;
    for (std::size_t t = 0; t < kResponseTypes; ++t) next[t] = momentum[t] - kStep * g[t];
    project_simplex(next);
    const double next_weight = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * step_weight * step_weight));
    const double beta = (step_weight - 1.0) / next_weight;
    for (std::size_t t = 0; t < kResponseTypes; ++t) momentum[t] = next[t] + beta * (next[t] - pi[t]);
    pi = next;
    step_weight = next_weight;
  }

  CellObservables out;
  out.weight = cell.weight;
  for (std::size_t o = 0; o < 8; ++o) {
    double v = 0.0;
    for (std::size_t t = 0; t < kResponseTypes; ++t) v += map[o][t] * pi[t];
    out.p[o] = v;
  }
  return out;
}

CellBounds counterfactual_bounds(const CellObservables& cell, const BoundsOptions& options) {
  check_slices(cell, 0);
  CellObservables effective = cell;
  CellBounds out;
  out.weight = cell.weight;
  if (!is_feasible(cell)) {
    if (options.strict) {
      throw InfeasibleObservables("observables are incompatible with the binary instrumental-variable model");
    }
    effective = project_to_feasible(cell);
    out.projected = true;
  }
  for (Arm target : {Arm::Plus, Arm::Minus}) {
    const ResponseTypeLP lp = make_response_type_lp(effective, target);
    Interval iv{clamp_unit(solve_lp(lp, Sense::Minimize)), clamp_unit(solve_lp(lp, Sense::Maximize))};
    if (iv.ub < iv.lb) iv.ub = iv.lb;
    (target == Arm::Plus ? out.theta_plus : out.theta_minus) = iv;
  }
  return out;
}

std::vector<CellObservables> cell_observables_from(const StructuralModel& model) {
  std::vector<CellObservables> out(model.cell_count());
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    const CellSpec& cell = model.cell(l);
    CellObservables& obs = out[l];
    obs.weight = model.cell_prob(l);
    for (std::size_t u = 0; u < cell.latent_count(); ++u) {
      for (Arm z : {Arm::Plus, Arm::Minus}) {
        for (Arm a : {Arm::Plus, Arm::Minus}) {
          const double pa = a == Arm::Plus ? cell.take_up(z, u) : 1.0 - cell.take_up(z, u);
          const double m = cell.outcome_mean(a, u);
          obs.prob(1, a, z) += cell.u_probs[u] * pa * m;
          obs.prob(0, a, z) += cell.u_probs[u] * pa * (1.0 - m);
        }
      }
    }
  }
  return out;
}

std::vector<CellObservables> cell_observables_from(const Dataset& data) {
  const std::size_t k = data.cell_count();
  std::vector<std::array<double, 8>> counts(k);
  std::vector<std::array<std::size_t, 2>> arm_rows(k, {0, 0});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ObservedRow& r = data[i];
    if (r.y != 0.0 && r.y != 1.0) {
      throw NonBinaryOutcome("row " + std::to_string(i), "outcome " + std::to_string(r.y) + " is not 0 or 1");
    }
    counts[r.cell][CellObservables::index(static_cast<int>(r.y), r.a, r.z)] += 1.0;
    ++arm_rows[r.cell][r.z == Arm::Plus ? 0 : 1];
  }
  std::vector<CellObservables> out(k);
  for (std::size_t l = 0; l < k; ++l) {
    if (arm_rows[l][0] == 0) throw MissingArm(l, +1);
    if (arm_rows[l][1] == 0) throw MissingArm(l, -1);
    for (Arm z : {Arm::Plus, Arm::Minus}) {
      const double rows = static_cast<double>(arm_rows[l][z == Arm::Plus ? 0 : 1]);
      for (int y : {0, 1}) {
        for (Arm a : {Arm::Plus, Arm::Minus}) {
          const std::size_t idx = CellObservables::index(y, a, z);
          out[l].p[idx] = counts[l][idx] / rows;
        }
      }
    }
    out[l].weight = static_cast<double>(arm_rows[l][0] + arm_rows[l][1]) / static_cast<double>(data.size());
  }
  return out;
}

Interval regime_value_bounds(std::span<const CellBounds> cells, const Regime& regime) {
  if (regime.size() != cells.size()) {
    throw DimensionError("regime", "length " + std::to_string(regime.size()) + " does not match " +
                                       std::to_string(cells.size()) + " cells");
  }
  Interval out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    const Interval& iv = cells[l].theta(regime[l]);
    out.lb += cells[l].weight * iv.lb;
    out.ub += cells[l].weight * iv.ub;
  }
  return out;
}

Regime maximin_regime(std::span<const CellBounds> cells) {
  std::vector<Arm> arms(cells.size(), Arm::Minus);
  for (std::size_t l = 0; l < cells.size(); ++l) {
    if (cells[l].theta_plus.lb > cells[l].theta_minus.lb) arms[l] = Arm::Plus;
  }
  return Regime(std::move(arms));
}

BoundsResult compute_bounds(std::span<const CellObservables> cells, const BoundsOptions& options,
                            std::span<const Regime> queries) {
  BoundsResult result;
  result.cells.reserve(cells.size());
  for (std::size_t l = 0; l < cells.size(); ++l) {
    check_slices(cells[l], l);
    try {
      result.cells.push_back(counterfactual_bounds(cells[l], options));
    } catch (const InfeasibleObservables& e) {
      throw InfeasibleObservables("cell " + std::to_string(l) + ": " + e.what());
    }
    if (result.cells.back().projected) {
      result.diagnostics.push_back("cell " + std::to_string(l) +
                                   " observables infeasible; projected to nearest feasible point");
    }
  }
  result.maximin = maximin_regime(result.cells);
  auto add = [&](std::string label, const Regime& r) {
    result.regimes.push_back({std::move(label), r, regime_value_bounds(result.cells, r)});
  };
  add("maximin", result.maximin);
  add("all_plus", Regime::constant(cells.size(), Arm::Plus));
  add("all_minus", Regime::constant(cells.size(), Arm::Minus));
  for (const Regime& q : queries) add("query", q);
  return result;
}

nlohmann::json to_json(const BoundsResult& result) {
  auto interval = [](const Interval& iv) { return nlohmann::json::array({iv.lb, iv.ub}); };
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t l = 0; l < result.cells.size(); ++l) {
    const CellBounds& c = result.cells[l];
    cells.push_back({{"cell", l},
                     {"weight", c.weight},
                     {"theta_plus", interval(c.theta_plus)},
                     {"theta_minus", interval(c.theta_minus)},
                     {"projected", c.projected}});
  }
  nlohmann::json regimes = nlohmann::json::array();
  for (const RegimeBounds& r : result.regimes) {
    regimes.push_back({{"label", r.label}, {"regime", r.regime.as_ints()}, {"value", interval(r.value)}});
  }
  return {{"cells", std::move(cells)},
          {"maximin_regime", result.maximin.as_ints()},
          {"regime_values", std::move(regimes)},
          {"diagnostics", result.diagnostics}};
}

}  // namespace ivregime
