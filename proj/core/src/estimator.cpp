#include "ivregime/estimator.hpp"

#include <cmath>

#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

struct ArmCounts {
  std::size_t rows[2] = {0, 0};
  std::size_t treated[2] = {0, 0};
};

constexpr int arm_index(Arm z) noexcept { return z == Arm::Plus ? 0 : 1; }

std::vector<ArmCounts> count_arms(const Dataset& data) {
  std::vector<ArmCounts> counts(data.cell_count());
  for (const ObservedRow& r : data.rows()) {
    ArmCounts& c = counts[r.cell];
    ++c.rows[arm_index(r.z)];
    if (r.a == Arm::Plus) ++c.treated[arm_index(r.z)];
  }
  return counts;
}

void finalize_cell(CellEstimates& cell, std::size_t l, const EstimatorOptions& options) {
  if (options.strict) {
    if (cell.count_z_plus == 0) throw MissingArm(l, +1);
    if (cell.count_z_minus == 0) throw MissingArm(l, -1);
  }
  cell.missing_arm =
      cell.count_z_plus < options.min_arm_count || cell.count_z_minus < options.min_arm_count;
  cell.weak_instrument = std::abs(cell.delta_hat) < kSampleWeakInstrumentThreshold;
}

PluginEstimates base_estimates(const Dataset& data, const std::vector<ArmCounts>& counts,
                               const EstimatorOptions& options) {
  if (options.min_arm_count < 1) throw ValidationError("min_arm_count", "must be at least 1");
  PluginEstimates est;
  est.options = options;
  est.total_rows = data.size();
  est.cells.resize(data.cell_count());
  for (std::size_t l = 0; l < data.cell_count(); ++l) {
    CellEstimates& cell = est.cells[l];
    cell.count_z_plus = counts[l].rows[0];
    cell.count_z_minus = counts[l].rows[1];
    cell.count = cell.count_z_plus + cell.count_z_minus;
    cell.f_plus = cell.count > 0 ? static_cast<double>(cell.count_z_plus) / static_cast<double>(cell.count) : 0.0;
  }
  return est;
}

// Throws for an unusable cell in strict mode; reports whether the cell enters the objective.
bool cell_enters(const PluginEstimates& est, std::size_t l) {
  const CellEstimates& cell = est.cells[l];
  if (cell.usable()) return true;
  if (est.options.strict) {
    if (cell.missing_arm) throw MissingArm(l, cell.count_z_plus < est.options.min_arm_count ? +1 : -1);
    throw WeakInstrument(l, cell.delta_hat);
  }
  return false;
}

void require_shapes(const Dataset& data, const PluginEstimates& est, std::size_t regime_size) {
  if (est.cell_count() != data.cell_count()) {
    throw DimensionError("estimates", "cell count does not match dataset");
  }
  if (regime_size != data.cell_count()) {
    throw DimensionError("regime", "length " + std::to_string(regime_size) +
                                       " does not match cell count " + std::to_string(data.cell_count()));
  }
}

// Contribution of one row to the objective when its cell's regime arm is `arm`, before the 1/n factor.
double row_weight(const ObservedRow& r, const CellEstimates& cell, Arm arm, Objective objective) {
  const double denom = cell.delta_hat * cell.f(r.z);
  if (objective == Objective::Id1) {
    return r.a == arm ? sign(r.z) * r.y * sign(r.a) / denom : 0.0;
  }
  return r.z == arm ? r.y / denom : 0.0;
}

}  // namespace

PluginEstimates fit_nuisances(const Dataset& data, const EstimatorOptions& options) {
  const auto counts = count_arms(data);
  PluginEstimates est = base_estimates(data, counts, options);
  for (std::size_t l = 0; l < est.cell_count(); ++l) {
    CellEstimates& cell = est.cells[l];
    const double plus = cell.count_z_plus > 0
                            ? static_cast<double>(counts[l].treated[0]) / static_cast<double>(cell.count_z_plus)
                            : 0.0;
    const double minus = cell.count_z_minus > 0
                             ? static_cast<double>(counts[l].treated[1]) / static_cast<double>(cell.count_z_minus)
                             : 0.0;
    cell.take_up_plus = plus;
    cell.take_up_minus = minus;
    cell.delta_hat = plus - minus;
    finalize_cell(cell, l, options);
  }
  return est;
}

PluginEstimates fit_nuisances_with_delta(const Dataset& data, std::span<const double> delta,
                                         const EstimatorOptions& options) {
  if (delta.size() != data.cell_count()) {
    throw DimensionError("delta", "expected " + std::to_string(data.cell_count()) + " compliance rates, got " +
                                      std::to_string(delta.size()));
  }
  std::vector<ArmCounts> counts(data.cell_count());
  for (const ObservedRow& r : data.rows()) ++counts[r.cell].rows[arm_index(r.z)];
  PluginEstimates est = base_estimates(data, counts, options);
  for (std::size_t l = 0; l < est.cell_count(); ++l) {
    if (!std::isfinite(delta[l]) || delta[l] < -1.0 || delta[l] > 1.0) {
      throw DomainError("delta/" + std::to_string(l), "compliance rate difference must lie in [-1,1]");
    }
    est.cells[l].delta_hat = delta[l];
    finalize_cell(est.cells[l], l, options);
  }
  return est;
}

double sample_objective(const Dataset& data, const PluginEstimates& est, const Regime& regime,
                        Objective objective) {
  if (objective == Objective::Oracle) {
    throw ValidationError("objective", "the oracle objective needs the structural model, not data");
  }
  require_shapes(data, est, regime.size());
  std::vector<char> enters(data.cell_count());
  for (std::size_t l = 0; l < data.cell_count(); ++l) enters[l] = cell_enters(est, l);
  double total = 0.0;
  for (const ObservedRow& r : data.rows()) {
    if (!enters[r.cell]) continue;
    total += row_weight(r, est.cells[r.cell], regime[r.cell], objective);
  }
  return total / static_cast<double>(data.size());
}

double sample_objective_id1(const Dataset& data, const PluginEstimates& est, const Regime& regime) {
  return sample_objective(data, est, regime, Objective::Id1);
}

double sample_objective_id2(const Dataset& data, const PluginEstimates& est, const Regime& regime) {
  return sample_objective(data, est, regime, Objective::Id2);
}

RegimeFit argmax_regime(const Dataset& data, const PluginEstimates& est, Objective objective) {
  if (objective == Objective::Oracle) {
    throw ValidationError("objective", "the oracle objective needs the structural model, not data");
  }
  require_shapes(data, est, data.cell_count());
  const std::size_t k = data.cell_count();
  RegimeFit fit;
  fit.objective = objective;
  fit.per_cell.resize(k);
  for (std::size_t l = 0; l < k; ++l) fit.per_cell[l].usable = cell_enters(est, l);

  for (const ObservedRow& r : data.rows()) {
    CellFit& cf = fit.per_cell[r.cell];
    if (!cf.usable) continue;
    const CellEstimates& cell = est.cells[r.cell];
    cf.contribution_plus += row_weight(r, cell, Arm::Plus, objective);
    cf.contribution_minus += row_weight(r, cell, Arm::Minus, objective);
  }
  const double n = static_cast<double>(data.size());
  std::vector<Arm> arms(k, Arm::Minus);
  for (std::size_t l = 0; l < k; ++l) {
    CellFit& cf = fit.per_cell[l];
    if (!cf.usable) {
      const CellEstimates& cell = est.cells[l];
      fit.diagnostics.push_back("cell " + std::to_string(l) + " unusable (" +
                                (cell.missing_arm ? "too few rows in an instrument arm" : "weak instrument") +
                                "); assigned -1");
      continue;
    }
    cf.contribution_plus /= n;
    cf.contribution_minus /= n;
    if (cf.contribution_plus > cf.contribution_minus) arms[l] = Arm::Plus;
  }
  fit.regime = Regime(std::move(arms));
  fit.objective_value = sample_objective(data, est, fit.regime, objective);
  return fit;
}

nlohmann::json to_json(const PluginEstimates& est) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t l = 0; l < est.cells.size(); ++l) {
    const CellEstimates& c = est.cells[l];
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    cells.push_back({{"cell", l},
                     {"count", c.count},
                     {"count_z_plus", c.count_z_plus},
                     {"count_z_minus", c.count_z_minus},
                     {"take_up_plus", opt(c.take_up_plus)},
                     {"take_up_minus", opt(c.take_up_minus)},
                     {"delta_hat", c.delta_hat},
                     {"f_plus", c.f_plus},
                     {"missing_arm", c.missing_arm},
                     {"weak_instrument", c.weak_instrument}});
  }
  return {{"cells", std::move(cells)}, {"rows", est.total_rows}};
}

nlohmann::json to_json(const RegimeFit& fit) {
  nlohmann::json per_cell = nlohmann::json::array();
  for (std::size_t l = 0; l < fit.per_cell.size(); ++l) {
    const CellFit& c = fit.per_cell[l];
    per_cell.push_back({{"cell", l},
                        {"usable", c.usable},
                        {"contribution_plus", c.contribution_plus},
                        {"contribution_minus", c.contribution_minus},
                        {"contrast", c.contrast()}});
  }
  return {{"regime", fit.regime.as_ints()},
          {"objective_name", std::string(to_string(fit.objective))},
          {"objective", fit.objective_value},
          {"per_cell", std::move(per_cell)},
          {"diagnostics", fit.diagnostics}};
}

}  // namespace ivregime
