#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivregime/dataset.hpp"
#include "ivregime/types.hpp"

namespace ivregime {

struct EstimatorOptions {
  /// Cells with fewer rows than this in either instrument arm are unusable.
  std::size_t min_arm_count = 5;
  /// Strict: unusable cells raise MissingArm / WeakInstrument.
  /// Lenient: they are dropped from the objective and assigned Arm::Minus.
  bool strict = false;
};

/// Sample-level tolerance on |delta_hat(l)|.
inline constexpr double kSampleWeakInstrumentThreshold = 1e-9;

struct CellEstimates {
  std::size_t count = 0;
  std::size_t count_z_plus = 0;
  std::size_t count_z_minus = 0;
  /// P^(A=1 | Z=+-1, l); empty when the take-up rates were supplied externally.
  std::optional<double> take_up_plus;
  std::optional<double> take_up_minus;
  double delta_hat = 0.0;
  double f_plus = 0.0;  ///< f^(Z=+1 | l)
  bool missing_arm = false;
  bool weak_instrument = false;

  bool usable() const noexcept { return !missing_arm && !weak_instrument; }
  double f(Arm z) const noexcept { return z == Arm::Plus ? f_plus : 1.0 - f_plus; }
};

/// Frequency plug-ins for delta(L) and f(Z|L) per cell.
struct PluginEstimates {
  std::vector<CellEstimates> cells;
  std::size_t total_rows = 0;
  EstimatorOptions options;

  std::size_t cell_count() const noexcept { return cells.size(); }
};

/// Saturated per-cell frequency estimates.
/// Throws MissingArm in strict mode when some cell has no rows in an instrument arm.
PluginEstimates fit_nuisances(const Dataset& data, const EstimatorOptions& options = {});

/// Like fit_nuisances, but the instrument-strength delta(l) is taken from
/// aggregated compliance information instead of the treatment column, which is
/// never read. This is the setting where only compliance rates are reported.
PluginEstimates fit_nuisances_with_delta(const Dataset& data, std::span<const double> delta,
                                         const EstimatorOptions& options = {});

/// n^-1 sum_i z_i 1{a_i = d(l_i)} y_i a_i / (delta^(l_i) f^(z_i|l_i)).
double sample_objective_id1(const Dataset& data, const PluginEstimates& est, const Regime& regime);

/// n^-1 sum_i 1{z_i = d(l_i)} y_i / (delta^(l_i) f^(z_i|l_i)). Does not read the treatment column.
double sample_objective_id2(const Dataset& data, const PluginEstimates& est, const Regime& regime);

double sample_objective(const Dataset& data, const PluginEstimates& est, const Regime& regime,
                        Objective objective);

struct CellFit {
  bool usable = false;
  double contribution_plus = 0.0;
  double contribution_minus = 0.0;
  double contrast() const noexcept { return contribution_plus - contribution_minus; }
};

/// Maximizer of a sample objective.
///
/// `objective_value` is the sample objective at `regime`. It ranks regimes
/// but is not an estimate of the regime's value E[Y_D(L)]; value statements
/// need the partial-identification bounds.
struct RegimeFit {
  Regime regime;
  Objective objective = Objective::Id1;
  double objective_value = 0.0;
  std::vector<CellFit> per_cell;
  std::vector<std::string> diagnostics;
};

/// Picks, per cell, the arm with the larger summed contribution (ties -> Minus).
/// Objectives are additive over cells, so this is the global maximizer.
RegimeFit argmax_regime(const Dataset& data, const PluginEstimates& est, Objective objective);

nlohmann::json to_json(const PluginEstimates& est);
/// {"regime":[...], "objective":x, "per_cell":[...], "diagnostics":[...]}
nlohmann::json to_json(const RegimeFit& fit);

}  // namespace ivregime
