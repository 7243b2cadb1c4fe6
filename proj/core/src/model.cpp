#include "ivregime/model.hpp"

#include <cmath>
#include <string>

#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kTieTolerance = 1e-12;

std::string cell_path(std::size_t l, const char* field) {
  return "/cells/" + std::to_string(l) + "/" + field;
}

void check_unit_interval(const std::vector<double>& values, std::size_t l, const char* field,
                         std::size_t expected) {
  if (values.size() != expected) {
    throw ValidationError(cell_path(l, field), "expected " + std::to_string(expected) +
                                                   " entries, got " + std::to_string(values.size()));
  }
  for (std::size_t u = 0; u < values.size(); ++u) {
    const double v = values[u];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError(cell_path(l, field) + "/" + std::to_string(u),
                            "value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

void check_distribution(const std::vector<double>& probs, const std::string& path) {
  if (probs.empty()) throw ValidationError(path, "must not be empty");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] < 0.0) {
      throw ValidationError(path + "/" + std::to_string(i), "probability must be nonnegative");
    }
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ValidationError(path, "probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

// Cell-conditional E[weight * Y] for one of the weighted objectives with D(l) = arm,
// enumerating (u, z, a) and replacing Y by its conditional mean.
double cell_weighted_mean(const CellSpec& cell, double delta, Objective objective, Arm arm) {
  double total = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    double inner = 0.0;
    for (Arm z : {Arm::Plus, Arm::Minus}) {
      const double fz = cell.instrument_prob(z);
      for (Arm a : {Arm::Plus, Arm::Minus}) {
        const double pa = a == Arm::Plus ? cell.take_up(z, u) : 1.0 - cell.take_up(z, u);
        double weight = 0.0;
        if (objective == Objective::Id1) {
          if (a == arm) weight = sign(z) * sign(a) / (delta * fz);
        } else {
          if (z == arm) weight = 1.0 / (delta * fz);
        }
        inner += fz * pa * weight * cell.outcome_mean(a, u);
      }
    }
    total += cell.u_probs[u] * inner;
  }
  return total;
}

void require_regime_length(const StructuralModel& model, const Regime& regime) {
  if (regime.size() != model.cell_count()) {
    throw DimensionError("regime", "length " + std::to_string(regime.size()) +
                                       " does not match cell count " +
                                       std::to_string(model.cell_count()));
  }
}

double strong_delta(const StructuralModel& model, std::size_t l) {
  const double delta = population_delta(model, l);
  if (std::abs(delta) < kWeakInstrumentThreshold) throw WeakInstrument(l, delta);
  return delta;
}

double population_objective(const StructuralModel& model, const Regime& regime, Objective objective) {
  require_regime_length(model, regime);
  for (std::size_t l = 0; l < model.cell_count(); ++l) strong_delta(model, l);
  double total = 0.0;
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    total += population_cell_contribution(model, l, objective, regime[l]);
  }
  return total;
}

struct Moments {
  double cov = 0.0;
  double var = 0.0;
};

Moments contrast_moments(const CellSpec& cell) {
  double mean_g = 0.0;
  double mean_d = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    mean_g += cell.u_probs[u] * cell.outcome_contrast(u);
    mean_d += cell.u_probs[u] * cell.take_up_contrast(u);
  }
  Moments m;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    const double dg = cell.outcome_contrast(u) - mean_g;
    const double dd = cell.take_up_contrast(u) - mean_d;
    m.cov += cell.u_probs[u] * dg * dd;
    m.var += cell.u_probs[u] * dd * dd;
  }
  return m;
}

template <typename Contrast>
bool weak_sign_agreement(const CellSpec& cell, Contrast contrast, double tol) {
  bool all_nonneg = true;
  bool all_nonpos = true;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    if (cell.u_probs[u] <= 0.0) continue;  // null latent types do not count
    const double c = contrast(u);
    if (c < -tol) all_nonneg = false;
    if (c > tol) all_nonpos = false;
  }
  return all_nonneg || all_nonpos;
}

}  // namespace

std::string_view to_string(Objective o) noexcept {
  switch (o) {
    case Objective::Id1: return "id1";
    case Objective::Id2: return "id2";
    case Objective::Oracle: return "oracle";
  }
  return "?";
}

Objective parse_objective(std::string_view s) {
  if (s == "id1") return Objective::Id1;
  if (s == "id2") return Objective::Id2;
  if (s == "oracle") return Objective::Oracle;
  throw ValidationError("objective", "unknown objective '" + std::string(s) + "'");
}

StructuralModel::StructuralModel(std::vector<CellSpec> cells, std::vector<double> cell_probs)
    : cells_(std::move(cells)), cell_probs_(std::move(cell_probs)) {
  if (cells_.empty()) throw ValidationError("/cells", "at least one cell is required");
  if (cell_probs_.size() != cells_.size()) {
    throw ValidationError("/cell_probs", "expected " + std::to_string(cells_.size()) +
                                             " entries, got " + std::to_string(cell_probs_.size()));
  }
  check_distribution(cell_probs_, "/cell_probs");
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    const CellSpec& c = cells_[l];
    check_distribution(c.u_probs, cell_path(l, "u_probs"));
    const std::size_t m = c.u_probs.size();
    check_unit_interval(c.m_plus, l, "m_plus", m);
    check_unit_interval(c.m_minus, l, "m_minus", m);
    check_unit_interval(c.q_plus, l, "q_plus", m);
    check_unit_interval(c.q_minus, l, "q_minus", m);
    if (!std::isfinite(c.pi_z) || c.pi_z <= 0.0 || c.pi_z >= 1.0) {
      throw ValidationError(cell_path(l, "pi_z"), "must lie strictly inside (0,1)");
    }
  }
}

const CellSpec& StructuralModel::cell(std::size_t l) const {
  if (l >= cells_.size()) {
    throw DimensionError("cell", "cell id " + std::to_string(l) + " out of range [0," +
                                     std::to_string(cells_.size()) + ")");
  }
  return cells_[l];
}

bool AssumptionReport::assumption_a_holds() const noexcept {
  for (const auto& c : cells) {
    if (!c.a_part_a_holds || !c.a_part_b_holds) return false;
  }
  return true;
}

bool AssumptionReport::instrument_relevant(double tol) const noexcept {
  for (const auto& c : cells) {
    if (std::abs(c.delta) <= tol) return false;
  }
  return true;
}

double population_cate(const StructuralModel& model, std::size_t l) {
  const CellSpec& cell = model.cell(l);
  double total = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    total += cell.u_probs[u] * cell.outcome_contrast(u);
  }
  return total;
}

double population_delta(const StructuralModel& model, std::size_t l) {
  const CellSpec& cell = model.cell(l);
  double total = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    total += cell.u_probs[u] * cell.take_up_contrast(u);
  }
  return total;
}

double regime_value(const StructuralModel& model, const Regime& regime) {
  require_regime_length(model, regime);
  double total = 0.0;
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    total += population_cell_contribution(model, l, Objective::Oracle, regime[l]);
  }
  return total;
}

double population_objective_id1(const StructuralModel& model, const Regime& regime) {
  return population_objective(model, regime, Objective::Id1);
}

double population_objective_id2(const StructuralModel& model, const Regime& regime) {
  return population_objective(model, regime, Objective::Id2);
}

double population_cell_contribution(const StructuralModel& model, std::size_t l,
                                    Objective objective, Arm arm) {
  const CellSpec& cell = model.cell(l);
  if (objective == Objective::Oracle) {
    double mean = 0.0;
    for (std::size_t u = 0; u < cell.latent_count(); ++u) {
      mean += cell.u_probs[u] * cell.outcome_mean(arm, u);
    }
    return model.cell_prob(l) * mean;
  }
  return model.cell_prob(l) * cell_weighted_mean(cell, strong_delta(model, l), objective, arm);
}

Regime population_argmax(const StructuralModel& model, Objective objective) {
  std::vector<Arm> arms(model.cell_count(), Arm::Minus);
  if (objective == Objective::Oracle) {
    for (std::size_t l = 0; l < model.cell_count(); ++l) {
      if (population_cate(model, l) > 0.0) arms[l] = Arm::Plus;
    }
    return Regime(std::move(arms));
  }
  for (std::size_t l = 0; l < model.cell_count(); ++l) strong_delta(model, l);
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    const double plus = population_cell_contribution(model, l, objective, Arm::Plus);
    const double minus = population_cell_contribution(model, l, objective, Arm::Minus);
    if (plus - minus > kTieTolerance) arms[l] = Arm::Plus;
  }
  return Regime(std::move(arms));
}

AssumptionReport check_assumptions(const StructuralModel& model, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tol", "tolerance must be positive");
  AssumptionReport report;
  report.cells.reserve(model.cell_count());
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    const CellSpec& cell = model.cell(l);
    CellAssumptions c;
    c.delta = population_delta(model, l);
    c.cate = population_cate(model, l);
    c.a_part_a_holds =
        weak_sign_agreement(cell, [&](std::size_t u) { return cell.outcome_contrast(u); }, tol);
    c.a_part_b_holds =
        weak_sign_agreement(cell, [&](std::size_t u) { return cell.take_up_contrast(u); }, tol);
    const Moments m = contrast_moments(cell);
    c.assumption7_cov = m.cov;
    c.assumption8_var = m.var;
    report.cells.push_back(c);
  }
  return report;
}

}  // namespace ivregime
