#include <cmath>
#include <string>

#include "ivregime/dataset.hpp"
#include "ivregime/errors.hpp"
#include "ivregime/rng.hpp"

namespace ivregime {

namespace {

std::size_t draw_categorical(const std::vector<double>& probs, double uniform) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    cumulative += probs[i];
    if (uniform < cumulative) return i;
  }
  return probs.size() - 1;
}

Arm draw_arm(double p_plus, double uniform) { return uniform < p_plus ? Arm::Plus : Arm::Minus; }

}  // namespace

Dataset::Dataset(std::vector<ObservedRow> rows, std::size_t cell_count)
    : rows_(std::move(rows)), cell_count_(cell_count) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].cell >= cell_count_) {
      throw DimensionError("row " + std::to_string(i), "cell id " + std::to_string(rows_[i].cell) +
                                                           " >= cell count " +
                                                           std::to_string(cell_count_));
    }
    if (!std::isfinite(rows_[i].y)) throw ValidationError("row " + std::to_string(i), "non-finite outcome");
  }
}

Dataset sample(const StructuralModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("n", "sample size must be at least 1");
  std::vector<ObservedRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    const std::size_t l = draw_categorical(model.cell_probs(), rng.uniform());
    const CellSpec& cell = model.cell(l);
    const std::size_t u = draw_categorical(cell.u_probs, rng.uniform());
    const Arm z = draw_arm(cell.pi_z, rng.uniform());
    const Arm a = draw_arm(cell.take_up(z, u), rng.uniform());
    const double y = rng.uniform() < cell.outcome_mean(a, u) ? 1.0 : 0.0;
    rows[i] = ObservedRow{l, z, a, y};
  }
  return Dataset(std::move(rows), model.cell_count());
}

}  // namespace ivregime
