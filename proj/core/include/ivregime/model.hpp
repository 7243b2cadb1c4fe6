#pragma once

#include <cstddef>
#include <vector>

#include "ivregime/types.hpp"

namespace ivregime {

/// Latent structure of one covariate cell. Vectors are indexed by latent type u.
struct CellSpec {
  std::vector<double> u_probs;  ///< p(u | l)
  std::vector<double> m_plus;   ///< E[Y_{+1} | l, u]
  std::vector<double> m_minus;  ///< E[Y_{-1} | l, u]
  std::vector<double> q_plus;   ///< P(A=1 | Z=+1, l, u)
  std::vector<double> q_minus;  ///< P(A=1 | Z=-1, l, u)
  double pi_z = 0.5;            ///< P(Z=+1 | l), strictly inside (0,1)

  std::size_t latent_count() const noexcept { return u_probs.size(); }
  double outcome_mean(Arm a, std::size_t u) const { return a == Arm::Plus ? m_plus[u] : m_minus[u]; }
  /// P(A=+1 | Z=z, l, u)
  double take_up(Arm z, std::size_t u) const { return z == Arm::Plus ? q_plus[u] : q_minus[u]; }
  double instrument_prob(Arm z) const { return z == Arm::Plus ? pi_z : 1.0 - pi_z; }
  /// E[Y_{+1} - Y_{-1} | l, u]
  double outcome_contrast(std::size_t u) const { return m_plus[u] - m_minus[u]; }
  /// E[A_{+1} - A_{-1} | l, u] on the probability scale
  double take_up_contrast(std::size_t u) const { return q_plus[u] - q_minus[u]; }

  friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

/// Latent-confounder data-generating process over finitely many covariate cells.
///
/// The instrument is drawn independently of the latent type within each cell,
/// which encodes the causal-IV structure; exclusion and consistency are implied
/// by the outcome means depending on the realized treatment only.
/// Construction validates every field and throws ValidationError naming the
/// offending path (e.g. "/cells/1/q_plus/0").
class StructuralModel {
 public:
  StructuralModel(std::vector<CellSpec> cells, std::vector<double> cell_probs);

  std::size_t cell_count() const noexcept { return cells_.size(); }
  const std::vector<CellSpec>& cells() const noexcept { return cells_; }
  const std::vector<double>& cell_probs() const noexcept { return cell_probs_; }
  /// Throws DimensionError when l is out of range.
  const CellSpec& cell(std::size_t l) const;
  double cell_prob(std::size_t l) const { return cell_probs_.at(l); }

  friend bool operator==(const StructuralModel&, const StructuralModel&) = default;

 private:
  std::vector<CellSpec> cells_;
  std::vector<double> cell_probs_;
};

/// Per-cell diagnostics for the competing identifying assumptions.
struct CellAssumptions {
  double delta = 0.0;            ///< instrument relevance, sum_u p(u|l)(q_plus - q_minus)
  double cate = 0.0;             ///< conditional ATE, sum_u p(u|l)(m_plus - m_minus)
  bool a_part_a_holds = false;   ///< outcome contrasts share one weak sign across u
  bool a_part_b_holds = false;   ///< take-up contrasts share one weak sign across u
  double assumption7_cov = 0.0;  ///< Cov_u(outcome contrast, take-up contrast)
  double assumption8_var = 0.0;  ///< Var_u(take-up contrast)
};

struct AssumptionReport {
  std::vector<CellAssumptions> cells;

  bool assumption_a_holds() const noexcept;
  bool instrument_relevant(double tol) const noexcept;
};

/// Delta(l) = E[Y_{+1} - Y_{-1} | L=l].
double population_cate(const StructuralModel& model, std::size_t l);

/// delta(l) = P(A=1|Z=1,l) - P(A=1|Z=-1,l).
double population_delta(const StructuralModel& model, std::size_t l);

/// E[Y_{D(L)}]. Throws DimensionError on a length mismatch.
double regime_value(const StructuralModel& model, const Regime& regime);

/// Population value of the treatment-weighted objective
/// E[Z 1{A=D(L)} Y A / (delta(L) f(Z|L))], by exact enumeration over (l,u,z,a).
/// Throws WeakInstrument when some |delta(l)| < 1e-12.
double population_objective_id1(const StructuralModel& model, const Regime& regime);

/// Population value of the treatment-free objective E[1{Z=D(L)} Y / (delta(L) f(Z|L))].
double population_objective_id2(const StructuralModel& model, const Regime& regime);

/// Cell l's additive share of the chosen objective when D(l) = arm
/// (weighted by p(l)). For Objective::Oracle this is p(l) E[Y_arm | l].
double population_cell_contribution(const StructuralModel& model, std::size_t l,
                                    Objective objective, Arm arm);

/// Cell-by-cell maximizer of the chosen objective. Ties resolve to Arm::Minus:
/// the oracle picks Plus iff Delta(l) > 0; id1/id2 pick Plus iff the contribution
/// under Plus exceeds the one under Minus by more than 1e-12.
Regime population_argmax(const StructuralModel& model, Objective objective);

/// Fills every diagnostic. Sign agreement treats contrasts within `tol` of zero
/// as compatible with either sign.
AssumptionReport check_assumptions(const StructuralModel& model, double tol = kDefaultTolerance);

/// Threshold below which population objectives refuse to divide by delta(l).
inline constexpr double kWeakInstrumentThreshold = 1e-12;

}  // namespace ivregime
