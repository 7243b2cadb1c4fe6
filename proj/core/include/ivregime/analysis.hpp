#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivregime/estimator.hpp"
#include "ivregime/model.hpp"
#include "ivregime/types.hpp"

namespace ivregime {

// ---------------------------------------------------------------------------
// Two-point latent type: covariance of two functions of U.

/// U takes two values with P(U=u1) = p1. delta_i and gamma_i are the two
/// functions evaluated at u_i.
struct BinaryUSpec {
  double p1 = 0.5;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

/// p1 (1-p1) (delta1-delta2)(gamma1-gamma2). Cross-checks against
/// E[delta gamma] - E[delta] E[gamma] and throws NumericalError if the two
/// routes differ by more than 1e-12. Throws ValidationError unless 0 < p1 < 1.
double binary_u_cov(const BinaryUSpec& spec);

/// E[delta gamma] - E[delta] E[gamma], evaluated term by term.
double binary_u_cov_definitional(const BinaryUSpec& spec);

/// Whether "covariance is zero" and "one of the two functions is constant"
/// agree for this spec. The covariance side uses |cov| < tol; the constancy side
/// uses min contrast < tol / (p1 (1-p1) max(1, larger contrast)), the largest
/// threshold under which a constant function forces |cov| < tol.
bool binary_u_iff_check(const BinaryUSpec& spec, double tol);

// ---------------------------------------------------------------------------
// Regret experiments.

struct ExperimentConfig {
  Objective objective = Objective::Id1;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::uint64_t master_seed = 0;
  EstimatorOptions estimator;
  /// Also fit the maximin partial-identification regime per replication.
  bool with_maximin = true;
  unsigned threads = 1;
};

struct ReplicationResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Regime regime;
  double regret = 0.0;
  bool matched = false;
  std::optional<Regime> maximin_regime;
  std::optional<double> maximin_regret;
};

/// Regret is V(oracle regime) - V(estimated regime) under the true model.
struct RegretSummary {
  Regime oracle;
  double oracle_value = 0.0;
  std::vector<ReplicationResult> replications;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double match_rate = 0.0;
  double mean_regret = 0.0;
  double median_regret = 0.0;
  double q90_regret = 0.0;
  std::optional<double> maximin_mean_regret;
  std::size_t maximin_failures = 0;
};

/// For r in [0, reps): sample(model, n, child_seed(master_seed, r)), fit the
/// chosen objective's regime, and score it against the oracle regime. Estimator
/// errors are recorded per replication and excluded from the aggregates.
/// Results do not depend on `threads`.
RegretSummary regret_experiment(const StructuralModel& model, const ExperimentConfig& config);

/// Type-7 (linear interpolation) sample quantile; `values` need not be sorted.
double quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Misspecification sweeps.

enum class Perturbation { ViolateAa, Violate7, Violate8 };

std::string_view to_string(Perturbation p) noexcept;
Perturbation parse_perturbation(std::string_view s);

/// Applies the perturbation of size eps to every cell. eps = 0 returns the base
/// model unchanged.
///  - ViolateAa: m_plus of latent type 1 decreases by eps.
///  - Violate7: the take-up contrast is tilted along the centered outcome
///    contrast so Cov_u(outcome contrast, take-up contrast) rises by eps.
///  - Violate8: the take-up contrast is tilted along the centered indicator of
///    latent type 0 so Var_u(take-up contrast) rises by eps.
/// Tilts move q_plus and q_minus by equal and opposite halves, so delta(l) is
/// unchanged. Throws InvalidPerturbation when a probability leaves [0,1] or the
/// direction does not exist (e.g. a single latent type).
StructuralModel perturb_model(const StructuralModel& base, Perturbation direction, double eps);

struct SweepRow {
  double eps = 0.0;
  /// Assumption statistics of the perturbed model, taken from the cell with the
  /// largest magnitude (exactly check_assumptions' value for that cell).
  double cov7 = 0.0;
  double var8 = 0.0;
  bool aa_holds = false;
  bool ab_holds = false;
  double match_rate = 0.0;
  double mean_regret = 0.0;
  double q90_regret = 0.0;
  std::optional<double> maximin_regret;
  std::size_t failures = 0;
};

std::vector<SweepRow> misspecification_sweep(const StructuralModel& base, Perturbation direction,
                                             std::span<const double> eps_grid, const ExperimentConfig& config,
                                             double tol = kDefaultTolerance);

/// Header `eps,cov7,var8,Aa_holds,Ab_holds,match_rate,mean_regret,q90_regret,maximin_regret`.
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);
/// Header `rep,seed,status,regime,regret,matched,maximin_regime,maximin_regret`.
void write_replications_csv(const RegretSummary& summary, std::ostream& out);

nlohmann::json to_json(const RegretSummary& summary);

}  // namespace ivregime
