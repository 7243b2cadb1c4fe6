#include "ivregime/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "ivregime/bounds.hpp"
#include "ivregime/dataset.hpp"
#include "ivregime/errors.hpp"
#include "ivregime/parallel.hpp"
#include "ivregime/rng.hpp"

namespace ivregime {

namespace {

constexpr double kCovarianceAgreement = 1e-12;

void require_interior(const BinaryUSpec& spec) {
  if (!(spec.p1 > 0.0 && spec.p1 < 1.0)) throw ValidationError("p1", "must lie strictly inside (0,1)");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string regime_string(const Regime& r) {
  std::string out;
  for (std::size_t l = 0; l < r.size(); ++l) {
    if (l) out += ' ';
    out += r[l] == Arm::Plus ? "1" : "-1";
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

std::optional<Regime> fit_maximin(const Dataset& data) {
  try {
    const auto cells = cell_observables_from(data);
    return compute_bounds(cells, BoundsOptions{.strict = false}).maximin;
  } catch (const Error&) {
    return std::nullopt;
  }
}

void set_probability(double& slot, double value, std::size_t l, const char* field, std::size_t u) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw InvalidPerturbation("/cells/" + std::to_string(l) + "/" + field + "/" + std::to_string(u),
                              "perturbed probability " + std::to_string(value) + " leaves [0,1]");
  }
  slot = value;
}

// Adds step * h(u) to the take-up contrast, split evenly over both arms.
void tilt_take_up(CellSpec& cell, std::size_t l, const std::vector<double>& h, double step) {
  if (step == 0.0) return;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) {
    const double half = 0.5 * step * h[u];
    set_probability(cell.q_plus[u], cell.q_plus[u] + half, l, "q_plus", u);
    set_probability(cell.q_minus[u], cell.q_minus[u] - half, l, "q_minus", u);
  }
}

double weighted_mean(const CellSpec& cell, const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) total += cell.u_probs[u] * v[u];
  return total;
}

double weighted_cov(const CellSpec& cell, const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = weighted_mean(cell, x);
  const double my = weighted_mean(cell, y);
  double total = 0.0;
  for (std::size_t u = 0; u < cell.latent_count(); ++u) total += cell.u_probs[u] * (x[u] - mx) * (y[u] - my);
  return total;
}

std::vector<double> take_up_contrasts(const CellSpec& cell) {
  std::vector<double> out(cell.latent_count());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = cell.take_up_contrast(u);
  return out;
}

std::vector<double> outcome_contrasts(const CellSpec& cell) {
  std::vector<double> out(cell.latent_count());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = cell.outcome_contrast(u);
  return out;
}

std::vector<double> centered(const CellSpec& cell, std::vector<double> v) {
  const double m = weighted_mean(cell, v);
  for (double& x : v) x -= m;
  return v;
}

}  // namespace

double binary_u_cov_definitional(const BinaryUSpec& s) {
  require_interior(s);
  const double p2 = 1.0 - s.p1;
  const double e_dg = s.p1 * s.delta1 * s.gamma1 + p2 * s.delta2 * s.gamma2;
  const double e_d = s.p1 * s.delta1 + p2 * s.delta2;
  const double e_g = s.p1 * s.gamma1 + p2 * s.gamma2;
  return e_dg - e_d * e_g;
}

double binary_u_cov(const BinaryUSpec& s) {
  require_interior(s);
  const double factorized = s.p1 * (1.0 - s.p1) * (s.delta1 - s.delta2) * (s.gamma1 - s.gamma2);
  const double direct = binary_u_cov_definitional(s);
  if (std::abs(factorized - direct) > kCovarianceAgreement) {
    throw NumericalError("factorized and definitional covariance disagree: " + std::to_string(factorized) +
                         " vs " + std::to_string(direct));
  }
  return factorized;
}

bool binary_u_iff_check(const BinaryUSpec& s, double tol) {
  if (!(tol > 0.0)) throw ValidationError("tol", "tolerance must be positive");
  const double cov = binary_u_cov(s);
  const double dd = std::abs(s.delta1 - s.delta2);
  const double dg = std::abs(s.gamma1 - s.gamma2);
  const double scale = s.p1 * (1.0 - s.p1) * std::max(1.0, std::max(dd, dg));
  const bool cov_zero = std::abs(cov) < tol;
  const bool one_constant = std::min(dd, dg) < tol / scale;
  return cov_zero == one_constant;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RegretSummary regret_experiment(const StructuralModel& model, const ExperimentConfig& config) {
  if (config.n < 1) throw ValidationError("n", "must be at least 1");
  if (config.reps < 1) throw ValidationError("reps", "must be at least 1");
  if (config.objective == Objective::Oracle) {
    throw ValidationError("objective", "regret experiments estimate id1 or id2");
  }

  RegretSummary summary;
  summary.oracle = population_argmax(model, Objective::Oracle);
  summary.oracle_value = regime_value(model, summary.oracle);
  summary.replications.resize(config.reps);

  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    ReplicationResult& rep = summary.replications[r];
    rep.index = r;
    rep.seed = child_seed(config.master_seed, r);
    const Dataset data = sample(model, config.n, rep.seed);
    try {
      const PluginEstimates est = fit_nuisances(data, config.estimator);
      const RegimeFit fit = argmax_regime(data, est, config.objective);
      rep.regime = fit.regime;
      rep.regret = summary.oracle_value - regime_value(model, fit.regime);
      rep.matched = fit.regime == summary.oracle;
      rep.ok = true;
    } catch (const Error& e) {
      rep.error = e.what();
    }
    if (config.with_maximin) {
      rep.maximin_regime = fit_maximin(data);
      if (rep.maximin_regime) rep.maximin_regret = summary.oracle_value - regime_value(model, *rep.maximin_regime);
    }
  });

  std::vector<double> regrets;
  std::vector<double> maximin_regrets;
  std::size_t matches = 0;
  for (const ReplicationResult& rep : summary.replications) {
    if (rep.ok) {
      regrets.push_back(rep.regret);
      if (rep.matched) ++matches;
    }
    if (rep.maximin_regret) {
      maximin_regrets.push_back(*rep.maximin_regret);
    } else if (config.with_maximin) {
      ++summary.maximin_failures;
    }
  }
  summary.successes = regrets.size();
  summary.failures = config.reps - summary.successes;
  if (!regrets.empty()) {
    summary.match_rate = static_cast<double>(matches) / static_cast<double>(regrets.size());
    summary.mean_regret = mean(regrets);
    summary.median_regret = quantile(regrets, 0.5);
    summary.q90_regret = quantile(regrets, 0.9);
  }
  if (!maximin_regrets.empty()) summary.maximin_mean_regret = mean(maximin_regrets);
  return summary;
}

std::string_view to_string(Perturbation p) noexcept {
  switch (p) {
    case Perturbation::ViolateAa: return "violate_Aa";
    case Perturbation::Violate7: return "violate_7";
    case Perturbation::Violate8: return "violate_8";
  }
  return "?";
}

Perturbation parse_perturbation(std::string_view s) {
  if (s == "violate_Aa") return Perturbation::ViolateAa;
  if (s == "violate_7") return Perturbation::Violate7;
  if (s == "violate_8") return Perturbation::Violate8;
  throw ValidationError("direction", "unknown perturbation '" + std::string(s) + "'");
}

StructuralModel perturb_model(const StructuralModel& base, Perturbation direction, double eps) {
  if (!std::isfinite(eps)) throw InvalidPerturbation("eps", "must be finite");
  std::vector<CellSpec> cells = base.cells();
  for (std::size_t l = 0; l < cells.size(); ++l) {
    CellSpec& cell = cells[l];
    if (eps == 0.0) continue;
    if (cell.latent_count() < 2) {
      throw InvalidPerturbation("/cells/" + std::to_string(l), "perturbations need at least two latent types");
    }
    switch (direction) {
      case Perturbation::ViolateAa:
        set_probability(cell.m_plus[1], cell.m_plus[1] - eps, l, "m_plus", 1);
        break;
      case Perturbation::Violate7: {
        const auto h = centered(cell, outcome_contrasts(cell));
        const double var_h = weighted_cov(cell, h, h);
        if (var_h <= 0.0) {
          throw InvalidPerturbation("/cells/" + std::to_string(l),
                                    "outcome contrast is constant over latent types; covariance cannot move");
        }
        tilt_take_up(cell, l, h, eps / var_h);
        break;
      }
      case Perturbation::Violate8: {
        std::vector<double> indicator(cell.latent_count(), 0.0);
        indicator[0] = 1.0;
        const auto h = centered(cell, indicator);
        const double var_h = weighted_cov(cell, h, h);
        if (var_h <= 0.0) {
          throw InvalidPerturbation("/cells/" + std::to_string(l), "latent type 0 has probability 0 or 1");
        }
        // Smallest-magnitude root of var_h s^2 + 2 c s - eps = 0.
        const double c = weighted_cov(cell, take_up_contrasts(cell), h);
        const double disc = c * c + eps * var_h;
        if (disc < 0.0) {
          throw InvalidPerturbation("/cells/" + std::to_string(l), "variance cannot decrease by that much");
        }
        const double root = std::sqrt(disc);
        const double step = eps / (c >= 0.0 ? c + root : c - root);
        tilt_take_up(cell, l, h, step);
        break;
      }
    }
  }
  return StructuralModel(std::move(cells), base.cell_probs());
}

std::vector<SweepRow> misspecification_sweep(const StructuralModel& base, Perturbation direction,
                                             std::span<const double> eps_grid, const ExperimentConfig& config,
                                             double tol) {
  if (eps_grid.empty()) throw ValidationError("eps_grid", "must not be empty");
  std::vector<SweepRow> rows;
  rows.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    const StructuralModel model = perturb_model(base, direction, eps);
    const AssumptionReport report = check_assumptions(model, tol);
    SweepRow row;
    row.eps = eps;
    row.aa_holds = true;
    row.ab_holds = true;
    for (const CellAssumptions& c : report.cells) {
      if (std::abs(c.assumption7_cov) > std::abs(row.cov7)) row.cov7 = c.assumption7_cov;
      if (c.assumption8_var > row.var8) row.var8 = c.assumption8_var;
      row.aa_holds = row.aa_holds && c.a_part_a_holds;
      row.ab_holds = row.ab_holds && c.a_part_b_holds;
    }
    const RegretSummary summary = regret_experiment(model, config);
    row.match_rate = summary.match_rate;
    row.mean_regret = summary.mean_regret;
    row.q90_regret = summary.q90_regret;
    row.maximin_regret = summary.maximin_mean_regret;
    row.failures = summary.failures;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "eps,cov7,var8,Aa_holds,Ab_holds,match_rate,mean_regret,q90_regret,maximin_regret\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.eps) << ',' << format_double(r.cov7) << ',' << format_double(r.var8) << ','
        << (r.aa_holds ? 1 : 0) << ',' << (r.ab_holds ? 1 : 0) << ',' << format_double(r.match_rate) << ','
        << format_double(r.mean_regret) << ',' << format_double(r.q90_regret) << ','
        << (r.maximin_regret ? format_double(*r.maximin_regret) : std::string("NA")) << '\n';
  }
}

void write_replications_csv(const RegretSummary& summary, std::ostream& out) {
  out << "rep,seed,status,regime,regret,matched,maximin_regime,maximin_regret\n";
  for (const ReplicationResult& r : summary.replications) {
    out << r.index << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
        << (r.ok ? regime_string(r.regime) : std::string()) << ','
        << (r.ok ? format_double(r.regret) : std::string("NA")) << ',' << (r.matched ? 1 : 0) << ','
        << (r.maximin_regime ? regime_string(*r.maximin_regime) : std::string()) << ','
        << (r.maximin_regret ? format_double(*r.maximin_regret) : std::string("NA")) << '\n';
  }
}

nlohmann::json to_json(const RegretSummary& s) {
  nlohmann::json out = {{"oracle_regime", s.oracle.as_ints()},
                        {"oracle_value", s.oracle_value},
                        {"replications", s.replications.size()},
                        {"successes", s.successes},
                        {"failures", s.failures},
                        {"match_rate", s.match_rate},
                        {"mean_regret", s.mean_regret},
                        {"median_regret", s.median_regret},
                        {"q90_regret", s.q90_regret},
                        {"maximin_failures", s.maximin_failures}};
  out["maximin_mean_regret"] = s.maximin_mean_regret ? nlohmann::json(*s.maximin_mean_regret) : nlohmann::json(nullptr);
  return out;
}

}  // namespace ivregime
