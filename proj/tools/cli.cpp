#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivregime/analysis.hpp"
#include "ivregime/bounds.hpp"
#include "ivregime/dataset.hpp"
#include "ivregime/errors.hpp"
#include "ivregime/estimator.hpp"
#include "ivregime/model_json.hpp"
#include "ivregime/rng.hpp"

namespace ivregime::cli {

namespace {

struct RunConfig {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  std::string per_rep_path;
  std::uint64_t seed = kDefaultSeed;
  std::size_t n = 0;
  std::size_t reps = 100;
  std::string objective = "id1";
  std::string direction = "violate_Aa";
  std::string eps_grid;
  std::string delta;
  std::vector<std::string> regimes;
  double tol = kDefaultTolerance;
  std::size_t min_arm_count = 5;
  unsigned threads = 1;
  bool strict = false;
  bool no_maximin = false;
};

std::vector<double> parse_list(const std::string& text, const char* name) {
  std::vector<double> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const char* first = item.data();
    if (!item.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ValidationError(name, "cannot parse '" + std::string(item) + "' as a number");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError(name, "list must not be empty");
  return out;
}

Regime parse_regime(const std::string& text, std::size_t cells) {
  std::vector<Arm> arms;
  for (double v : parse_list(text, "regime")) {
    if (v == 1.0) {
      arms.push_back(Arm::Plus);
    } else if (v == -1.0) {
      arms.push_back(Arm::Minus);
    } else {
      throw DomainError("regime", "entries must be -1 or 1");
    }
  }
  if (arms.size() != cells) throw DimensionError("regime", "length does not match the cell count");
  return Regime(std::move(arms));
}

// Writes the document to --out, or to `out` when no path was given.
class Emitter {
 public:
  Emitter(const RunConfig& cfg, std::ostream& out, std::ostream& err) : cfg_(cfg), out_(out), err_(err) {}

  template <typename WriteFn>
  void document(WriteFn&& write) {
    if (cfg_.out_path.empty()) {
      write(out_);
      return;
    }
    std::ofstream file(cfg_.out_path, std::ios::binary);
    if (!file) throw ValidationError(cfg_.out_path, "cannot open for writing");
    write(file);
    if (!file) throw ValidationError(cfg_.out_path, "write failed");
  }

  void json(const nlohmann::json& doc) {
    document([&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  }

  void summary(const std::string& line) { (cfg_.out_path.empty() ? err_ : out_) << line << '\n'; }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::ostream& err_;
};

EstimatorOptions estimator_options(const RunConfig& cfg) {
  return EstimatorOptions{.min_arm_count = cfg.min_arm_count, .strict = cfg.strict};
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig ec;
  ec.objective = parse_objective(cfg.objective);
  ec.n = cfg.n;
  ec.reps = cfg.reps;
  ec.master_seed = cfg.seed;
  ec.estimator = estimator_options(cfg);
  ec.with_maximin = !cfg.no_maximin;
  ec.threads = cfg.threads;
  return ec;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void cmd_simulate(const RunConfig& cfg, Emitter& emit) {
  const StructuralModel model = load_model(cfg.model_path);
  const Dataset data = sample(model, cfg.n, cfg.seed);
  emit.document([&](std::ostream& os) { write_csv(data, os); });
  emit.summary("simulate: " + std::to_string(data.size()) + " rows over " + std::to_string(data.cell_count()) +
               " cells (seed " + std::to_string(cfg.seed) + ")");
}

void cmd_estimate(const RunConfig& cfg, Emitter& emit) {
  const Dataset data = read_csv(cfg.data_path);
  const Objective objective = parse_objective(cfg.objective);
  if (objective == Objective::Oracle) throw ValidationError("objective", "estimate accepts id1 or id2");
  PluginEstimates est;
  if (cfg.delta.empty()) {
    est = fit_nuisances(data, estimator_options(cfg));
  } else {
    if (objective != Objective::Id2) {
      throw ValidationError("delta", "external compliance rates are only used by the id2 objective");
    }
    const auto delta = parse_list(cfg.delta, "delta");
    est = fit_nuisances_with_delta(data, delta, estimator_options(cfg));
  }
  const RegimeFit fit = argmax_regime(data, est, objective);
  nlohmann::json doc = to_json(fit);
  doc["nuisances"] = to_json(est);
  emit.json(doc);
  std::string regime;
  for (int a : fit.regime.as_ints()) regime += (regime.empty() ? "" : " ") + std::to_string(a);
  emit.summary("estimate(" + cfg.objective + "): regime [" + regime + "], objective " + fmt(fit.objective_value) +
               ", " + std::to_string(fit.diagnostics.size()) + " diagnostics");
}

void cmd_check(const RunConfig& cfg, Emitter& emit) {
  const StructuralModel model = load_model(cfg.model_path);
  const AssumptionReport report = check_assumptions(model, cfg.tol);
  emit.json(to_json(report));
  emit.summary(std::string("check: Assumption A ") + (report.assumption_a_holds() ? "holds" : "fails") + " on " +
               std::to_string(model.cell_count()) + " cells");
}

void cmd_bounds(const RunConfig& cfg, Emitter& emit) {
  if (cfg.model_path.empty() == cfg.data_path.empty()) {
    throw ValidationError("bounds", "give exactly one of --model or --data");
  }
  std::vector<CellObservables> cells;
  if (!cfg.model_path.empty()) {
    cells = cell_observables_from(load_model(cfg.model_path));
  } else {
    cells = cell_observables_from(read_csv(cfg.data_path));
  }
  std::vector<Regime> queries;
  for (const std::string& r : cfg.regimes) queries.push_back(parse_regime(r, cells.size()));
  const BoundsResult result = compute_bounds(cells, BoundsOptions{.strict = cfg.strict}, queries);
  emit.json(to_json(result));
  const Interval& best = result.regimes.front().value;
  emit.summary("bounds: " + std::to_string(cells.size()) + " cells, maximin value bounds [" + fmt(best.lb) + ", " +
               fmt(best.ub) + "]");
}

void cmd_regret(const RunConfig& cfg, Emitter& emit) {
  const StructuralModel model = load_model(cfg.model_path);
  const RegretSummary summary = regret_experiment(model, experiment_config(cfg));
  emit.json(to_json(summary));
  if (!cfg.per_rep_path.empty()) {
    std::ofstream file(cfg.per_rep_path, std::ios::binary);
    if (!file) throw ValidationError(cfg.per_rep_path, "cannot open for writing");
    write_replications_csv(summary, file);
  }
  emit.summary("regret(" + cfg.objective + "): match rate " + fmt(summary.match_rate) + ", mean regret " +
               fmt(summary.mean_regret) + " over " + std::to_string(summary.successes) + " replications");
}

void cmd_sweep(const RunConfig& cfg, Emitter& emit) {
  const StructuralModel model = load_model(cfg.model_path);
  const auto grid = parse_list(cfg.eps_grid, "eps-grid");
  const auto rows =
      misspecification_sweep(model, parse_perturbation(cfg.direction), grid, experiment_config(cfg), cfg.tol);
  emit.document([&](std::ostream& os) { write_sweep_csv(rows, os); });
  emit.summary("sweep(" + cfg.direction + "): " + std::to_string(rows.size()) + " rows");
}

void cmd_oracle(const RunConfig& cfg, Emitter& emit) {
  const StructuralModel model = load_model(cfg.model_path);
  nlohmann::json doc;
  const Regime oracle = population_argmax(model, Objective::Oracle);
  doc["oracle"] = {{"regime", oracle.as_ints()}, {"value", regime_value(model, oracle)}};
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t l = 0; l < model.cell_count(); ++l) {
    cells.push_back({{"cell", l}, {"cate", population_cate(model, l)}, {"delta", population_delta(model, l)}});
  }
  doc["cells"] = std::move(cells);
  doc["diagnostics"] = nlohmann::json::array();
  for (Objective objective : {Objective::Id1, Objective::Id2}) {
    const std::string name(to_string(objective));
    try {
      const Regime r = population_argmax(model, objective);
      const double obj = objective == Objective::Id1 ? population_objective_id1(model, r)
                                                     : population_objective_id2(model, r);
      doc[name] = {{"regime", r.as_ints()}, {"objective", obj}, {"value", regime_value(model, r)}};
    } catch (const WeakInstrument& e) {
      if (cfg.strict) throw;
      doc[name] = nullptr;
      doc["diagnostics"].push_back(name + ": " + e.what());
    }
  }
  emit.json(doc);
  emit.summary("oracle: value " + fmt(doc["oracle"]["value"].get<double>()));
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Individualized treatment regimes under endogeneity with a binary instrument", "ivregime"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Master seed (default " + std::to_string(kDefaultSeed) + ")");
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", cfg.out_path, "Output path (default stdout)"); };
  auto add_estimator = [&](CLI::App* sub) {
    sub->add_option("--objective", cfg.objective, "id1 or id2")->check(CLI::IsMember({"id1", "id2"}));
    sub->add_option("--min-arm-count", cfg.min_arm_count, "Minimum rows per instrument arm")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--strict", cfg.strict, "Fail on unusable cells and infeasible observables");
  };
  auto add_experiment = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model_path, "Structural model JSON")->required();
    sub->add_option("--n", cfg.n, "Rows per replication")->required()->check(CLI::PositiveNumber);
    sub->add_option("--reps", cfg.reps, "Replications")->check(CLI::PositiveNumber);
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--no-maximin", cfg.no_maximin, "Skip the maximin bounds regime");
    add_seed(sub);
    add_estimator(sub);
  };

  auto* simulate = app.add_subcommand("simulate", "Sample a dataset CSV from a structural model");
  simulate->add_option("--model", cfg.model_path, "Structural model JSON")->required();
  simulate->add_option("--n", cfg.n, "Number of rows")->required()->check(CLI::PositiveNumber);
  add_seed(simulate);
  add_out(simulate);

  auto* estimate = app.add_subcommand("estimate", "Fit the regime maximizing a sample objective");
  estimate->add_option("--data", cfg.data_path, "Dataset CSV")->required();
  estimate->add_option("--delta", cfg.delta, "Per-cell compliance-rate differences (id2 only), comma-separated");
  add_estimator(estimate);
  add_out(estimate);

  auto* check = app.add_subcommand("check", "Assumption diagnostics for a structural model");
  check->add_option("--model", cfg.model_path, "Structural model JSON")->required();
  check->add_option("--tol", cfg.tol, "Sign tolerance")->check(CLI::PositiveNumber);
  add_out(check);

  auto* bounds = app.add_subcommand("bounds", "Sharp bounds on counterfactual means and regime values");
  bounds->add_option("--model", cfg.model_path, "Structural model JSON");
  bounds->add_option("--data", cfg.data_path, "Dataset CSV (binary outcomes)");
  bounds->add_option("--regime", cfg.regimes, "Extra regime to bound, comma-separated +-1 per cell");
  bounds->add_flag("--strict", cfg.strict, "Fail on infeasible observables instead of projecting");
  add_out(bounds);

  auto* regret = app.add_subcommand("regret", "Monte Carlo regret of an estimated regime");
  add_experiment(regret);
  regret->add_option("--per-rep", cfg.per_rep_path, "Per-replication CSV output");
  add_out(regret);

  auto* sweep = app.add_subcommand("sweep", "Regret under increasing assumption violations");
  add_experiment(sweep);
  sweep->add_option("--direction", cfg.direction, "violate_Aa, violate_7 or violate_8")
      ->check(CLI::IsMember({"violate_Aa", "violate_7", "violate_8"}));
  sweep->add_option("--eps-grid", cfg.eps_grid, "Comma-separated perturbation sizes")->required();
  sweep->add_option("--tol", cfg.tol, "Sign tolerance for the reported diagnostics")->check(CLI::PositiveNumber);
  add_out(sweep);

  auto* oracle = app.add_subcommand("oracle", "Population argmax regimes and their values");
  oracle->add_option("--model", cfg.model_path, "Structural model JSON")->required();
  oracle->add_flag("--strict", cfg.strict, "Fail on a weak instrument");
  add_out(oracle);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  Emitter emit(cfg, out, err);
  try {
    if (*simulate) cmd_simulate(cfg, emit);
    else if (*estimate) cmd_estimate(cfg, emit);
    else if (*check) cmd_check(cfg, emit);
    else if (*bounds) cmd_bounds(cfg, emit);
    else if (*regret) cmd_regret(cfg, emit);
    else if (*sweep) cmd_sweep(cfg, emit);
    else if (*oracle) cmd_oracle(cfg, emit);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

}  // namespace ivregime::cli
