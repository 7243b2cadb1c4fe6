#include <doctest.h>

#include <cmath>

#include "ivregime/errors.hpp"
#include "ivregime/model.hpp"
#include "ivregime/model_json.hpp"
#include "test_support.hpp"

using namespace ivregime;
using ivtest::m1;
using ivtest::m2;

namespace {
const Regime kPlus = Regime::constant(1, Arm::Plus);
const Regime kMinus = Regime::constant(1, Arm::Minus);
}  // namespace

TEST_CASE("population CATE and instrument strength on the worked models") {
  CHECK(population_cate(m1(), 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(population_cate(m2(), 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(population_delta(m1(), 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(population_delta(m2(), 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(population_cate(ivtest::constant_outcome_model(0.4), 0) == 0.0);

  CellSpec irrelevant = ivtest::m1_cell();
  irrelevant.q_minus = irrelevant.q_plus;
  CHECK(population_delta(StructuralModel({irrelevant}, {1.0}), 0) == 0.0);

  CHECK_THROWS_AS(population_cate(m1(), 1), DimensionError);
  CHECK_THROWS_AS(population_delta(m1(), 7), DimensionError);
}

TEST_CASE("regime values") {
  CHECK(regime_value(m1(), kPlus) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(regime_value(m1(), kMinus) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(regime_value(m2(), kPlus) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(regime_value(m2(), kMinus) == doctest::Approx(0.5).epsilon(1e-12));
  const auto flat = ivtest::constant_outcome_model(0.35);
  CHECK(regime_value(flat, kPlus) == regime_value(flat, kMinus));
  CHECK_THROWS_AS(regime_value(m1(), Regime::constant(2, Arm::Plus)), DimensionError);
}

TEST_CASE("population objectives match the observable-route oracle") {
  const auto model = m1();
  for (const Regime& d : {kPlus, kMinus}) {
    CHECK(std::abs(population_objective_id1(model, d) - ivtest::observable_objective(model, d, true)) < 1e-12);
    CHECK(std::abs(population_objective_id2(model, d) - ivtest::observable_objective(model, d, false)) < 1e-12);
  }
  // Frozen from the oracle: 0.35 + 0.45 decomposition and E[Y|Z=+-1]/delta.
  CHECK(std::abs(population_objective_id1(model, kPlus) - 0.80) < 1e-12);
  CHECK(std::abs(population_objective_id1(model, kMinus) - 0.45) < 1e-12);
  CHECK(std::abs(population_objective_id2(model, kPlus) - 1.625) < 1e-12);
  CHECK(std::abs(population_objective_id2(model, kMinus) - 1.275) < 1e-12);

  const double gap1 = population_objective_id1(model, kPlus) - population_objective_id1(model, kMinus);
  const double gap2 = population_objective_id2(model, kPlus) - population_objective_id2(model, kMinus);
  CHECK(std::abs(gap1 - 0.35) < 1e-12);
  CHECK(std::abs(gap2 - 0.35) < 1e-12);

  const auto zero = ivtest::constant_outcome_model(0.0);
  CHECK(population_objective_id1(zero, kPlus) == 0.0);
  CHECK(population_objective_id1(zero, kMinus) == 0.0);
  CHECK(population_objective_id2(zero, kPlus) == 0.0);
  CHECK(population_objective_id2(zero, kMinus) == 0.0);
}

TEST_CASE("objectives on random multi-cell models agree with the observable route") {
  ivtest::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = ivtest::random_model(rng, 1 + rng.index(4), 1 + rng.index(4), ivtest::random_cell);
    bool strong = true;
    for (std::size_t l = 0; l < model.cell_count(); ++l) strong = strong && std::abs(population_delta(model, l)) > 0.05;
    if (!strong) continue;
    const Regime d = Regime::from_mask(model.cell_count(), rng.index(1U << model.cell_count()));
    const double scale = 1.0 + std::abs(ivtest::observable_objective(model, d, true));
    CHECK(std::abs(population_objective_id1(model, d) - ivtest::observable_objective(model, d, true)) < 1e-10 * scale);
    CHECK(std::abs(population_objective_id2(model, d) - ivtest::observable_objective(model, d, false)) <
          1e-10 * (1.0 + std::abs(ivtest::observable_objective(model, d, false))));
  }
}

TEST_CASE("population argmax") {
  for (Objective o : {Objective::Id1, Objective::Id2, Objective::Oracle}) {
    CHECK(population_argmax(m1(), o) == kPlus);
  }
  CHECK(population_argmax(m2(), Objective::Oracle) == kPlus);
  CHECK(population_argmax(m2(), Objective::Id1) == kMinus);
  CHECK(population_argmax(m2(), Objective::Id2) == kMinus);
  // Per-cell contrast 0.5 (0.4*0.1 + (-0.2)*0.7) / 0.4 = -0.125.
  const double contrast = population_cell_contribution(m2(), 0, Objective::Id1, Arm::Plus) -
                          population_cell_contribution(m2(), 0, Objective::Id1, Arm::Minus);
  CHECK(contrast == doctest::Approx(-0.125).epsilon(1e-12));

  const auto flat = ivtest::constant_outcome_model(0.5);
  for (Objective o : {Objective::Id1, Objective::Id2, Objective::Oracle}) {
    CHECK(population_argmax(flat, o) == kMinus);
  }
}

TEST_CASE("objectives refuse a weak instrument") {
  CellSpec weak = ivtest::m1_cell();
  weak.q_minus = weak.q_plus;
  const StructuralModel model({ivtest::m1_cell(), weak}, {0.5, 0.5});
  const Regime d = Regime::constant(2, Arm::Plus);
  CHECK_THROWS_AS(population_objective_id1(model, d), WeakInstrument);
  CHECK_THROWS_AS(population_objective_id2(model, d), WeakInstrument);
  CHECK_THROWS_AS(population_argmax(model, Objective::Id1), WeakInstrument);
  try {
    population_objective_id2(model, d);
  } catch (const WeakInstrument& e) {
    CHECK(e.cell() == 1);
  }
  CHECK_NOTHROW(population_argmax(model, Objective::Oracle));
}

TEST_CASE("negative instrument strength is carried, not assumed away") {
  CellSpec flipped = ivtest::m1_cell();
  std::swap(flipped.q_plus, flipped.q_minus);
  const StructuralModel model({flipped}, {1.0});
  CHECK(population_delta(model, 0) == doctest::Approx(-0.4));
  CHECK(population_argmax(model, Objective::Id1) == kPlus);
  CHECK(population_argmax(model, Objective::Id2) == kPlus);
}

TEST_CASE("assumption diagnostics") {
  const auto r1 = check_assumptions(m1());
  REQUIRE(r1.cells.size() == 1);
  CHECK(r1.cells[0].a_part_a_holds);
  CHECK(r1.cells[0].a_part_b_holds);
  CHECK(r1.cells[0].assumption8_var > 0.0);
  CHECK(r1.cells[0].assumption7_cov == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r1.cells[0].delta == doctest::Approx(0.4));
  CHECK(r1.cells[0].cate == doctest::Approx(0.3));

  CHECK_FALSE(check_assumptions(m2()).cells[0].a_part_a_holds);
  CHECK(check_assumptions(m2()).cells[0].a_part_b_holds);

  const StructuralModel single({CellSpec{{1.0}, {0.7}, {0.2}, {0.6}, {0.1}, 0.3}}, {1.0});
  const auto rs = check_assumptions(single);
  CHECK(rs.cells[0].a_part_a_holds);
  CHECK(rs.cells[0].a_part_b_holds);
  CHECK(std::abs(rs.cells[0].assumption7_cov) < 1e-15);
  CHECK(std::abs(rs.cells[0].assumption8_var) < 1e-15);

  CHECK_THROWS_AS(check_assumptions(m1(), 0.0), ValidationError);
}

TEST_CASE("latent types with zero probability do not break sign agreement") {
  const StructuralModel model({CellSpec{{1.0, 0.0}, {0.7, 0.1}, {0.2, 0.9}, {0.6, 0.6}, {0.1, 0.1}, 0.5}}, {1.0});
  CHECK(check_assumptions(model).cells[0].a_part_a_holds);
}

TEST_CASE("Assumption 8 implies Assumption 7 on random models") {
  ivtest::Rng rng(3);
  const double tol = 1e-9;
  for (int trial = 0; trial < 2000; ++trial) {
    auto model = ivtest::random_model(rng, 1 + rng.index(3), 1 + rng.index(4), ivtest::random_cell);
    if (trial % 2 == 0) {
      // Independent compliance type: a common take-up contrast across latent types.
      std::vector<CellSpec> cells = model.cells();
      for (CellSpec& c : cells) {
        const double shift = rng.uniform(-0.3, 0.3);
        for (std::size_t u = 0; u < c.latent_count(); ++u) {
          c.q_plus[u] = rng.uniform(0.35, 0.65);
          c.q_minus[u] = c.q_plus[u] - shift;
        }
      }
      model = StructuralModel(std::move(cells), model.cell_probs());
    }
    for (const auto& c : check_assumptions(model, tol).cells) {
      if (c.assumption8_var < tol) {
        // |Cov| <= sqrt(Var_gamma * Var_delta) <= sqrt(Var_delta) since outcome contrasts lie in [-1,1].
        CHECK(std::abs(c.assumption7_cov) <= std::sqrt(c.assumption8_var) + 1e-15);
        CHECK(std::abs(c.assumption7_cov) < std::sqrt(tol));
      }
      if (c.assumption8_var < 1e-20) CHECK(std::abs(c.assumption7_cov) < 1e-10);
    }
  }
}

TEST_CASE("comonotone take-up satisfies A(b)") {
  ivtest::Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    CellSpec c = ivtest::random_cell(rng, 1 + rng.index(5));
    for (std::size_t u = 0; u < c.latent_count(); ++u) {
      if (c.q_plus[u] < c.q_minus[u]) std::swap(c.q_plus[u], c.q_minus[u]);
    }
    CHECK(check_assumptions(StructuralModel({c}, {1.0})).cells[0].a_part_b_holds);
  }
}

TEST_CASE("argmax identity on random identified models") {
  ivtest::Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const auto model = ivtest::random_identified_model(rng, 1 + rng.index(4), 1 + rng.index(4), 1e-3);
    REQUIRE(check_assumptions(model).assumption_a_holds());
    const Regime oracle = population_argmax(model, Objective::Oracle);
    CHECK(population_argmax(model, Objective::Id1) == oracle);
    CHECK(population_argmax(model, Objective::Id2) == oracle);
  }
}

TEST_CASE("id1 - id2 is constant across all regimes") {
  ivtest::Rng rng(23);
  int checked = 0;
  while (checked < 200) {
    const auto model = ivtest::random_model(rng, 1 + rng.index(4), 1 + rng.index(4), ivtest::random_cell);
    bool strong = true;
    for (std::size_t l = 0; l < model.cell_count(); ++l) strong = strong && std::abs(population_delta(model, l)) > 0.05;
    if (!strong) continue;
    ++checked;
    const std::size_t k = model.cell_count();
    const Regime base = Regime::constant(k, Arm::Minus);
    const double gap = population_objective_id1(model, base) - population_objective_id2(model, base);
    for (std::uint64_t mask = 1; mask < (1U << k); ++mask) {
      const Regime d = Regime::from_mask(k, mask);
      CHECK(std::abs(population_objective_id1(model, d) - population_objective_id2(model, d) - gap) < 1e-10);
    }
  }
}

TEST_CASE("the objective at the optimum is not the optimal value") {
  const double objective = population_objective_id1(m1(), kPlus);
  const double value = regime_value(m1(), kPlus);
  CHECK(std::abs(objective - 0.80) < 1e-12);
  CHECK(std::abs(value - 0.70) < 1e-12);
  CHECK(std::abs(objective - value) > 0.05);
}

TEST_CASE("model validation reports the offending path") {
  auto expect_path = [](const nlohmann::json& doc, const std::string& path) {
    try {
      model_from_json(doc);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.path() == path);
    }
  };
  nlohmann::json good = to_json(m1());
  CHECK(model_from_json(good) == m1());

  auto bad = good;
  bad["cells"][0]["q_plus"][1] = 1.5;
  expect_path(bad, "/cells/0/q_plus/1");

  bad = good;
  bad["cells"][0]["pi_z"] = 1.0;
  expect_path(bad, "/cells/0/pi_z");

  bad = good;
  bad["cells"][0]["u_probs"] = {0.5, 0.6};
  expect_path(bad, "/cells/0/u_probs");

  bad = good;
  bad["cell_probs"] = {0.5};
  expect_path(bad, "/cell_probs");

  bad = good;
  bad["cells"][0].erase("m_minus");
  expect_path(bad, "/cells/0/m_minus");

  bad = good;
  bad["cells"][0]["m_plus"] = {0.5};
  expect_path(bad, "/cells/0/m_plus");

  bad = good;
  bad["cells"] = nlohmann::json::array();
  bad["cell_probs"] = nlohmann::json::array();
  expect_path(bad, "/cells");

  bad = good;
  bad["cells"][0]["m_plus"][0] = "x";
  expect_path(bad, "/cells/0/m_plus/0");
}
