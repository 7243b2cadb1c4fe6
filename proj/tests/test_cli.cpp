#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "ivregime/model_json.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ivregime::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tmpdir() {
  const fs::path dir = fs::path(IVREGIME_TEST_TMPDIR);
  fs::create_directories(dir);
  return dir;
}

std::string path(const std::string& name) { return (tmpdir() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) { return std::count(text.begin(), text.end(), '\n'); }

void write_text(const std::string& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

bool is_interval(const json& j) {
  return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number() &&
         j[0].get<double>() <= j[1].get<double>();
}

bool is_regime(const json& j, std::size_t k) {
  if (!j.is_array() || j.size() != k) return false;
  for (const auto& v : j) {
    if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("simulate then estimate") {
  const auto model = path("m1.json");
  ivregime::save_model(ivtest::m1(), model);
  const auto data = path("d.csv");
  auto r = run({"simulate", "--model", model, "--n", "1000", "--seed", "42", "--out", data});
  REQUIRE(r.code == 0);
  CHECK(line_count(slurp(data)) == 1001);
  CHECK(slurp(data).rfind("l,z,a,y\n", 0) == 0);
  CHECK(r.out.find("1000 rows") != std::string::npos);

  const auto fit = path("fit.json");
  r = run({"estimate", "--data", data, "--objective", "id2", "--out", fit});
  REQUIRE(r.code == 0);
  const json doc = json::parse(slurp(fit));
  CHECK(is_regime(doc["regime"], 1));
  CHECK(doc["objective_name"] == "id2");
  CHECK(doc["objective"].is_number());
  CHECK(doc["per_cell"].is_array());
  CHECK(doc["diagnostics"].is_array());
  CHECK(doc["nuisances"].is_object());

  r = run({"estimate", "--data", data, "--objective", "id2", "--delta", "0.4"});
  REQUIRE(r.code == 0);
  CHECK(is_regime(json::parse(r.out)["regime"], 1));
  CHECK(run({"estimate", "--data", data, "--objective", "id1", "--delta", "0.4"}).code == 2);
  CHECK(run({"estimate", "--data", data, "--objective", "id2", "--delta", "0.4,0.1"}).code == 2);
}

TEST_CASE("simulate writes to stdout without --out") {
  const auto model = path("m1.json");
  ivregime::save_model(ivtest::m1(), model);
  const auto r = run({"simulate", "--model", model, "--n", "10"});
  REQUIRE(r.code == 0);
  CHECK(line_count(r.out) == 11);
  CHECK(r.err.find("simulate:") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"simulate", "--n", "10"}).code == 1);
  CHECK(run({"estimate", "--data", "x.csv", "--objective", "id3"}).code == 1);
  CHECK(run({"simulate", "--model", "m.json", "--n", "0"}).code == 1);
  CHECK(run({"check", "--model", "m.json", "--unknown"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("validation errors exit 2") {
  CHECK(run({"estimate", "--data", path("missing.csv")}).code == 2);
  CHECK(run({"check", "--model", path("missing.json")}).code == 2);

  const auto bad = path("bad.json");
  write_text(bad, R"({"cells":[{"u_probs":[0.5,0.6],"m_plus":[0,0],"m_minus":[0,0],"q_plus":[0,0],"q_minus":[0,0],"pi_z":0.5}],"cell_probs":[1]})");
  const auto r = run({"check", "--model", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("/cells/0/u_probs") != std::string::npos);

  const auto csv = path("bad.csv");
  write_text(csv, "l,z,a,y\n0,1,1,0.5\n0,2,1,1\n");
  CHECK(run({"estimate", "--data", csv}).code == 2);

  const auto model = path("m1.json");
  ivregime::save_model(ivtest::m1(), model);
  CHECK(run({"bounds", "--model", model, "--data", csv}).code == 2);
  CHECK(run({"bounds"}).code == 2);
  CHECK(run({"bounds", "--model", model, "--regime", "1,1"}).code == 2);
  CHECK(run({"sweep", "--model", model, "--n", "100", "--reps", "2", "--eps-grid", "0,abc"}).code == 2);
  CHECK(run({"sweep", "--model", model, "--n", "100", "--reps", "2", "--eps-grid", "0.7"}).code == 2);
}

TEST_CASE("numerical failures exit 3 in strict mode") {
  const auto weak_model = path("weak.json");
  ivregime::save_model(
      ivregime::StructuralModel({ivregime::CellSpec{{1.0}, {0.7}, {0.2}, {0.5}, {0.5}, 0.5}}, {1.0}), weak_model);
  auto r = run({"oracle", "--model", weak_model});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["id1"].is_null());
  CHECK(doc["diagnostics"].size() == 2);
  CHECK(run({"oracle", "--model", weak_model, "--strict"}).code == 3);

  // Treatment never depends on the instrument.
  const auto weak = path("weak.csv");
  write_text(weak, "l,z,a,y\n0,1,1,1\n0,1,-1,0\n0,-1,1,1\n0,-1,-1,0\n");
  CHECK(run({"estimate", "--data", weak, "--min-arm-count", "1"}).code == 0);
  CHECK(run({"estimate", "--data", weak, "--min-arm-count", "1", "--strict"}).code == 3);

  const auto one_arm = path("one_arm.csv");
  write_text(one_arm, "l,z,a,y\n0,1,1,1\n0,1,-1,0\n");
  CHECK(run({"estimate", "--data", one_arm, "--strict"}).code == 3);
  CHECK(run({"bounds", "--data", one_arm}).code == 3);

  // Every unit treated under z=+1 but the treated outcome shifts with z: no
  // response-type law reproduces it.
  const auto infeasible = path("infeasible.csv");
  write_text(infeasible, "l,z,a,y\n0,1,1,1\n0,1,1,1\n0,-1,1,0\n0,-1,1,0\n");
  CHECK(run({"bounds", "--data", infeasible, "--strict"}).code == 3);
  r = run({"bounds", "--data", infeasible});
  CHECK(r.code == 0);
  CHECK_FALSE(json::parse(r.out)["diagnostics"].empty());
}

TEST_CASE("documents follow their schemas") {
  const auto model = path("m1.json");
  ivregime::save_model(ivtest::m1(), model);

  auto r = run({"check", "--model", model});
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  REQUIRE(doc["cells"].is_array());
  for (const char* key : {"delta", "cate", "assumption7_cov", "assumption8_var"}) {
    CHECK(doc["cells"][0][key].is_number());
  }
  CHECK(doc["cells"][0]["a_part_a_holds"].is_boolean());
  CHECK(doc["cells"][0]["a_part_b_holds"].is_boolean());

  r = run({"oracle", "--model", model});
  REQUIRE(r.code == 0);
  doc = json::parse(r.out);
  CHECK(is_regime(doc["oracle"]["regime"], 1));
  CHECK(doc["oracle"]["value"].get<double>() == doctest::Approx(0.7));
  CHECK(doc["id1"]["objective"].get<double>() == doctest::Approx(0.8));
  CHECK(doc["id2"]["objective"].get<double>() == doctest::Approx(1.625));

  r = run({"bounds", "--model", model, "--regime", "-1"});
  REQUIRE(r.code == 0);
  doc = json::parse(r.out);
  REQUIRE(doc["cells"].size() == 1);
  CHECK(is_interval(doc["cells"][0]["theta_plus"]));
  CHECK(is_interval(doc["cells"][0]["theta_minus"]));
  CHECK(is_regime(doc["maximin_regime"], 1));
  REQUIRE(doc["regime_values"].is_array());
  for (const auto& rv : doc["regime_values"]) {
    CHECK(rv["label"].is_string());
    CHECK(is_regime(rv["regime"], 1));
    CHECK(is_interval(rv["value"]));
  }
  CHECK(doc["regime_values"].back()["label"] == "query");

  const auto reps = path("reps.csv");
  r = run({"regret", "--model", model, "--n", "2000", "--reps", "4", "--per-rep", reps});
  REQUIRE(r.code == 0);
  doc = json::parse(r.out);
  for (const char* key : {"match_rate", "mean_regret", "median_regret", "q90_regret", "oracle_value"}) {
    CHECK(doc[key].is_number());
  }
  const auto rep_csv = slurp(reps);
  CHECK(rep_csv.rfind("rep,seed,status,regime,regret,matched,maximin_regime,maximin_regret\n", 0) == 0);
  CHECK(line_count(rep_csv) == 5);

  r = run({"sweep", "--model", model, "--n", "2000", "--reps", "2", "--eps-grid", "0,0.1", "--no-maximin"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("eps,cov7,var8,Aa_holds,Ab_holds,match_rate,mean_regret,q90_regret,maximin_regret\n", 0) == 0);
  CHECK(line_count(r.out) == 3);
  CHECK(r.out.find(",NA\n") != std::string::npos);
}

TEST_CASE("outputs do not depend on --threads") {
  const auto model = path("m2.json");
  ivregime::save_model(ivtest::m2(), model);
  const std::vector<std::string> base{"sweep", "--model", model, "--n", "3000", "--reps", "6",
                                      "--eps-grid", "0,0.01", "--direction", "violate_8"};
  auto one = base;
  one.insert(one.end(), {"--threads", "1"});
  auto three = base;
  three.insert(three.end(), {"--threads", "3"});
  const auto a = run(one);
  const auto b = run(three);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
}
