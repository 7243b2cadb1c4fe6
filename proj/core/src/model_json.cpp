#include "ivregime/model_json.hpp"

#include <fstream>
#include <string>

#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

using nlohmann::json;

const json& require_field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path + "/" + key, "missing field");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  return v.get<double>();
}

std::vector<double> as_number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "/" + std::to_string(i)));
  return out;
}

}  // namespace

StructuralModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("", "model document must be a JSON object");
  const json& cells_json = require_field(doc, "cells", "");
  if (!cells_json.is_array()) throw ValidationError("/cells", "expected an array");
  std::vector<CellSpec> cells;
  cells.reserve(cells_json.size());
  for (std::size_t l = 0; l < cells_json.size(); ++l) {
    const std::string path = "/cells/" + std::to_string(l);
    const json& c = cells_json[l];
    if (!c.is_object()) throw ValidationError(path, "expected an object");
    CellSpec spec;
    spec.u_probs = as_number_array(require_field(c, "u_probs", path), path + "/u_probs");
    spec.m_plus = as_number_array(require_field(c, "m_plus", path), path + "/m_plus");
    spec.m_minus = as_number_array(require_field(c, "m_minus", path), path + "/m_minus");
    spec.q_plus = as_number_array(require_field(c, "q_plus", path), path + "/q_plus");
    spec.q_minus = as_number_array(require_field(c, "q_minus", path), path + "/q_minus");
    spec.pi_z = as_number(require_field(c, "pi_z", path), path + "/pi_z");
    cells.push_back(std::move(spec));
  }
  auto probs = as_number_array(require_field(doc, "cell_probs", ""), "/cell_probs");
  return StructuralModel(std::move(cells), std::move(probs));
}

json to_json(const StructuralModel& model) {
  json cells = json::array();
  for (const CellSpec& c : model.cells()) {
    cells.push_back({{"u_probs", c.u_probs},
                     {"m_plus", c.m_plus},
                     {"m_minus", c.m_minus},
                     {"q_plus", c.q_plus},
                     {"q_minus", c.q_minus},
                     {"pi_z", c.pi_z}});
  }
  return {{"cells", std::move(cells)}, {"cell_probs", model.cell_probs()}};
}

StructuralModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open model file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

void save_model(const StructuralModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError(path.string(), "cannot open for writing");
  out << to_json(model).dump(2) << '\n';
}

json to_json(const AssumptionReport& report) {
  json cells = json::array();
  for (std::size_t l = 0; l < report.cells.size(); ++l) {
    const CellAssumptions& c = report.cells[l];
    cells.push_back({{"cell", l},
                     {"delta", c.delta},
                     {"cate", c.cate},
                     {"a_part_a_holds", c.a_part_a_holds},
                     {"a_part_b_holds", c.a_part_b_holds},
                     {"assumption7_cov", c.assumption7_cov},
                     {"assumption8_var", c.assumption8_var}});
  }
  return {{"cells", std::move(cells)}, {"assumption_a_holds", report.assumption_a_holds()}};
}

}  // namespace ivregime
