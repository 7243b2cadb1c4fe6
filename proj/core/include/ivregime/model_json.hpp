#pragma once

#include <filesystem>

#include <json.hpp>

#include "ivregime/model.hpp"

namespace ivregime {

/// Reads {"cells":[{u_probs,m_plus,m_minus,q_plus,q_minus,pi_z}], "cell_probs":[...]}.
/// Throws ValidationError whose path is a JSON pointer to the offending value.
StructuralModel model_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const StructuralModel& model);

StructuralModel load_model(const std::filesystem::path& path);
void save_model(const StructuralModel& model, const std::filesystem::path& path);

nlohmann::json to_json(const AssumptionReport& report);

}  // namespace ivregime
