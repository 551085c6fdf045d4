#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "csm/boosting.hpp"
#include "csm/linreg.hpp"

namespace csm {

/// Any fitted one-step regressor.
using Model = std::variant<LinearModel, TreeEnsemble>;

double predict(const Model& model, std::span<const double> row);
const std::vector<std::string>& model_columns(const Model& model);
std::string_view model_kind(const Model& model);

nlohmann::json to_json(const LinearModel& model);
nlohmann::json to_json(const TreeEnsemble& ensemble);
nlohmann::json to_json(const Model& model);

LinearModel linear_model_from_json(const nlohmann::json& j);
TreeEnsemble ensemble_from_json(const nlohmann::json& j);
Model model_from_json(const nlohmann::json& j);

}  // namespace csm
