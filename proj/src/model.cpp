#include "csm/model.hpp"

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json node_to_json(const RegressionTree& tree, int id) {
    const auto& n = tree.nodes()[static_cast<std::size_t>(id)];
    if (n.is_leaf()) return nlohmann::json{{"leaf", n.value}};
    return nlohmann::json{{"feature", n.feature},
                          {"threshold", n.threshold},
                          {"left", node_to_json(tree, n.left)},
                          {"right", node_to_json(tree, n.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes, std::size_t columns) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("leaf")) {
        nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= columns) {
        throw Error(ErrorKind::parse, fmt::format("tree node references column {} of {}", feature, columns));
    }
    const double threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), nodes, columns);
    const int right = node_from_json(j.at("right"), nodes, columns);
    auto& n = nodes[static_cast<std::size_t>(id)];
    n.feature = feature;
    n.threshold = threshold;
    n.left = left;
    n.right = right;
    return id;
}

void expect_format(const nlohmann::json& j, std::string_view format) {
    const auto f = j.value("format", std::string{});
    if (f != format) {
        throw Error(ErrorKind::parse, fmt::format("expected artifact format '{}', got '{}'", format, f));
    }
    const int v = j.value("version", 0);
    if (v != kFormatVersion) {
        throw Error(ErrorKind::parse, fmt::format("unsupported {} version {}", format, v));
    }
}

}  // namespace

double predict(const Model& model, std::span<const double> row) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                return m.predict(row);
            } else {
                return predict_ensemble(m, row);
            }
        },
        model);
}

const std::vector<std::string>& model_columns(const Model& model) {
    return std::visit(
        [](const auto& m) -> const std::vector<std::string>& {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearModel>) {
                return m.names;
            } else {
                return m.columns;
            }
        },
        model);
}

std::string_view model_kind(const Model& model) {
    return std::holds_alternative<LinearModel>(model) ? "mlr" : "gbrt";
}

nlohmann::json to_json(const LinearModel& m) {
    return nlohmann::json{{"format", "csm.linear"},
                          {"version", kFormatVersion},
                          {"intercept", m.intercept},
                          {"intercept_se", m.intercept_se},
                          {"names", m.names},
                          {"coefficients", m.coefficients},
                          {"standard_errors", m.standard_errors},
                          {"r_squared", m.r_squared},
                          {"constant_target", m.constant_target},
                          {"n", m.n},
                          {"p", m.p}};
}

nlohmann::json to_json(const TreeEnsemble& e) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : e.trees) trees.push_back(node_to_json(t, 0));
    return nlohmann::json{{"format", "csm.gbrt"},
                          {"version", kFormatVersion},
                          {"base_score", e.base_score},
                          {"learning_rate", e.learning_rate},
                          {"columns", e.columns},
                          {"split_counts", e.split_counts},
                          {"trees", trees}};
}

nlohmann::json to_json(const Model& model) {
    return std::visit([](const auto& m) { return to_json(m); }, model);
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
    expect_format(j, "csm.linear");
    LinearModel m;
    m.intercept = j.at("intercept").get<double>();
    m.intercept_se = j.value("intercept_se", 0.0);
    m.names = j.at("names").get<std::vector<std::string>>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.standard_errors = j.at("standard_errors").get<std::vector<double>>();
    m.r_squared = j.at("r_squared").get<double>();
    m.constant_target = j.value("constant_target", false);
    m.n = j.at("n").get<std::size_t>();
    m.p = j.at("p").get<std::size_t>();
    if (m.names.size() != m.coefficients.size() || m.standard_errors.size() != m.coefficients.size()) {
        throw Error(ErrorKind::parse, "linear model arrays differ in length");
    }
    return m;
}

TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
    expect_format(j, "csm.gbrt");
    TreeEnsemble e;
    e.base_score = j.at("base_score").get<double>();
    e.learning_rate = j.at("learning_rate").get<double>();
    e.columns = j.at("columns").get<std::vector<std::string>>();
    e.split_counts = j.at("split_counts").get<std::vector<std::size_t>>();
    for (const auto& tj : j.at("trees")) {
        std::vector<TreeNode> nodes;
        node_from_json(tj, nodes, e.columns.size());
        e.trees.emplace_back(std::move(nodes));
    }
    return e;
}

Model model_from_json(const nlohmann::json& j) {
    const auto f = j.value("format", std::string{});
    if (f == "csm.linear") return linear_model_from_json(j);
    if (f == "csm.gbrt") return ensemble_from_json(j);
    throw Error(ErrorKind::parse, fmt::format("unknown model format '{}'", f));
}

}  // namespace csm
