#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csm/features.hpp"

namespace csm {

/// Ordinary least squares fit with an intercept.
struct LinearModel {
    double intercept = 0.0;
    double intercept_se = 0.0;
    std::vector<std::string> names;
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    double r_squared = 0.0;
    /// Set when the target was constant (R^2 reported as 0).
    bool constant_target = false;
    std::size_t n = 0;
    std::size_t p = 0;

    double predict(std::span<const double> row) const;

    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Least squares via Householder QR on [1 | X]. Standard errors from
/// sigma^2 (X'X)^-1 with sigma^2 = SS_res / (n - p - 1).
/// Requires n > p + 1 and full column rank.
LinearModel fit_ols(const FeatureMatrix& m);

struct CoefficientBound {
    std::string name;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool significant = false;
};

/// Normal-approximation bounds b + z(q) * se for the two quantiles.
std::vector<CoefficientBound> coefficient_bounds(const LinearModel& model, double lower_q = 0.05,
                                                 double upper_q = 0.95);

/// Standard normal quantile.
double normal_quantile(double q);

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& rows);

}  // namespace csm
