#include "csm/linreg.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

double LinearModel::predict(std::span<const double> row) const {
    if (row.size() != coefficients.size()) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("row has {} values, model expects {}", row.size(), coefficients.size()));
    }
    double y = intercept;
    for (std::size_t i = 0; i < row.size(); ++i) y += coefficients[i] * row[i];
    return y;
}

LinearModel fit_ols(const FeatureMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.row_count());
    const auto p = static_cast<Eigen::Index>(m.column_count());
    if (n <= p + 1) {
        throw Error(ErrorKind::insufficient_data, fmt::format("OLS needs n > p + 1 (n = {}, p = {})", n, p));
    }
    Eigen::MatrixXd x(n, p + 1);
    x.col(0).setOnes();
    x.rightCols(p) = m.rows;

    // Column scaling keeps the rank test meaningful when predictors differ by orders of magnitude.
    Eigen::VectorXd scale = x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
        if (scale(j) == 0.0) scale(j) = 1.0;
    }
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) {
        std::string dependent;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p + 1; ++k) {
            const auto j = perm(k);
            if (!dependent.empty()) dependent += ", ";
            dependent += j == 0 ? std::string("intercept") : m.columns[static_cast<std::size_t>(j - 1)].name;
        }
        throw Error(ErrorKind::singular_design,
                    fmt::format("design matrix is rank deficient ({} of {}); dependent columns: {}", qr.rank(), p + 1,
                                dependent));
    }
    const Eigen::VectorXd beta_s = qr.solve(m.target);
    const Eigen::VectorXd beta = beta_s.cwiseQuotient(scale);

    const Eigen::VectorXd resid = m.target - x * beta;
    const double ss_res = resid.squaredNorm();
    const double mean = m.target.mean();
    const double ss_tot = (m.target.array() - mean).square().sum();

    // (X'X)^-1 = D^-1 P R^-1 R^-T P' D^-1 for Xs = X D^-1 = Q R P'.
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p + 1, p + 1).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    const Eigen::MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
    Eigen::MatrixXd xtx_inv_s(p + 1, p + 1);
    const auto perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < p + 1; ++i) {
        for (Eigen::Index j = 0; j < p + 1; ++j) {
            xtx_inv_s(perm(i), perm(j)) = xtx_inv_perm(i, j);
        }
    }
    const double sigma2 = ss_res / static_cast<double>(n - p - 1);

    LinearModel model;
    model.n = static_cast<std::size_t>(n);
    model.p = static_cast<std::size_t>(p);
    model.intercept = beta(0);
    model.intercept_se = std::sqrt(sigma2 * xtx_inv_s(0, 0)) / scale(0);
    model.names = m.column_names();
    for (Eigen::Index j = 1; j <= p; ++j) {
        model.coefficients.push_back(beta(j));
        model.standard_errors.push_back(std::sqrt(std::max(0.0, sigma2 * xtx_inv_s(j, j))) / scale(j));
    }
    if (ss_tot == 0.0) {
        model.r_squared = 0.0;
        model.constant_target = true;
    } else {
        model.r_squared = 1.0 - ss_res / ss_tot;
    }
    return model;
}

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorKind::invalid_argument, fmt::format("quantile {} outside (0, 1)", q));
    }
    return boost::math::quantile(boost::math::normal_distribution<double>{}, q);
}

std::vector<CoefficientBound> coefficient_bounds(const LinearModel& model, double lower_q, double upper_q) {
    const double z_lo = normal_quantile(lower_q);
    const double z_hi = normal_quantile(upper_q);
    std::vector<CoefficientBound> out;
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
        CoefficientBound b;
        b.name = model.names.at(i);
        b.estimate = model.coefficients[i];
        const double se = model.standard_errors.at(i);
        b.lower = b.estimate + z_lo * se;
        b.upper = b.estimate + z_hi * se;
        if (b.lower > b.upper) std::swap(b.lower, b.upper);
        b.significant = !(b.lower <= 0.0 && 0.0 <= b.upper);
        out.push_back(std::move(b));
    }
    return out;
}

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.cols()) != model.coefficients.size()) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("rows have {} columns, model expects {}", rows.cols(), model.coefficients.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> b(model.coefficients.data(),
                                              static_cast<Eigen::Index>(model.coefficients.size()));
    return (rows * b).array() + model.intercept;
}

}  // namespace csm
