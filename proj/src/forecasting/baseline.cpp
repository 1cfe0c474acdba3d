#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "chaoslab/error.hpp"
#include "chaoslab/forecasting.hpp"
#include "protocol.hpp"

namespace chaoslab::forecast {

ArModel fit_ar(std::span<const double> values, std::size_t order) {
    if (order < 1) throw DomainError("AR order must be at least 1");
    if (values.size() < order + 2) throw DomainError("too few values to fit AR model");

    // rows: [1, x_t, x_{t-1}, ..., x_{t-order+1}] -> x_{t+1}
    const std::size_t rows = values.size() - order;
    const Eigen::Index cols = static_cast<Eigen::Index>(order + 1);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), cols);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + order - 1;
        const auto ri = static_cast<Eigen::Index>(r);
        X(ri, 0) = 1.0;
        for (std::size_t j = 0; j < order; ++j)
            X(ri, static_cast<Eigen::Index>(j + 1)) = values[t - j];
        y(ri) = values[t + 1];
    }

    Eigen::MatrixXd normal = X.transpose() * X;
    Eigen::VectorXd rhs = X.transpose() * y;

    ArModel model;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    const auto d = ldlt.vectorD().cwiseAbs();
    const bool singular = ldlt.info() != Eigen::Success || d.maxCoeff() == 0.0 ||
                          d.minCoeff() <= 1e-12 * d.maxCoeff();
    if (singular) {
        const double ridge = 1e-8 * std::max(normal.trace(), 1e-300);
        normal.diagonal().array() += ridge;
        ldlt.compute(normal);
        model.ridge = true;
    }
    Eigen::VectorXd beta = ldlt.solve(rhs);
    model.intercept = beta(0);
    model.coefficients.resize(order);
    for (std::size_t j = 0; j < order; ++j)
        model.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
    return model;
}

RhoCurve ar_rho_curve(const Series& series, std::size_t order, Protocol protocol,
                      std::size_t p_max) {
    series.validate();
    if (order < 1) throw DomainError("AR order must be at least 1");
    if (p_max < 1) throw DomainError("p_max must be at least 1");
    const auto& x = series.values;
    if (x.size() < 10 * order) throw DomainError("series needs at least 10*order values");

    const auto plan = detail::plan_for(protocol, x.size());
    const std::span<const double> segment(x.data() + plan.library_begin,
                                          plan.library_end - plan.library_begin);
    const ArModel model = fit_ar(segment, order);
    const std::size_t first = detail::first_predictee(plan, order, 1);

    RhoCurve curve;
    std::vector<double> history(order);
    for (std::size_t p = 1; p <= p_max; ++p) {
        std::vector<double> predicted, observed;
        for (std::size_t t = first; t + p < plan.predictee_end; ++t) {
            // history[0] is the most recent value
            for (std::size_t j = 0; j < order; ++j) history[j] = x[t - j];
            double next = 0.0;
            for (std::size_t step = 0; step < p; ++step) {
                next = model.intercept;
                for (std::size_t j = 0; j < order; ++j) next += model.coefficients[j] * history[j];
                for (std::size_t j = order - 1; j > 0; --j) history[j] = history[j - 1];
                history[0] = next;
            }
            predicted.push_back(next);
            observed.push_back(x[t + p]);
        }
        if (predicted.size() < kMinPredictions)
            throw DomainError("series too short: " + std::to_string(predicted.size()) +
                              " predictions at T_p=" + std::to_string(p));
        RhoPoint pt{p, std::numeric_limits<double>::quiet_NaN(), predicted.size(), false};
        if (auto r = pearson(predicted, observed)) {
            pt.rho = *r;
            pt.defined = true;
        }
        curve.points.push_back(pt);
    }
    curve.decay_rate = log_rho_slope(curve.points);
    return curve;
}

}  // namespace chaoslab::forecast
