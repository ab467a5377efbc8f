#include "premia/inference.hpp"

#include "premia/errors.hpp"
#include "premia/numkernel.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace premia {

LongRunVariance newey_west(const MatrixXd& series, Index lags) {
    const Index T = series.rows();
    if (lags < 0) throw Error(ErrorKind::bandwidth, "Newey-West lags must be non-negative");
    if (lags >= T) {
        throw Error(ErrorKind::bandwidth, "Newey-West lags (" + std::to_string(lags) + ") must be below T (" +
                                              std::to_string(T) + ")");
    }
    const MatrixXd X = series.rowwise() - series.colwise().mean();
    const double n = static_cast<double>(T);
    MatrixXd omega = X.transpose() * X / n;
    for (Index l = 1; l <= lags; ++l) {
        const MatrixXd gamma = X.bottomRows(T - l).transpose() * X.topRows(T - l) / n;
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(lags + 1);
        omega += w * (gamma + gamma.transpose());
    }
    return {0.5 * (omega + omega.transpose()), lags};
}

LongRunVariance newey_west(const FactorPanel& factors, Index lags) { return newey_west(factors.values, lags); }

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double chi2_upper_p(double statistic, Index dof) {
    if (dof <= 0) return 1.0;
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic);
}

TestResult t_test(const EstimateResult& result, Index component, double null_value) {
    if (component < 0 || component >= result.lambda.size()) throw Error(ErrorKind::dimension, "t test: bad component");
    const double se = result.std_errors(component);
    if (!(se > 0.0)) throw Error(ErrorKind::degenerate_variance, "t test: standard error is not positive");
    TestResult r;
    r.statistic = (result.lambda(component) - null_value) / se;
    r.dof = 1;
    r.p_value = normal_two_sided_p(r.statistic);
    r.decision_at_5pct = r.p_value < 0.05;
    return r;
}

TestResult t_test(const FourSplitResult& result, Index component, double null_value) {
    return t_test(result.as_estimate(), component, null_value);
}

TestResult wald_test(const VectorXd& lambda_hat, const MatrixXd& covariance, const std::vector<Index>& restriction,
                     const VectorXd& null_values) {
    std::vector<Index> idx = restriction;
    if (idx.empty()) {
        for (Index c = 0; c < lambda_hat.size(); ++c) idx.push_back(c);
    }
    const auto q = static_cast<Index>(idx.size());
    if (null_values.size() != q) throw Error(ErrorKind::dimension, "wald test: null values do not match restriction");
    VectorXd d(q);
    MatrixXd V(q, q);
    for (Index a = 0; a < q; ++a) {
        const Index ia = idx[static_cast<std::size_t>(a)];
        if (ia < 0 || ia >= lambda_hat.size()) throw Error(ErrorKind::dimension, "wald test: bad component");
        d(a) = lambda_hat(ia) - null_values(a);
        for (Index b = 0; b < q; ++b) V(a, b) = covariance(ia, idx[static_cast<std::size_t>(b)]);
    }
    V = 0.5 * (V + V.transpose());
    const auto pinv = pinv_sym(V);
    TestResult r;
    r.statistic = d.dot(pinv.matrix * d);
    r.dof = pinv.rank;
    r.p_value = chi2_upper_p(r.statistic, r.dof);
    r.decision_at_5pct = r.p_value < 0.05;
    r.weight_not_psd = min_eigenvalue(V) < -1e-10 * std::max(1e-300, V.trace());
    return r;
}

TestResult specification_test(const EstimateResult& result, const VectorXd& factor_means) {
    if (factor_means.size() != result.lambda.size()) {
        throw Error(ErrorKind::dimension, "specification test: factor means do not match premia");
    }
    const MatrixXd weight = result.covariance - result.factor_mean_covariance;
    return wald_test(result.lambda, weight, {}, factor_means);
}

TestResult specification_test(const FourSplitResult& result, const VectorXd& factor_means) {
    if (factor_means.size() != result.lambda.size()) {
        throw Error(ErrorKind::dimension, "specification test: factor means do not match premia");
    }
    return wald_test(result.lambda, result.sigma_iv, {}, factor_means);
}

}  // namespace premia
