#include "premia/two_pass.hpp"

#include "premia/errors.hpp"
#include "premia/numkernel.hpp"

#include <cmath>

namespace premia {

const char* to_string(Method m) noexcept {
    return m == Method::two_pass ? "two-pass" : "four-split";
}

Method parse_method(const std::string& name) {
    if (name == "two-pass" || name == "two_pass" || name == "tp") return Method::two_pass;
    if (name == "four-split" || name == "four_split" || name == "4s") return Method::four_split;
    throw Error(ErrorKind::config, "unknown method '" + name + "'");
}

MatrixXd factor_covariance(const FactorPanel& factors) {
    const MatrixXd centered = factors.values.rowwise() - factors.values.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(factors.n_periods());
}

BetaSet first_pass_betas(const ReturnsPanel& returns, const FactorPanel& factors, const std::vector<Index>& window) {
    if (returns.n_periods() != factors.n_periods()) {
        throw Error(ErrorKind::alignment, "first pass: returns and factors have different period counts");
    }
    BetaSet out;
    if (window.empty()) {
        out.window.resize(static_cast<std::size_t>(returns.n_periods()));
        for (Index t = 0; t < returns.n_periods(); ++t) out.window[static_cast<std::size_t>(t)] = t;
    } else {
        out.window = window;
    }
    const auto w = static_cast<Index>(out.window.size());
    const Index kF = factors.n_factors();
    if (w <= kF + 1) {
        throw Error(ErrorKind::insufficient_data, "first pass: window of " + std::to_string(w) +
                                                      " periods is too short for " + std::to_string(kF) + " factors");
    }
    MatrixXd Y(w, returns.n_assets());
    MatrixXd F(w, kF);
    for (Index s = 0; s < w; ++s) {
        const Index t = out.window[static_cast<std::size_t>(s)];
        if (t < 0 || t >= returns.n_periods()) throw Error(ErrorKind::dimension, "first pass: window index out of range");
        Y.row(s) = returns.values.col(t).transpose();
        F.row(s) = factors.values.row(t);
    }
    auto fit = ols_multi(Y, F, true);
    out.betas = fit.coefficients.transpose();
    out.intercepts = fit.intercepts;
    out.residuals = fit.residuals.transpose();
    return out;
}

void finalize_covariance(EstimateResult& result) {
    result.covariance = 0.5 * (result.covariance + result.covariance.transpose());
    result.std_errors = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

EstimateResult second_pass_estimate(const MatrixXd& betas, const VectorXd& mean_returns, const MatrixXd& lrv,
                                    Index T, const TwoPassOptions& options, const MatrixXd& factor_cov) {
    const Index N = betas.rows();
    const Index kF = betas.cols();
    if (mean_returns.size() != N) throw Error(ErrorKind::dimension, "second pass: beta and mean-return sizes differ");
    if (lrv.rows() != kF || lrv.cols() != kF) throw Error(ErrorKind::dimension, "second pass: lrv has wrong shape");

    MatrixXd X = betas;
    if (options.zero_beta_intercept) {
        X.resize(N, kF + 1);
        X.col(0).setOnes();
        X.rightCols(kF) = betas;
    }
    const Index k = X.cols();
    OlsFit fit;
    try {
        fit = ols(mean_returns, X, false);
    } catch (const SingularError& e) {
        throw SingularError("second pass: beta'beta is singular", e.rcond());
    }

    const double n = static_cast<double>(N);
    const MatrixXd G = X.transpose() * X / n;
    const MatrixXd S0 = X.transpose() * fit.residuals.array().square().matrix().asDiagonal() * X / n;
    const MatrixXd Ginv = G.ldlt().solve(MatrixXd::Identity(k, k));
    MatrixXd sandwich = Ginv * S0 * Ginv / n;

    EstimateResult result;
    result.method = Method::two_pass;
    const Index off = options.zero_beta_intercept ? 1 : 0;
    result.lambda = fit.coefficients.tail(kF);
    sandwich = sandwich.bottomRightCorner(kF, kF).eval();

    if (options.shanken) {
        if (factor_cov.rows() != kF) throw Error(ErrorKind::dimension, "second pass: Shanken needs the factor covariance");
        const double c = 1.0 + result.lambda.dot(factor_cov.ldlt().solve(result.lambda));
        sandwich *= c;
        result.diagnostics["shanken_multiplier"] = c;
    }
    result.factor_mean_covariance = lrv / static_cast<double>(T);
    result.covariance = sandwich + result.factor_mean_covariance;
    finalize_covariance(result);

    if (off == 1) result.diagnostics["zero_beta_rate"] = fit.coefficients(0);
    result.diagnostics["rcond_beta"] = reciprocal_condition(G);
    result.diagnostics["N"] = n;
    result.diagnostics["T"] = static_cast<double>(T);
    return result;
}

EstimateResult two_pass_estimate(const ReturnsPanel& returns, const FactorPanel& factors, const MatrixXd& lrv,
                                 const TwoPassOptions& options) {
    const BetaSet bs = first_pass_betas(returns, factors);
    const VectorXd rbar = returns.values.rowwise().mean();
    MatrixXd fcov;
    if (options.shanken) fcov = factor_covariance(factors);
    auto result = second_pass_estimate(bs.betas, rbar, lrv, returns.n_periods(), options, fcov);
    result.names = factors.names;
    result.diagnostics["cross_section_r2"] = cross_section_r2(result, bs, rbar);
    return result;
}

double cross_section_r2(const EstimateResult& result, const BetaSet& betas, const VectorXd& mean_returns) {
    VectorXd fitted = betas.betas * result.lambda;
    if (auto it = result.diagnostics.find("zero_beta_rate"); it != result.diagnostics.end()) {
        fitted.array() += it->second;
    }
    const double sst = mean_returns.squaredNorm();
    if (sst == 0.0) return 0.0;
    return 1.0 - (mean_returns - fitted).squaredNorm() / sst;
}

}  // namespace premia
