#pragma once

#include "premia/panel_data.hpp"

#include <map>
#include <string>
#include <vector>

namespace premia {

enum class Method { two_pass, four_split };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);

/// First-pass regression output over a window of time indexes.
struct BetaSet {
    MatrixXd betas;              // N x k_F
    VectorXd intercepts;         // N
    MatrixXd residuals;          // N x |window|
    std::vector<Index> window;   // time indexes used, increasing
};

struct EstimateResult {
    VectorXd lambda;
    MatrixXd covariance;
    VectorXd std_errors;
    /// (1/T) times the long-run factor variance; the part of the covariance
    /// due to sampling error in the factor means.
    MatrixXd factor_mean_covariance;
    Method method = Method::two_pass;
    std::vector<std::string> names;
    std::map<std::string, double> diagnostics;
};

/// Time-series OLS of each asset on a constant and the factors over the
/// window. An empty window means the full sample.
BetaSet first_pass_betas(const ReturnsPanel& returns, const FactorPanel& factors,
                         const std::vector<Index>& window = {});

struct TwoPassOptions {
    /// Multiplies the cross-sectional sandwich by (1 + lambda' Sigma_F^{-1} lambda).
    bool shanken = false;
    /// Adds a zero-beta rate column to the second pass.
    bool zero_beta_intercept = false;
};

/// Cross-sectional regression of mean returns on betas (no intercept by
/// default) with the sandwich + (1/T) lrv covariance. factor_cov is only
/// needed for the Shanken variant.
EstimateResult second_pass_estimate(const MatrixXd& betas, const VectorXd& mean_returns, const MatrixXd& lrv,
                                    Index T, const TwoPassOptions& options = {},
                                    const MatrixXd& factor_cov = MatrixXd());

EstimateResult two_pass_estimate(const ReturnsPanel& returns, const FactorPanel& factors, const MatrixXd& lrv,
                                 const TwoPassOptions& options = {});

/// 1 - SSR/SST of the second pass, SST = sum of squared mean returns.
double cross_section_r2(const EstimateResult& result, const BetaSet& betas, const VectorXd& mean_returns);

/// Sample covariance of factor rows with divisor T.
MatrixXd factor_covariance(const FactorPanel& factors);

/// Builds the symmetric covariance, clamps round-off and fills std errors.
void finalize_covariance(EstimateResult& result);

}  // namespace premia
