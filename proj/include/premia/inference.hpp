#pragma once

#include "premia/four_split.hpp"
#include "premia/panel_data.hpp"
#include "premia/two_pass.hpp"

#include <vector>

namespace premia {

struct LongRunVariance {
    MatrixXd omega;
    Index lags = 0;
};

/// Bartlett-kernel Newey-West estimate on demeaned rows of a T x k matrix.
LongRunVariance newey_west(const MatrixXd& series, Index lags = 4);
LongRunVariance newey_west(const FactorPanel& factors, Index lags = 4);

struct TestResult {
    double statistic = 0.0;
    Index dof = 0;
    double p_value = 1.0;
    bool decision_at_5pct = false;
    /// Set when the weighting matrix had negative eigenvalues.
    bool weight_not_psd = false;
};

double normal_two_sided_p(double z);
double chi2_upper_p(double statistic, Index dof);

/// Studentised deviation of one component, two-sided standard normal p-value.
TestResult t_test(const EstimateResult& result, Index component, double null_value);
TestResult t_test(const FourSplitResult& result, Index component, double null_value);

/// W = d' V_sub^+ d on the restricted components, chi-square with dof equal
/// to the effective rank of V_sub. An empty restriction means all components.
TestResult wald_test(const VectorXd& lambda_hat, const MatrixXd& covariance, const std::vector<Index>& restriction,
                     const VectorXd& null_values);

/// Compares premia estimates of tradable factors with the factor means,
/// weighted by the pseudo-inverse of (covariance - factor_mean_covariance).
TestResult specification_test(const EstimateResult& result, const VectorXd& factor_means);
TestResult specification_test(const FourSplitResult& result, const VectorXd& factor_means);

}  // namespace premia
