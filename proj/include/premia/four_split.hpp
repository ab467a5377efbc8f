#pragma once

#include "premia/panel_data.hpp"
#include "premia/two_pass.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace premia {

enum class SplitLayout { contiguous, interleaved };

struct SplitScheme {
    std::array<std::vector<Index>, 4> subsets;
    Index tau = 0;
    SplitLayout layout = SplitLayout::contiguous;
};

/// Four disjoint subsets of size floor(T/4). Contiguous blocks by default;
/// interleaved assigns period t to subset t mod 4. Trailing periods beyond
/// 4*tau are left out of every subset.
SplitScheme make_split_scheme(Index T, SplitLayout layout = SplitLayout::contiguous);

std::array<BetaSet, 4> subsample_betas(const ReturnsPanel& returns, const FactorPanel& factors,
                                       const SplitScheme& scheme);

/// Rotation j (1-based) uses splits (j, j+1) for regressors and (j+2, j+3)
/// for instruments, all mod 4 and reported 1-based.
struct IvRegressionSpec {
    int j = 1;
    std::array<int, 2> regressor_splits{1, 2};
    std::array<int, 2> instrument_splits{3, 4};
    MatrixXd A;  // k_v x k_F
};

IvRegressionSpec make_iv_spec(int j, const MatrixXd& A);

/// (I_kv | 0) of size k_v x k_F. Throws an identification error if k_v > k_F.
MatrixXd default_proxy_matrix(Index k_v, Index k_F);

struct IvDesign {
    MatrixXd X;  // N x (k_F + k_v)
    MatrixXd Z;  // N x 2 k_F
};

IvDesign build_iv_design(const std::array<MatrixXd, 4>& betas, const IvRegressionSpec& spec);
IvDesign build_iv_design(const std::array<BetaSet, 4>& betas, const IvRegressionSpec& spec);

struct RotationFit {
    VectorXd coefficients;  // k
    VectorXd residuals;     // N
    MatrixXd z_tilde;       // N x k, row i = X'Z(Z'Z)^{-1} z_i
    MatrixXd G;             // X'P_Z X / N
};

RotationFit per_rotation_tsls(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z);

struct FourSplitOptions {
    Index k_v = 1;
    /// Optional k_v x k_F proxy matrix; empty means the default (I | 0).
    MatrixXd A;
    SplitLayout layout = SplitLayout::contiguous;
};

struct FourSplitResult {
    std::array<VectorXd, 4> lambda_per_rotation;
    VectorXd lambda;
    MatrixXd sigma_iv;
    MatrixXd covariance;
    MatrixXd factor_mean_covariance;
    std::array<VectorXd, 4> a_hat_per_rotation;
    std::vector<std::string> names;
    std::map<std::string, double> diagnostics;

    EstimateResult as_estimate() const;
};

FourSplitResult four_split_estimate(const ReturnsPanel& returns, const FactorPanel& factors, const MatrixXd& lrv,
                                    const FourSplitOptions& options = {});

/// Second stage only: split betas are supplied directly.
FourSplitResult four_split_from_betas(const std::array<MatrixXd, 4>& betas, const VectorXd& mean_returns,
                                      const MatrixXd& lrv, Index T, const FourSplitOptions& options = {});

}  // namespace premia
