#include "premia/four_split.hpp"

#include "premia/errors.hpp"
#include "premia/numkernel.hpp"

#include <string>

namespace premia {

SplitScheme make_split_scheme(Index T, SplitLayout layout) {
    if (T < 8) {
        throw Error(ErrorKind::insufficient_data,
                    "four splits need at least 8 periods, got " + std::to_string(T));
    }
    SplitScheme scheme;
    scheme.tau = T / 4;
    scheme.layout = layout;
    for (std::size_t j = 0; j < 4; ++j) {
        auto& s = scheme.subsets[j];
        s.resize(static_cast<std::size_t>(scheme.tau));
        for (Index m = 0; m < scheme.tau; ++m) {
            const Index jj = static_cast<Index>(j);
            s[static_cast<std::size_t>(m)] = layout == SplitLayout::contiguous ? jj * scheme.tau + m : 4 * m + jj;
        }
    }
    return scheme;
}

std::array<BetaSet, 4> subsample_betas(const ReturnsPanel& returns, const FactorPanel& factors,
                                       const SplitScheme& scheme) {
    std::array<BetaSet, 4> out;
    for (std::size_t j = 0; j < 4; ++j) {
        try {
            out[j] = first_pass_betas(returns, factors, scheme.subsets[j]);
        } catch (const SingularError& e) {
            throw SingularError("split " + std::to_string(j + 1) + ": factor covariance is singular", e.rcond());
        } catch (const Error& e) {
            throw Error(e.kind(), "split " + std::to_string(j + 1) + ": " + e.what());
        }
    }
    return out;
}

MatrixXd default_proxy_matrix(Index k_v, Index k_F) {
    if (k_v < 0) throw Error(ErrorKind::parameter, "k_v must be non-negative");
    if (k_v > k_F) {
        throw Error(ErrorKind::identification, "k_v = " + std::to_string(k_v) + " exceeds the number of factors (" +
                                                   std::to_string(k_F) + ")");
    }
    MatrixXd A = MatrixXd::Zero(k_v, k_F);
    A.leftCols(k_v).setIdentity();
    return A;
}

IvRegressionSpec make_iv_spec(int j, const MatrixXd& A) {
    if (j < 1 || j > 4) throw Error(ErrorKind::parameter, "rotation index must be in 1..4");
    IvRegressionSpec spec;
    spec.j = j;
    auto wrap = [](int x) { return (x - 1) % 4 + 1; };
    spec.regressor_splits = {wrap(j), wrap(j + 1)};
    spec.instrument_splits = {wrap(j + 2), wrap(j + 3)};
    spec.A = A;
    return spec;
}

IvDesign build_iv_design(const std::array<MatrixXd, 4>& betas, const IvRegressionSpec& spec) {
    const MatrixXd& b1 = betas[static_cast<std::size_t>(spec.regressor_splits[0] - 1)];
    const MatrixXd& b2 = betas[static_cast<std::size_t>(spec.regressor_splits[1] - 1)];
    const MatrixXd& b3 = betas[static_cast<std::size_t>(spec.instrument_splits[0] - 1)];
    const MatrixXd& b4 = betas[static_cast<std::size_t>(spec.instrument_splits[1] - 1)];
    const Index N = b1.rows();
    const Index kF = b1.cols();
    const Index kv = spec.A.rows();
    if (kv > kF) {
        throw Error(ErrorKind::identification, "k_v = " + std::to_string(kv) + " exceeds the number of factors (" +
                                                   std::to_string(kF) + ")");
    }
    if (kv > 0 && spec.A.cols() != kF) throw Error(ErrorKind::dimension, "proxy matrix A must have k_F columns");

    IvDesign d;
    d.X.resize(N, kF + kv);
    d.X.leftCols(kF) = b1;
    if (kv > 0) d.X.rightCols(kv) = (b1 - b2) * spec.A.transpose();
    d.Z.resize(N, 2 * kF);
    d.Z.leftCols(kF) = b3;
    d.Z.rightCols(kF) = b3 - b4;
    return d;
}

IvDesign build_iv_design(const std::array<BetaSet, 4>& betas, const IvRegressionSpec& spec) {
    return build_iv_design(std::array<MatrixXd, 4>{betas[0].betas, betas[1].betas, betas[2].betas, betas[3].betas},
                           spec);
}

RotationFit per_rotation_tsls(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z) {
    // P_Z is the projection onto the column space of Z. When instrument
    // columns are exactly dependent (identical splits make beta3 - beta4 = 0)
    // an orthonormal basis of that space stands in for Z.
    Eigen::ColPivHouseholderQR<MatrixXd> qrz(Z);
    qrz.setThreshold(1e-10);
    const Index rank = qrz.rank();
    MatrixXd basis;
    if (rank < Z.cols() && rank >= X.cols()) {
        basis = (qrz.householderQ() * MatrixXd::Identity(Z.rows(), Z.cols())).leftCols(rank);
    }
    const TslsFit fit = tsls(y, X, basis.size() > 0 ? basis : Z);
    RotationFit out;
    out.coefficients = fit.coefficients;
    out.residuals = fit.residuals;
    // Row i of P_Z X is X'Z(Z'Z)^{-1} z_i transposed.
    out.z_tilde = fit.projected_x;
    out.G = fit.xpzx / static_cast<double>(X.rows());
    return out;
}

EstimateResult FourSplitResult::as_estimate() const {
    EstimateResult e;
    e.lambda = lambda;
    e.covariance = covariance;
    e.factor_mean_covariance = factor_mean_covariance;
    e.method = Method::four_split;
    e.names = names;
    e.diagnostics = diagnostics;
    finalize_covariance(e);
    return e;
}

FourSplitResult four_split_from_betas(const std::array<MatrixXd, 4>& betas, const VectorXd& mean_returns,
                                      const MatrixXd& lrv, Index T, const FourSplitOptions& options) {
    const Index N = betas[0].rows();
    const Index kF = betas[0].cols();
    for (const auto& b : betas) {
        if (b.rows() != N || b.cols() != kF) throw Error(ErrorKind::dimension, "split betas differ in shape");
    }
    if (mean_returns.size() != N) throw Error(ErrorKind::dimension, "mean returns and betas differ in size");
    if (lrv.rows() != kF || lrv.cols() != kF) throw Error(ErrorKind::dimension, "lrv has wrong shape");

    MatrixXd A = options.A;
    if (A.size() == 0) {
        A = default_proxy_matrix(options.k_v, kF);
    } else {
        if (A.rows() != options.k_v) {
            throw Error(ErrorKind::dimension, "proxy matrix A must have k_v = " + std::to_string(options.k_v) + " rows");
        }
        if (A.rows() > kF) {
            throw Error(ErrorKind::identification, "k_v = " + std::to_string(A.rows()) +
                                                       " exceeds the number of factors (" + std::to_string(kF) + ")");
        }
        if (A.cols() != kF) throw Error(ErrorKind::dimension, "proxy matrix A must have k_F columns");
        Eigen::FullPivLU<MatrixXd> lu(A);
        if (lu.rank() < A.rows()) throw Error(ErrorKind::identification, "proxy matrix A lacks full row rank");
    }
    const Index kv = A.rows();
    const Index k = kF + kv;
    const double n = static_cast<double>(N);

    FourSplitResult result;
    result.lambda = VectorXd::Zero(kF);
    MatrixXd S(N, 4 * k);    // stacked z_tilde_i * e_i
    MatrixXd H(4 * k, kF);   // G^{-1} R, block by block
    for (int j = 1; j <= 4; ++j) {
        const auto spec = make_iv_spec(j, A);
        const auto design = build_iv_design(betas, spec);
        RotationFit fit;
        try {
            fit = per_rotation_tsls(mean_returns, design.X, design.Z);
        } catch (const SingularError& e) {
            throw SingularError("rotation " + std::to_string(j) + ": " + e.what(), e.rcond());
        } catch (const Error& e) {
            throw Error(e.kind(), "rotation " + std::to_string(j) + ": " + e.what());
        }
        const auto jj = static_cast<std::size_t>(j - 1);
        const Index off = (j - 1) * k;
        result.lambda_per_rotation[jj] = fit.coefficients.head(kF);
        result.a_hat_per_rotation[jj] = fit.coefficients.tail(kv);
        result.lambda += fit.coefficients.head(kF);
        S.middleCols(off, k) = fit.z_tilde.array().colwise() * fit.residuals.array();
        MatrixXd Rj = MatrixXd::Zero(k, kF);
        Rj.topRows(kF) = 0.25 * MatrixXd::Identity(kF, kF);
        H.middleRows(off, k) = fit.G.ldlt().solve(Rj);
        result.diagnostics["rcond_G" + std::to_string(j)] = reciprocal_condition(fit.G);
    }
    result.lambda /= 4.0;

    // (1/N) H' Sigma0 H with Sigma0 = S'S / N.
    const MatrixXd SH = S * H;
    result.sigma_iv = SH.transpose() * SH / (n * n);
    result.sigma_iv = 0.5 * (result.sigma_iv + result.sigma_iv.transpose());
    result.factor_mean_covariance = lrv / static_cast<double>(T);
    result.covariance = result.sigma_iv + result.factor_mean_covariance;
    result.diagnostics["k_v"] = static_cast<double>(kv);
    result.diagnostics["N"] = n;
    result.diagnostics["T"] = static_cast<double>(T);
    return result;
}

FourSplitResult four_split_estimate(const ReturnsPanel& returns, const FactorPanel& factors, const MatrixXd& lrv,
                                    const FourSplitOptions& options) {
    const Index T = returns.n_periods();
    if (factors.n_periods() != T) throw Error(ErrorKind::alignment, "returns and factors have different period counts");
    const auto scheme = make_split_scheme(T, options.layout);
    if (scheme.tau <= factors.n_factors() + 1) {
        throw Error(ErrorKind::insufficient_data, "split size " + std::to_string(scheme.tau) + " too small for " +
                                                      std::to_string(factors.n_factors()) + " factors");
    }
    const auto sets = subsample_betas(returns, factors, scheme);
    const VectorXd rbar = returns.values.rowwise().mean();
    auto result = four_split_from_betas({sets[0].betas, sets[1].betas, sets[2].betas, sets[3].betas}, rbar, lrv, T,
                                        options);
    result.names = factors.names;
    result.diagnostics["tau"] = static_cast<double>(scheme.tau);
    result.diagnostics["dropped_periods"] = static_cast<double>(T - 4 * scheme.tau);
    return result;
}

}  // namespace premia
