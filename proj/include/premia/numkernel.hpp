#pragma once

#include <Eigen/Dense>

namespace premia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Reciprocal condition below which a normal matrix counts as singular.
inline constexpr double kSingularRcond = 1e-12;

struct OlsFit {
    VectorXd coefficients;  // slopes only; the intercept is reported separately
    double intercept = 0.0;
    VectorXd residuals;
    VectorXd fitted;
};

/// Least squares of y on X (plus a leading constant when intercept is set).
/// Throws SingularError when the normal matrix has rcond below kSingularRcond.
OlsFit ols(const VectorXd& y, const MatrixXd& X, bool intercept = false);

/// Multi-response variant: each column of Y regressed on the same design.
/// Returns slopes as k x m and intercepts as an m-vector (zero if unused).
struct OlsMultiFit {
    MatrixXd coefficients;  // k x m
    VectorXd intercepts;    // m
    MatrixXd residuals;     // n x m
};
OlsMultiFit ols_multi(const MatrixXd& Y, const MatrixXd& X, bool intercept = false);

struct TslsFit {
    VectorXd coefficients;   // k
    VectorXd residuals;      // n
    MatrixXd xpzx;           // X' P_Z X, k x k
    MatrixXd ztz_inverse;    // (Z'Z)^{-1}, kz x kz
    MatrixXd projected_x;    // P_Z X, n x k
};

/// b = (X'P_Z X)^{-1} X'P_Z y with P_Z = Z(Z'Z)^{-1}Z'.
TslsFit tsls(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z);

struct PcaResult {
    MatrixXd factors;             // T x m, orthonormal columns
    MatrixXd loadings;            // m x N
    VectorXd explained_fraction;  // m
    VectorXd singular_values;     // all of them, descending
};

/// Principal components of an N x T panel. Factors are the leading left
/// singular vectors of the T x N matrix (assets demeaned over time when
/// demean is set), each with unit sum of squares over t.
PcaResult pca(const MatrixXd& panel, Index m, bool demean = true);

struct PinvResult {
    MatrixXd matrix;
    Index rank = 0;
};

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude below rel_tol times the largest magnitude are treated as zero.
PinvResult pinv_sym(const MatrixXd& S, double rel_tol = 1e-10);

/// Ratio of smallest to largest eigenvalue magnitude of a symmetric matrix.
double reciprocal_condition(const MatrixXd& S);

/// Smallest eigenvalue of the symmetrised input.
double min_eigenvalue(const MatrixXd& S);

}  // namespace premia
