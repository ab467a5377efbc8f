#include "premia/numkernel.hpp"

#include "premia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace premia {

namespace {

MatrixXd with_constant(const MatrixXd& X) {
    MatrixXd D(X.rows(), X.cols() + 1);
    D.col(0).setOnes();
    D.rightCols(X.cols()) = X;
    return D;
}

// rcond of D'D from the singular values of the triangular QR factor.
double normal_rcond(const MatrixXd& R) {
    if (R.cols() == 0) return 1.0;
    Eigen::JacobiSVD<MatrixXd> svd(R);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    if (!(smax > 0.0)) return 0.0;
    const double ratio = s(s.size() - 1) / smax;
    return ratio * ratio;
}

}  // namespace

OlsMultiFit ols_multi(const MatrixXd& Y, const MatrixXd& X, bool intercept) {
    const MatrixXd D = intercept ? with_constant(X) : X;
    if (Y.rows() != D.rows()) throw Error(ErrorKind::dimension, "ols: y and X row counts differ");
    if (D.rows() <= D.cols()) {
        throw Error(ErrorKind::insufficient_data, "ols: need more observations (" + std::to_string(D.rows()) +
                                                      ") than regressors (" + std::to_string(D.cols()) + ")");
    }
    Eigen::HouseholderQR<MatrixXd> qr(D);
    const MatrixXd R = qr.matrixQR().topRows(D.cols()).triangularView<Eigen::Upper>();
    const double rc = normal_rcond(R);
    if (rc < kSingularRcond) throw SingularError("ols: design matrix is rank deficient", rc);

    const MatrixXd B = qr.solve(Y);
    OlsMultiFit fit;
    fit.residuals = Y - D * B;
    if (intercept) {
        fit.intercepts = B.row(0).transpose();
        fit.coefficients = B.bottomRows(X.cols());
    } else {
        fit.intercepts = VectorXd::Zero(Y.cols());
        fit.coefficients = B;
    }
    return fit;
}

OlsFit ols(const VectorXd& y, const MatrixXd& X, bool intercept) {
    auto multi = ols_multi(y, X, intercept);
    OlsFit fit;
    fit.coefficients = multi.coefficients.col(0);
    fit.intercept = multi.intercepts(0);
    fit.residuals = multi.residuals.col(0);
    fit.fitted = y - fit.residuals;
    return fit;
}

TslsFit tsls(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z) {
    const Index n = X.rows();
    const Index k = X.cols();
    const Index kz = Z.cols();
    if (y.size() != n || Z.rows() != n) throw Error(ErrorKind::dimension, "tsls: row counts differ");
    if (kz < k) {
        throw Error(ErrorKind::identification, "tsls: under-identified, " + std::to_string(kz) +
                                                   " instruments for " + std::to_string(k) + " regressors");
    }
    if (n < kz) throw Error(ErrorKind::insufficient_data, "tsls: fewer observations than instruments");

    // Z = QR, so P_Z = QQ' and the estimator is OLS of Q'y on Q'X.
    Eigen::HouseholderQR<MatrixXd> qrz(Z);
    const MatrixXd Rz = qrz.matrixQR().topRows(kz).triangularView<Eigen::Upper>();
    const double rcz = normal_rcond(Rz);
    if (rcz < kSingularRcond) throw SingularError("tsls: instrument matrix Z'Z is singular", rcz);
    const MatrixXd Q = qrz.householderQ() * MatrixXd::Identity(n, kz);

    const MatrixXd QtX = Q.transpose() * X;
    const VectorXd Qty = Q.transpose() * y;
    Eigen::HouseholderQR<MatrixXd> qrx(QtX);
    const MatrixXd Rx = qrx.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double rcx = normal_rcond(Rx);
    if (rcx < kSingularRcond) throw SingularError("tsls: X'P_Z X is singular", rcx);

    TslsFit fit;
    fit.coefficients = qrx.solve(Qty);
    fit.residuals = y - X * fit.coefficients;
    fit.xpzx = QtX.transpose() * QtX;
    fit.projected_x = Q * QtX;
    const MatrixXd Rinv = Rz.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(kz, kz));
    fit.ztz_inverse = Rinv * Rinv.transpose();
    return fit;
}

PcaResult pca(const MatrixXd& panel, Index m, bool demean) {
    const Index N = panel.rows();
    const Index T = panel.cols();
    if (m < 1 || m > std::min(N, T)) {
        throw Error(ErrorKind::dimension, "pca: requested " + std::to_string(m) + " components from a " +
                                              std::to_string(N) + " x " + std::to_string(T) + " panel");
    }
    MatrixXd M = panel.transpose();  // T x N
    if (demean) M.rowwise() -= M.colwise().mean();

    Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double total = s.squaredNorm();

    PcaResult out;
    out.singular_values = s;
    out.factors = svd.matrixU().leftCols(m);
    out.loadings = s.head(m).asDiagonal() * svd.matrixV().leftCols(m).transpose();
    out.explained_fraction = total > 0.0 ? VectorXd(s.head(m).array().square() / total) : VectorXd::Zero(m);
    for (Index c = 0; c < m; ++c) {
        Index arg = 0;
        out.loadings.row(c).cwiseAbs().maxCoeff(&arg);
        if (out.loadings(c, arg) < 0.0) {
            out.loadings.row(c) *= -1.0;
            out.factors.col(c) *= -1.0;
        }
    }
    return out;
}

PinvResult pinv_sym(const MatrixXd& S, double rel_tol) {
    if (S.rows() != S.cols()) throw Error(ErrorKind::dimension, "pinv_sym: matrix is not square");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw Error(ErrorKind::contract, "pinv_sym: input is not symmetric");
    }
    PinvResult out;
    out.matrix = MatrixXd::Zero(S.rows(), S.cols());
    if (S.size() == 0) return out;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
    const VectorXd& ev = es.eigenvalues();
    const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
    VectorXd inv = VectorXd::Zero(ev.size());
    for (Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) > cutoff && ev(i) != 0.0) {
            inv(i) = 1.0 / ev(i);
            ++out.rank;
        }
    }
    out.matrix = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    return out;
}

double reciprocal_condition(const MatrixXd& S) {
    if (S.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    const VectorXd a = es.eigenvalues().cwiseAbs();
    const double mx = a.maxCoeff();
    return mx > 0.0 ? a.minCoeff() / mx : 0.0;
}

double min_eigenvalue(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace premia
