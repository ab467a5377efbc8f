#include "premia/bias_decomposition.hpp"

#include "premia/errors.hpp"

#include <cmath>

namespace premia {

BiasTerms bias_decomposition(const DgpTruth& truth, const BetaSet& betas_full, const FactorPanel& factors) {
    const Index T = factors.n_periods();
    const Index kF = factors.n_factors();
    const MatrixXd& bh = betas_full.betas;
    if (bh.cols() != kF || truth.factor_variance.rows() != kF || truth.idiosyncratic.cols() != T ||
        truth.g.size() != T || truth.phi.size() != bh.rows()) {
        throw Error(ErrorKind::dimension, "bias decomposition: truth and estimates disagree in shape");
    }
    const double t = static_cast<double>(T);
    const double sT = std::sqrt(t);

    const MatrixXd Ft = factors.values.rowwise() - factors.values.colwise().mean();  // T x k
    const auto sf = truth.factor_variance.ldlt();
    // Row i: Sigma_F^{-1} (1/T) sum_t F~_t e_it.
    const MatrixXd U = sf.solve(Ft.transpose() * truth.idiosyncratic.transpose() / t).transpose();  // N x k
    const VectorXd eta_T = sf.solve(Ft.transpose() * truth.g / sT);
    const double eta_v = truth.g.sum() / sT;
    const VectorXd& lt = truth.lambda_tilde;

    const auto bb = (bh.transpose() * bh).ldlt();
    BiasTerms out;
    out.attenuation = -bb.solve(U.transpose() * U * lt);
    out.omitted_variable = bb.solve(bh.transpose() * (truth.phi / sT)) * (eta_v - eta_T.dot(lt));
    return out;
}

}  // namespace premia
