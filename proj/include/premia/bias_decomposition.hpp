#pragma once

#include "premia/dgp.hpp"
#include "premia/two_pass.hpp"

namespace premia {

struct BiasTerms {
    VectorXd attenuation;        // B^A
    VectorXd omitted_variable;   // B^OV
};

/// Infeasible decomposition of the two-pass error using simulation truth.
/// The population factor variance in the truth stands in for Sigma_F.
BiasTerms bias_decomposition(const DgpTruth& truth, const BetaSet& betas_full, const FactorPanel& factors);

}  // namespace premia
