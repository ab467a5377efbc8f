#pragma once

#include "premia/panel_data.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace premia {

struct CalibrationSummary {
    VectorXd mu_gamma;   // 3
    MatrixXd V_gamma;    // 3 x 3
    double mu_phi = 0.0;
    double v_phi = 0.0;
    double sigma_eps2 = 0.0;
    VectorXd eta0_F;     // 3
    MatrixXd eta_F;      // 3 x 3, row k = loadings of factor k on G
    MatrixXd Sigma_res;  // 3 x 3
    double eta0_mom = 0.0;
    VectorXd eta_mom;    // 3
    double sigma_mom2 = 0.0;
    VectorXd lambda_true;  // 4: three observed factors then momentum
    Index N = 0;
    Index T = 0;
    std::vector<std::string> factor_names{"mkt", "smb", "hml", "mom"};

    /// Throws a parameter error when a field breaks its invariant.
    void validate() const;
};

/// Factor strengths: sum over assets of squared loadings times factor variance.
struct StrengthReport {
    VectorXd pc_strengths;        // first four principal components
    VectorXd pc_explained;        // explained fractions of the same
    VectorXd factor_strengths;    // observed factors, joint regression betas
    std::vector<std::string> factor_names;
};

StrengthReport strength_report(const ReturnsPanel& returns, const FactorPanel& factors);

/// Calibrates the simulation design on a return panel, three observed
/// factors and a momentum series aligned with them.
CalibrationSummary calibrate(const ReturnsPanel& returns, const FactorPanel& ff_factors, const VectorXd& momentum);

/// Built-in calibration for N = 100, T = 504 used when no data files are
/// available. See README for how it was constructed.
CalibrationSummary reference_calibration();

std::string to_json(const CalibrationSummary& c, const StrengthReport* strengths = nullptr);
CalibrationSummary calibration_from_json(const std::string& text);
CalibrationSummary load_calibration(const std::filesystem::path& path);

}  // namespace premia
