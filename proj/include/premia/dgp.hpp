#pragma once

#include "premia/calibration.hpp"
#include "premia/panel_data.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace premia {

/// How xi_i is drawn from sigma_xi2: as its variance, or as its standard
/// deviation. The second convention is the one that reproduces the
/// published experiment-2 ranges (see README).
enum class XiDraw { variance, std_dev };

const char* to_string(XiDraw x) noexcept;
XiDraw parse_xi_draw(const std::string& name);

struct DgpParams {
    double theta_phi = 0.0;
    double alpha = 0.1;
    double sigma_xi2 = 0.3;
    double varphi = 0.001;
    XiDraw xi_draw = XiDraw::variance;
    CalibrationSummary calibration = reference_calibration();
    std::uint64_t seed = 20240601;
    /// Overrides for the panel size; zero means the calibration's N and T.
    Index N = 0;
    Index T = 0;

    Index n_assets() const { return N > 0 ? N : calibration.N; }
    Index n_periods() const { return T > 0 ? T : calibration.T; }
    void validate() const;
};

struct DgpTruth {
    VectorXd lambda;          // 4
    MatrixXd betas;           // N x 4
    VectorXd phi;             // N, loadings on the missing factor
    VectorXd g;               // T, missing factor
    VectorXd delta;           // N
    MatrixXd idiosyncratic;   // N x T: r - lambda'beta - (F - EF)'beta - g phi
    VectorXd factor_mean;     // 4, EF
    VectorXd lambda_tilde;    // 4, lambda + Fbar - EF
    MatrixXd factor_variance; // 4 x 4 model-implied Var((F; mom))
    MatrixXd rstar;           // N x T de-meaned part of returns
};

struct SimulatedSample {
    ReturnsPanel returns;
    FactorPanel factors;  // mkt, smb, hml, mom
    DgpTruth truth;
};

/// Which random streams a new draw replaces.
enum class DrawScope { new_time_series, new_cross_section, both };

/// Replication indexes for the two stream families. Time-series streams
/// (G, w, g, u, v) are keyed by ts; cross-section streams (gamma, phi, xi,
/// eps) by cs.
struct DrawIndex {
    std::uint64_t ts = 0;
    std::uint64_t cs = 0;

    DrawIndex next(DrawScope scope) const;
};

/// Engine for one named stream, seeded from (seed, name, index).
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index);

/// Model-implied population covariance of (F; mom) when G has variance
/// I/T. periods = 0 uses the calibration's T.
MatrixXd implied_factor_variance(const CalibrationSummary& c, Index periods = 0);

SimulatedSample simulate(const DgpParams& params, const DrawIndex& index = {});

}  // namespace premia
